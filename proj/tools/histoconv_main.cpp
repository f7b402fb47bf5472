#include "histoconv/cli.hpp"

int main(int argc, char** argv) { return histoconv::run_cli(argc, argv); }
