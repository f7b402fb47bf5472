#pragma once

namespace histoconv {

// Entry point for the histoconv command-line tool.
// Returns the process exit code: 0 success, 1 runtime failure, 2 usage error.
int run_cli(int argc, const char* const* argv);

}  // namespace histoconv
