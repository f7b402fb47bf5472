#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "helpers.hpp"
#include "histoconv/canvas.hpp"
#include "histoconv/filter_export.hpp"
#include "histoconv/image.hpp"
#include "histoconv/model.hpp"
#include "histoconv/plot.hpp"

namespace fs = std::filesystem;
using namespace histoconv;

namespace {

struct TempTree {
  fs::path root;
  explicit TempTree(const std::string& tag) {
    root = fs::temp_directory_path() / ("histoconv_cli_" + tag + "_" +
                                        std::to_string(::getpid()));
    fs::remove_all(root);
    fs::create_directories(root);
  }
  ~TempTree() { fs::remove_all(root); }
};

// Runs the installed binary with sh; returns the exit code and captures stdout.
int run_tool(const std::string& args, std::string* stdout_text = nullptr) {
  static int counter = 0;
  const fs::path cap = fs::temp_directory_path() /
                       ("histoconv_cli_out_" + std::to_string(::getpid()) + "_" +
                        std::to_string(counter++) + ".txt");
  const std::string cmd =
      std::string(HISTOCONV_BIN) + " " + args + " >" + cap.string() + " 2>/dev/null";
  const int raw = std::system(cmd.c_str());
  if (stdout_text) {
    std::ifstream in(cap);
    std::ostringstream os;
    os << in.rdbuf();
    *stdout_text = os.str();
  }
  fs::remove(cap);
  REQUIRE(raw != -1);
  return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
}

// Two texture families so a tiny net can tell the classes apart.
void write_textured_dataset(const fs::path& root, int per_class, std::int64_t side = 64) {
  std::mt19937 rng(99);
  for (int ci = 0; ci < 2; ++ci) {
    const fs::path dir = root / (ci == 0 ? "alpha" : "beta");
    fs::create_directories(dir);
    for (int i = 0; i < per_class; ++i) {
      ImageU8 img = make_image_u8(side, side, 3);
      for (std::int64_t y = 0; y < side; ++y)
        for (std::int64_t x = 0; x < side; ++x) {
          const auto noise = std::uint8_t(rng() % 40);
          std::uint8_t r = noise, g = noise, b = noise;
          if (ci == 0) {
            if (((x / 4) & 1) == 0) r = std::uint8_t(180 + rng() % 40);
          } else {
            if (((y / 4) & 1) == 0) b = std::uint8_t(180 + rng() % 40);
          }
          img.at(y, x, 0) = r;
          img.at(y, x, 1) = g;
          img.at(y, x, 2) = b;
        }
      char name[32];
      std::snprintf(name, sizeof(name), "img%03d.png", i);
      write_png((dir / name).string(), img);
    }
  }
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) out.push_back(line);
  return out;
}

bool has_pixel(const ImageU8& img, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  for (std::int64_t y = 0; y < img.height; ++y)
    for (std::int64_t x = 0; x < img.width; ++x)
      if (img.at(y, x, 0) == r && img.at(y, x, 1) == g && img.at(y, x, 2) == b) return true;
  return false;
}

std::string file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace

// ---------------------------------------------------------------------------
// bitmap font and canvas

TEST_CASE("font glyphs") {
  SUBCASE("digits and letters have distinct non-empty bitmaps") {
    const auto& one = glyph5x7('1');
    const auto& two = glyph5x7('2');
    bool any_bit = false;
    for (int r = 0; r < 7; ++r) any_bit = any_bit || one[r] != 0;
    CHECK(any_bit);
    CHECK(one != two);
  }
  SUBCASE("rendering is case-insensitive") { CHECK(glyph5x7('A') == glyph5x7('a')); }
  SUBCASE("unknown characters fall back to one shared box glyph") {
    CHECK(glyph5x7('@') == glyph5x7('~'));
    CHECK(glyph5x7('@') != glyph5x7('o'));
  }
}

TEST_CASE("canvas primitives") {
  Canvas canvas(20, 10, Rgb{255, 255, 255});

  SUBCASE("set_pixel writes and clips") {
    canvas.set_pixel(3, 2, Rgb{10, 20, 30});
    canvas.set_pixel(-5, 2, Rgb{1, 2, 3});
    canvas.set_pixel(3, 1000, Rgb{1, 2, 3});
    const ImageU8& img = canvas.image();
    CHECK(img.at(2, 3, 0) == 10);
    CHECK(img.at(2, 3, 1) == 20);
    CHECK(img.at(2, 3, 2) == 30);
    CHECK(img.at(0, 0, 0) == 255);
  }

  SUBCASE("horizontal line covers the expected run") {
    canvas.draw_line(2, 5, 8, 5, Rgb{0, 0, 0});
    const ImageU8& img = canvas.image();
    for (std::int64_t x = 2; x <= 8; ++x) CHECK(img.at(5, x, 0) == 0);
    CHECK(img.at(5, 1, 0) == 255);
    CHECK(img.at(5, 9, 0) == 255);
  }

  SUBCASE("diagonal line touches both endpoints") {
    canvas.draw_line(0, 0, 19, 9, Rgb{0, 0, 0});
    const ImageU8& img = canvas.image();
    CHECK(img.at(0, 0, 0) == 0);
    CHECK(img.at(9, 19, 0) == 0);
  }

  SUBCASE("text metrics follow the fixed 6px advance") {
    CHECK(Canvas::text_width(1) == 5);
    CHECK(Canvas::text_width(4) == 23);
    CHECK(Canvas::text_width(4, 2) == 46);
    CHECK(Canvas::text_height(1) == 7);
    CHECK(Canvas::text_height(3) == 21);
  }

  SUBCASE("drawn text stays inside its advertised box") {
    Canvas big(100, 30, Rgb{255, 255, 255});
    big.draw_text(10, 5, "ab:12", Rgb{0, 0, 0});
    const ImageU8& img = big.image();
    bool any_ink = false;
    for (std::int64_t y = 0; y < 30; ++y)
      for (std::int64_t x = 0; x < 100; ++x)
        if (img.at(y, x, 0) == 0) {
          any_ink = true;
          CHECK(x >= 10);
          CHECK(x < 10 + Canvas::text_width(5));
          CHECK(y >= 5);
          CHECK(y < 5 + Canvas::text_height());
        }
    CHECK(any_ink);
  }

  SUBCASE("save_png writes a decodable file") {
    TempTree tmp("canvas");
    const auto path = (tmp.root / "c.png").string();
    canvas.save_png(path);
    const ImageU8 back = read_image_rgb8(path);
    CHECK(back.width == 20);
    CHECK(back.height == 10);
  }
}

// ---------------------------------------------------------------------------
// metrics csv

TEST_CASE("metrics csv writer and reader") {
  TempTree tmp("csv");
  const auto path = (tmp.root / "metrics.csv").string();

  SUBCASE("writer emits header plus one row per epoch, reader round-trips") {
    {
      MetricsCsvWriter w(path);
      w.append({1, 0.5, 0.25, 0.75, 0.125});
      w.append({2, 0.375, 0.5, 0.6875, 0.25});
    }
    const auto text = file_bytes(path);
    const auto lines = lines_of(text);
    REQUIRE(lines.size() == 3);
    CHECK(lines[0] == "epoch,train_loss,train_acc,val_loss,val_acc");
    CHECK(lines[1] == "1,0.5,0.25,0.75,0.125");

    const auto rows = load_metrics_csv(path);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].epoch == 1);
    CHECK(rows[0].train_loss == 0.5);
    CHECK(rows[1].val_acc == 0.25);
  }

  SUBCASE("general doubles survive the 9-significant-digit round trip") {
    const EpochMetrics m{7, 1.0986122886681098, 0.3333333333333333, 2.303, 0.6667};
    save_metrics_csv(path, {m});
    const auto rows = load_metrics_csv(path);
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].train_loss == doctest::Approx(m.train_loss).epsilon(1e-8));
    CHECK(rows[0].train_acc == doctest::Approx(m.train_acc).epsilon(1e-8));
  }

  SUBCASE("wrong header is rejected") {
    std::ofstream(path) << "epoch,loss\n1,2\n";
    CHECK_THROWS_WITH_AS(load_metrics_csv(path), doctest::Contains("line 1"), Error);
  }

  SUBCASE("malformed row is rejected with its line number") {
    std::ofstream(path) << kMetricsHeader << "\n1,0.5,0.5,0.5,0.5\n2,oops,0.5,0.5,0.5\n";
    CHECK_THROWS_WITH_AS(load_metrics_csv(path), doctest::Contains("line 3"), Error);
  }

  SUBCASE("missing file is rejected") {
    CHECK_THROWS_AS(load_metrics_csv((tmp.root / "absent.csv").string()), Error);
  }
}

// ---------------------------------------------------------------------------
// curve plots

TEST_CASE("curve plots") {
  TempTree tmp("plot");
  const auto csv = (tmp.root / "metrics.csv").string();

  SUBCASE("one-row csv still renders both 640x480 charts with both series") {
    save_metrics_csv(csv, {{1, 0.9, 0.4, 1.0, 0.35}});
    const auto paths = plot_curves(csv, tmp.root.string());
    REQUIRE(paths.size() == 2);
    CHECK(fs::path(paths[0]).filename() == "loss.png");
    CHECK(fs::path(paths[1]).filename() == "accuracy.png");
    for (const auto& p : paths) {
      const ImageU8 img = read_image_rgb8(p);
      CHECK(img.width == 640);
      CHECK(img.height == 480);
      CHECK(has_pixel(img, 31, 119, 180));   // train series
      CHECK(has_pixel(img, 255, 127, 14));   // val series
      CHECK(has_pixel(img, 0, 0, 0));        // axes and labels
    }
  }

  SUBCASE("rendering is deterministic: regenerating reproduces identical bytes") {
    std::vector<EpochMetrics> rows;
    for (int e = 1; e <= 23; ++e)
      rows.push_back({e, 1.0 / e, 1.0 - 0.5 / e, 1.2 / e, 1.0 - 0.7 / e});
    save_metrics_csv(csv, rows);
    plot_curves(csv, tmp.root.string());
    const auto first = file_bytes((tmp.root / "loss.png").string());
    plot_curves(csv, tmp.root.string());
    CHECK(file_bytes((tmp.root / "loss.png").string()) == first);
  }

  SUBCASE("constant series (degenerate y-range) still renders") {
    save_metrics_csv(csv, {{1, 0.5, 0.5, 0.5, 0.5}, {2, 0.5, 0.5, 0.5, 0.5}});
    CHECK_NOTHROW(plot_curves(csv, tmp.root.string()));
  }

  SUBCASE("empty csv is rejected") {
    save_metrics_csv(csv, {});
    CHECK_THROWS_WITH_AS(plot_curves(csv, tmp.root.string()), doctest::Contains("no rows"),
                         Error);
  }
}

// ---------------------------------------------------------------------------
// filter grids

TEST_CASE("filter grid rendering") {
  SUBCASE("3-channel 3x3 filters: 32 tiles in an 8x4 grid of 48px tiles") {
    TensorF w({3, 3, 3, 32});
    std::mt19937 rng(5);
    std::normal_distribution<float> dist(0.0f, 1.0f);
    for (auto& v : w.data()) v = dist(rng);
    const ImageU8 img = render_filter_grid(w);
    CHECK(img.width == 8 * 48 + 9 * 2);   // 402
    CHECK(img.height == 4 * 48 + 5 * 2);  // 202
  }

  SUBCASE("constant filter maps to mid gray at its tile, row-major placement") {
    TensorF w({3, 3, 3, 32});
    std::mt19937 rng(6);
    std::normal_distribution<float> dist(0.0f, 1.0f);
    for (auto& v : w.data()) v = dist(rng);
    // filter 9 sits at grid row 1, column 1
    for (std::int64_t ky = 0; ky < 3; ++ky)
      for (std::int64_t kx = 0; kx < 3; ++kx)
        for (std::int64_t c = 0; c < 3; ++c) w(ky, kx, c, 9) = 0.7f;
    const ImageU8 img = render_filter_grid(w);
    const std::int64_t y0 = 2 + 1 * (48 + 2), x0 = 2 + 1 * (48 + 2);
    for (std::int64_t dy : {0, 24, 47})
      for (std::int64_t dx : {0, 24, 47}) {
        CHECK(img.at(y0 + dy, x0 + dx, 0) == 128);
        CHECK(img.at(y0 + dy, x0 + dx, 1) == 128);
        CHECK(img.at(y0 + dy, x0 + dx, 2) == 128);
      }
  }

  SUBCASE("min and max weights map to 0 and 255 in an rgb tile") {
    TensorF w = TensorF::zeros({1, 2, 3, 1});
    w(0, 0, 0, 0) = -1.0f;  // min -> shade 0
    w(0, 1, 0, 0) = 3.0f;   // max -> shade 255
    const ImageU8 img = render_filter_grid(w);  // one 32x16 tile, 2px border
    CHECK(img.width == 1 * 32 + 2 * 2);
    CHECK(img.height == 1 * 16 + 2 * 2);
    CHECK(img.at(2, 2, 0) == 0);
    CHECK(img.at(2, 2 + 16, 0) == 255);
  }

  SUBCASE("deeper layers render per-channel grayscale mosaics") {
    TensorF w({3, 3, 32, 64});
    for (auto& v : w.data()) v = 0.25f;  // all constant -> all mid gray
    const ImageU8 img = render_filter_grid(w);
    // 32 channels -> 6x6 patch mosaic of 18px patches with 1px gaps = 113px tiles
    CHECK(img.width == 8 * 113 + 9 * 2);
    CHECK(img.height == 8 * 113 + 9 * 2);
    CHECK(img.at(2, 2, 0) == 128);
    CHECK(img.at(2, 2, 1) == 128);
    // mosaic gap pixel inside the first tile stays at the background shade
    CHECK(img.at(2 + 18, 2 + 18, 0) == 0);
  }

  SUBCASE("single-channel filters make one patch per tile") {
    TensorF w = TensorF::zeros({3, 3, 1, 4});
    for (auto& v : w.data()) v = 1.0f;
    const ImageU8 img = render_filter_grid(w);
    CHECK(img.width == 4 * 18 + 5 * 2);
    CHECK(img.height == 1 * 18 + 2 * 2);
  }

  SUBCASE("bad shapes are rejected") {
    CHECK_THROWS_AS(render_filter_grid(TensorF({3, 3, 3})), Error);
    CHECK_THROWS_AS(render_filter_grid(TensorF::zeros({0, 3, 3, 1})), Error);
  }
}

TEST_CASE("filter export over a full model") {
  TempTree tmp("filters");
  const Model<float> model = build_reference_model<float>(3, 11);
  const auto paths = export_filters(model, tmp.root.string());
  REQUIRE(paths.size() == 3);
  CHECK(fs::path(paths[0]).filename() == "filters_conv1.png");
  CHECK(fs::path(paths[2]).filename() == "filters_conv3.png");
  const ImageU8 g1 = read_image_rgb8(paths[0]);
  CHECK(g1.width == 402);
  CHECK(g1.height == 202);
}

// ---------------------------------------------------------------------------
// command-line tool, exercised as a subprocess

TEST_CASE("cli usage errors exit with code 2") {
  CHECK(run_tool("") == 2);
  CHECK(run_tool("bogus-verb") == 2);
  CHECK(run_tool("train") == 2);  // no --data/--out
  CHECK(run_tool("train --data /nowhere --classes a,b --out /tmp/x --epochs 0") == 2);
  CHECK(run_tool("train --data /nowhere --classes a,b --out /tmp/x --dropout 1.5") == 2);
  CHECK(run_tool("train --data /nowhere --classes a,b --out /tmp/x --ratios 0.5,0.5") == 2);
  CHECK(run_tool("evaluate") == 2);
  CHECK(run_tool("evaluate ckpt --split bogus") == 2);
  CHECK(run_tool("plot") == 2);
}

TEST_CASE("cli runtime failures exit with code 1") {
  CHECK(run_tool("evaluate /nonexistent.hcv") == 1);
  CHECK(run_tool("plot /nonexistent.csv") == 1);
  TempTree tmp("clifail");
  // --data pointing nowhere is a runtime failure, not a usage error
  CHECK(run_tool("train --data " + (tmp.root / "absent").string() +
                 " --classes a,b --out " + (tmp.root / "run").string()) == 1);
}

TEST_CASE("cli end-to-end: split, train, evaluate, predict, export, plot") {
  TempTree tmp("cliflow");
  const fs::path data = tmp.root / "data";
  write_textured_dataset(data, 8);
  const fs::path run = tmp.root / "run";

  SUBCASE("split writes a manifest and reports counts") {
    std::string out;
    const int rc = run_tool("split --data " + data.string() + " --classes alpha,beta --out " +
                                (tmp.root / "sp").string() + " --seed 4",
                            &out);
    CHECK(rc == 0);
    CHECK(fs::exists(tmp.root / "sp" / "manifest.txt"));
    CHECK(out.find("train 12") != std::string::npos);
    CHECK(out.find("val 2") != std::string::npos);
  }

  SUBCASE("train produces the full artifact set; downstream verbs consume it") {
    const std::string train_args = "train --data " + data.string() +
                                   " --classes alpha,beta --epochs 2 --batch-size 6 --seed 3 "
                                   "--out " +
                                   run.string();
    REQUIRE(run_tool(train_args) == 0);
    for (const char* name : {"manifest.txt", "config.txt", "metrics.csv", "ckpt_ep2.hcv",
                             "loss.png", "accuracy.png", "filters_conv1.png",
                             "filters_conv2.png", "filters_conv3.png"})
      CHECK(fs::exists(run / name));
    CHECK(load_metrics_csv((run / "metrics.csv").string()).size() == 2);

    const std::string ckpt = (run / "ckpt_ep2.hcv").string();

    std::string eval_out;
    CHECK(run_tool("evaluate " + ckpt + " --split test", &eval_out) == 0);
    REQUIRE(!lines_of(eval_out).empty());
    CHECK(lines_of(eval_out)[0].rfind("test,", 0) == 0);

    std::string eval_again;
    run_tool("evaluate " + ckpt + " --split test", &eval_again);
    CHECK(eval_out == eval_again);  // same checkpoint -> identical numbers

    std::string pred_out;
    const std::string img = (data / "alpha" / "img000.png").string();
    CHECK(run_tool("predict " + ckpt + " " + img + " " + img, &pred_out) == 0);
    const auto rows = lines_of(pred_out);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0] == rows[1]);  // same image twice -> identical rows
    // row: path,label,p0,p1 with probabilities summing to 1
    std::istringstream is(rows[0]);
    std::string path_field, label;
    double p0 = 0, p1 = 0;
    std::getline(is, path_field, ',');
    std::getline(is, label, ',');
    char comma;
    is >> p0 >> comma >> p1;
    CHECK(path_field == img);
    CHECK((label == "alpha" || label == "beta"));
    CHECK(p0 + p1 == doctest::Approx(1.0).epsilon(1e-6));
    const std::string argmax = p0 >= p1 ? "alpha" : "beta";
    CHECK(label == argmax);

    std::string pred_bad;
    CHECK(run_tool("predict " + ckpt + " " + (tmp.root / "nope.png").string(), &pred_bad) == 1);
    CHECK(lines_of(pred_bad)[0] == (tmp.root / "nope.png").string() + ",error");

    CHECK(run_tool("export-filters " + ckpt + " --out " + (tmp.root / "f").string()) == 0);
    CHECK(fs::exists(tmp.root / "f" / "filters_conv3.png"));

    CHECK(run_tool("plot " + (run / "metrics.csv").string() + " --out " +
                   (tmp.root / "p").string()) == 0);
    CHECK(fs::exists(tmp.root / "p" / "loss.png"));
    CHECK(fs::exists(tmp.root / "p" / "accuracy.png"));
  }

  SUBCASE("config file supplies defaults and flags override it") {
    const fs::path cfg = tmp.root / "run.cfg";
    std::ofstream(cfg) << "data = " << data.string() << "\n"
                       << "classes = alpha,beta\n"
                       << "epochs = 1\n"
                       << "batch-size = 6\n"
                       << "seed = 3\n"
                       << "# comment line\n";
    const fs::path run_a = tmp.root / "runa";
    REQUIRE(run_tool("train --config " + cfg.string() + " --out " + run_a.string()) == 0);
    CHECK(load_metrics_csv((run_a / "metrics.csv").string()).size() == 1);

    const fs::path run_b = tmp.root / "runb";
    REQUIRE(run_tool("train --config " + cfg.string() + " --epochs 2 --out " +
                     run_b.string()) == 0);
    CHECK(load_metrics_csv((run_b / "metrics.csv").string()).size() == 2);
  }

  SUBCASE("malformed config file is a usage error") {
    const fs::path cfg = tmp.root / "bad.cfg";
    std::ofstream(cfg) << "epochs: 1\n";
    CHECK(run_tool("train --config " + cfg.string() + " --out " + run.string()) == 2);
    std::ofstream(cfg) << "unknown-key = 1\n";
    CHECK(run_tool("train --config " + cfg.string() + " --out " + run.string()) == 2);
  }
}
