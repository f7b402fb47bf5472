#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "helpers.hpp"
#include "histoconv/checkpoint.hpp"
#include "histoconv/model.hpp"
#include "histoconv/rng.hpp"
#include "histoconv/train.hpp"

namespace fs = std::filesystem;
using namespace histoconv;

namespace {

struct TempTree {
  fs::path root;
  explicit TempTree(const std::string& tag) {
    root = fs::temp_directory_path() /
           ("histoconv_ckpt_" + tag + "_" + std::to_string(::getpid()));
    fs::remove_all(root);
    fs::create_directories(root);
  }
  ~TempTree() { fs::remove_all(root); }
};

ModelSpec tiny_spec() {
  ModelSpec s;
  s.in_h = s.in_w = 12;
  s.in_c = 3;
  s.num_classes = 2;
  s.layers.push_back(LayerSpec::conv2d(3, 3, 2, Padding::same));
  s.layers.push_back(LayerSpec::relu());
  s.layers.push_back(LayerSpec::maxpool2d(2, 1));
  s.layers.push_back(LayerSpec::flatten());
  s.layers.push_back(LayerSpec::dense(5));
  s.layers.push_back(LayerSpec::relu());
  s.layers.push_back(LayerSpec::dropout(0.5));
  s.layers.push_back(LayerSpec::dense(2));
  s.layers.push_back(LayerSpec::softmax());
  return s;
}

DatasetManifest fake_manifest() {
  DatasetManifest m;
  m.classes = {"neg", "pos"};
  m.seed = 1234;
  m.ratios = SplitRatios{};
  for (int i = 0; i < 10; ++i) {
    DatasetEntry e;
    e.path = "data/f" + std::to_string(i) + ".png";
    e.class_index = i % 2;
    e.split = i < 8 ? Split::train : (i == 8 ? Split::val : Split::test);
    m.entries.push_back(e);
  }
  return m;
}

Checkpoint sample_checkpoint(std::uint64_t init_seed = 55) {
  auto model = build_model<float>(tiny_spec(), init_seed);
  auto states = attach_states(model.params);
  // make optimizer state non-trivial
  for (auto& st : states) {
    st.step = 17;
    for (auto& v : st.v.data()) v = 0.25f;
  }
  return make_checkpoint(model, states, fake_manifest(), /*epochs_completed=*/20,
                         /*train_seed=*/42);
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("checkpoint round trip preserves every field bitwise") {
  TempTree tmp("roundtrip");
  const auto path = (tmp.root / "model.hcv").string();
  auto ckpt = sample_checkpoint();
  save_checkpoint(path, ckpt);
  auto loaded = load_checkpoint(path);

  CHECK(loaded.version == ckpt.version);
  CHECK(loaded.param_names == ckpt.param_names);
  CHECK(loaded.classes == ckpt.classes);
  CHECK(loaded.data_seed == ckpt.data_seed);
  CHECK(loaded.epochs_completed == ckpt.epochs_completed);
  CHECK(loaded.train_seed == ckpt.train_seed);
  CHECK(loaded.rng_dump == ckpt.rng_dump);
  CHECK(loaded.ratios.train == ckpt.ratios.train);

  REQUIRE(loaded.params.size() == ckpt.params.size());
  for (std::size_t p = 0; p < ckpt.params.size(); ++p) {
    REQUIRE(loaded.params[p].shape() == ckpt.params[p].shape());
    double max_diff = 0;
    for (std::int64_t i = 0; i < ckpt.params[p].size(); ++i)
      max_diff = std::max(max_diff, double(std::abs(loaded.params[p][i] - ckpt.params[p][i])));
    CHECK(max_diff == 0.0);
  }
  REQUIRE(loaded.opt_states.size() == ckpt.opt_states.size());
  for (std::size_t p = 0; p < ckpt.opt_states.size(); ++p) {
    CHECK(loaded.opt_states[p].step == ckpt.opt_states[p].step);
    for (std::int64_t i = 0; i < ckpt.opt_states[p].v.size(); ++i)
      CHECK(loaded.opt_states[p].v[i] == ckpt.opt_states[p].v[i]);
  }
}

TEST_CASE("save -> load -> save produces byte-identical files") {
  TempTree tmp("bytes");
  const auto p1 = (tmp.root / "a.hcv").string();
  const auto p2 = (tmp.root / "b.hcv").string();
  auto ckpt = sample_checkpoint();
  save_checkpoint(p1, ckpt);
  save_checkpoint(p2, load_checkpoint(p1));
  const auto s1 = slurp(p1), s2 = slurp(p2);
  CHECK(s1.size() > 0);
  CHECK(s1 == s2);
}

TEST_CASE("loaded model reproduces forward outputs bitwise") {
  TempTree tmp("fwd");
  const auto path = (tmp.root / "model.hcv").string();
  auto model = build_model<float>(tiny_spec(), 91);
  auto states = attach_states(model.params);
  save_checkpoint(path, make_checkpoint(model, states, fake_manifest(), 5, 7));

  auto restored = model_from_checkpoint(load_checkpoint(path));
  std::mt19937 rng(1);
  auto x = testutil::cast<float>(testutil::random_normal({3, 12, 12, 3}, rng, 0.4));
  auto a = forward(model, x, Mode::eval);
  auto b = forward(restored, x, Mode::eval);
  for (std::int64_t i = 0; i < a.probs.size(); ++i) CHECK(a.probs[i] == b.probs[i]);
}

TEST_CASE("distinct errors for each corruption") {
  TempTree tmp("corrupt");
  const auto path = (tmp.root / "model.hcv").string();
  save_checkpoint(path, sample_checkpoint());
  const std::string good = slurp(path);

  auto write_bytes = [&](const std::string& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(bytes.data(), std::streamsize(bytes.size()));
  };

  SUBCASE("bad magic") {
    std::string bad = good;
    bad[0] = 'X';
    write_bytes(bad);
    CHECK_THROWS_WITH_AS(load_checkpoint(path), doctest::Contains("bad magic"), Error);
  }
  SUBCASE("version mismatch") {
    std::string bad = good;
    bad[4] = 9;
    write_bytes(bad);
    CHECK_THROWS_WITH_AS(load_checkpoint(path), doctest::Contains("version"), Error);
  }
  SUBCASE("truncation") {
    write_bytes(good.substr(0, good.size() / 2));
    CHECK_THROWS_WITH_AS(load_checkpoint(path), doctest::Contains("truncated"), Error);
  }
  SUBCASE("trailing garbage") {
    write_bytes(good + "extra");
    CHECK_THROWS_WITH_AS(load_checkpoint(path), doctest::Contains("trailing"), Error);
  }
  SUBCASE("missing file") {
    CHECK_THROWS_AS(load_checkpoint((tmp.root / "nope.hcv").string()), Error);
  }
}

TEST_CASE("failed save cleans up its temporary file") {
  TempTree tmp("cleanup");
  const auto dir = tmp.root / "no_such_dir";
  const auto path = (dir / "model.hcv").string();
  CHECK_THROWS_AS(save_checkpoint(path, sample_checkpoint()), Error);
  CHECK_FALSE(fs::exists(path + ".tmp"));
}

TEST_CASE("rng dump restores the dropout stream") {
  auto ckpt = sample_checkpoint();
  // the stored dump equals the stream derived for the next epoch
  auto expect = derive_stream(ckpt.train_seed, RngStream::dropout,
                              std::uint64_t(ckpt.epochs_completed));
  std::istringstream in(ckpt.rng_dump);
  std::mt19937 restored;
  in >> restored;
  for (int i = 0; i < 100; ++i) CHECK(restored() == expect());
}
