#include "histoconv/cli.hpp"

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "histoconv/augment.hpp"
#include "histoconv/checkpoint.hpp"
#include "histoconv/dataset.hpp"
#include "histoconv/filter_export.hpp"
#include "histoconv/image.hpp"
#include "histoconv/loss.hpp"
#include "histoconv/model.hpp"
#include "histoconv/plot.hpp"
#include "histoconv/train.hpp"

namespace fs = std::filesystem;

namespace histoconv {
namespace {

// Bad flags, bad config-file values, or contradictory settings: exit code 2.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct CliOptions {
  std::string data;
  std::vector<std::string> classes;
  std::int64_t epochs = 100;
  std::int64_t batch_size = 32;
  double lr = 1e-4;
  double rho = 0.9;
  double epsilon = 1e-7;
  double dropout = 0.5;
  std::int64_t pool_stride = 1;
  std::uint64_t seed = 42;
  std::vector<double> ratios{0.8, 0.1, 0.1};
  std::string out;
  std::string resume;
  std::string config;
  bool no_augment = false;

  // verb-specific
  std::string manifest_path;
  std::string split = "val";
  std::string eval_csv;
  std::string checkpoint;
  std::vector<std::string> checkpoints;
  std::vector<std::string> images;
  std::string metrics_csv;
};

std::string g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string g9(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

std::string join(const std::vector<std::string>& parts, char sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

std::vector<std::string> split_list(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream is(s);
  while (std::getline(is, item, sep)) out.push_back(item);
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// ---------------------------------------------------------------------------
// config file: plain `key = value` lines, '#' comments, same keys as flags

struct ConfigEntry {
  std::string key;
  std::string value;
  std::int64_t line = 0;
};

std::vector<ConfigEntry> parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config file: " + path);
  std::vector<ConfigEntry> entries;
  std::string line;
  for (std::int64_t line_no = 1; std::getline(in, line); ++line_no) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw UsageError(path + " line " + std::to_string(line_no) + ": expected 'key = value'");
    ConfigEntry e;
    e.key = trim(line.substr(0, eq));
    e.value = trim(line.substr(eq + 1));
    e.line = line_no;
    if (e.key.empty())
      throw UsageError(path + " line " + std::to_string(line_no) + ": empty key");
    entries.push_back(e);
  }
  return entries;
}

std::int64_t parse_int(const ConfigEntry& e, const std::string& path) {
  try {
    std::size_t used = 0;
    const std::int64_t v = std::stoll(e.value, &used);
    if (used == e.value.size()) return v;
  } catch (const std::exception&) {
  }
  throw UsageError(path + " line " + std::to_string(e.line) + ": '" + e.key +
                   "' needs an integer, got '" + e.value + "'");
}

std::uint64_t parse_uint(const ConfigEntry& e, const std::string& path) {
  try {
    std::size_t used = 0;
    const std::uint64_t v = std::stoull(e.value, &used);
    if (used == e.value.size() && e.value[0] != '-') return v;
  } catch (const std::exception&) {
  }
  throw UsageError(path + " line " + std::to_string(e.line) + ": '" + e.key +
                   "' needs a non-negative integer, got '" + e.value + "'");
}

double parse_double(const ConfigEntry& e, const std::string& path, const std::string& text) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used == text.size()) return v;
  } catch (const std::exception&) {
  }
  throw UsageError(path + " line " + std::to_string(e.line) + ": '" + e.key +
                   "' needs a number, got '" + text + "'");
}

void apply_config_entry(CliOptions& o, const ConfigEntry& e, const std::string& path) {
  if (e.key == "data") {
    o.data = e.value;
  } else if (e.key == "classes") {
    o.classes = split_list(e.value, ',');
  } else if (e.key == "epochs") {
    o.epochs = parse_int(e, path);
  } else if (e.key == "batch-size") {
    o.batch_size = parse_int(e, path);
  } else if (e.key == "lr") {
    o.lr = parse_double(e, path, e.value);
  } else if (e.key == "rho") {
    o.rho = parse_double(e, path, e.value);
  } else if (e.key == "epsilon") {
    o.epsilon = parse_double(e, path, e.value);
  } else if (e.key == "dropout") {
    o.dropout = parse_double(e, path, e.value);
  } else if (e.key == "pool-stride") {
    o.pool_stride = parse_int(e, path);
  } else if (e.key == "seed") {
    o.seed = parse_uint(e, path);
  } else if (e.key == "ratios") {
    const auto parts = split_list(e.value, ',');
    if (parts.size() != 3)
      throw UsageError(path + " line " + std::to_string(e.line) +
                       ": 'ratios' needs three comma-separated numbers");
    o.ratios.clear();
    for (const auto& p : parts) o.ratios.push_back(parse_double(e, path, trim(p)));
  } else if (e.key == "out") {
    o.out = e.value;
  } else if (e.key == "augment") {
    if (e.value == "1" || e.value == "true")
      o.no_augment = false;
    else if (e.value == "0" || e.value == "false")
      o.no_augment = true;
    else
      throw UsageError(path + " line " + std::to_string(e.line) +
                       ": 'augment' must be 0/1/true/false");
  } else {
    throw UsageError(path + " line " + std::to_string(e.line) + ": unknown key '" + e.key + "'");
  }
}

bool flag_set(const CLI::App* sub, const std::string& flag) {
  const CLI::Option* opt = sub->get_option_no_throw(flag);
  return opt != nullptr && opt->count() > 0;
}

// Applies the config file (explicit --config, else the resolved-config
// snapshot next to --resume) underneath any flags given on the command line.
// Returns the set of keys the file supplied.
std::set<std::string> layer_config_file(const CLI::App* sub, CliOptions& o) {
  std::string path = o.config;
  if (path.empty() && !o.resume.empty()) {
    const fs::path snap = fs::path(o.resume).parent_path() / "config.txt";
    std::error_code ec;
    if (fs::exists(snap, ec)) path = snap.string();
  }
  std::set<std::string> applied;
  if (path.empty()) return applied;
  for (const auto& e : parse_config_file(path)) {
    if (flag_set(sub, "--" + e.key)) continue;  // flags override the file
    apply_config_entry(o, e, path);
    applied.insert(e.key);
  }
  return applied;
}

void write_config_snapshot(const fs::path& path, const CliOptions& o) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write config snapshot: " + path.string());
  out << "data = " << o.data << "\n";
  out << "classes = " << join(o.classes, ',') << "\n";
  out << "epochs = " << o.epochs << "\n";
  out << "batch-size = " << o.batch_size << "\n";
  out << "lr = " << g17(o.lr) << "\n";
  out << "rho = " << g17(o.rho) << "\n";
  out << "epsilon = " << g17(o.epsilon) << "\n";
  out << "dropout = " << g17(o.dropout) << "\n";
  out << "pool-stride = " << o.pool_stride << "\n";
  out << "seed = " << o.seed << "\n";
  out << "ratios = " << g17(o.ratios[0]) << ',' << g17(o.ratios[1]) << ',' << g17(o.ratios[2])
      << "\n";
  out << "augment = " << (o.no_augment ? 0 : 1) << "\n";
  if (!out) throw Error("failed writing config snapshot: " + path.string());
}

// ---------------------------------------------------------------------------
// shared validation

void validate_hyperparams(const CliOptions& o) {
  if (o.epochs < 1) throw UsageError("--epochs must be >= 1");
  if (o.batch_size < 1) throw UsageError("--batch-size must be >= 1");
  if (!(o.lr > 0.0)) throw UsageError("--lr must be > 0");
  if (!(o.rho >= 0.0 && o.rho < 1.0)) throw UsageError("--rho must be in [0,1)");
  if (!(o.epsilon > 0.0)) throw UsageError("--epsilon must be > 0");
  if (!(o.dropout >= 0.0 && o.dropout < 1.0)) throw UsageError("--dropout must be in [0,1)");
  if (o.pool_stride < 1) throw UsageError("--pool-stride must be >= 1");
}

SplitRatios ratios_from(const CliOptions& o) {
  if (o.ratios.size() != 3) throw UsageError("--ratios needs three values: train,val,test");
  SplitRatios r{o.ratios[0], o.ratios[1], o.ratios[2]};
  try {
    r.validate();
  } catch (const Error& e) {
    throw UsageError(std::string("--ratios: ") + e.what());
  }
  return r;
}

AugmentConfig augment_from(const CliOptions& o) {
  return o.no_augment ? AugmentConfig::disabled_config() : AugmentConfig{};
}

DatasetManifest manifest_for_run_dir(const CliOptions& o, const fs::path& run_dir) {
  const std::string path =
      o.manifest_path.empty() ? (run_dir / "manifest.txt").string() : o.manifest_path;
  return load_manifest(path);
}

// ---------------------------------------------------------------------------
// verbs

int cmd_split(const CLI::App* sub, CliOptions& o) {
  layer_config_file(sub, o);
  if (o.data.empty()) throw UsageError("split needs --data");
  if (o.classes.empty()) throw UsageError("split needs --classes");
  if (o.out.empty()) throw UsageError("split needs --out");
  const SplitRatios ratios = ratios_from(o);

  const auto items = scan_dataset(o.data, o.classes);
  const DatasetManifest manifest = split_stratified(o.classes, items, ratios, o.seed);
  fs::create_directories(o.out);
  const auto path = (fs::path(o.out) / "manifest.txt").string();
  save_manifest(manifest, path);

  std::printf("train %lld\nval %lld\ntest %lld\n",
              (long long)manifest.split_count(Split::train),
              (long long)manifest.split_count(Split::val),
              (long long)manifest.split_count(Split::test));
  std::printf("manifest written to %s\n", path.c_str());
  return 0;
}

std::int64_t spec_pool_stride(const ModelSpec& spec) {
  for (const auto& l : spec.layers)
    if (l.kind == LayerKind::maxpool) return l.pool_stride;
  return 1;
}

double spec_dropout_rate(const ModelSpec& spec) {
  for (const auto& l : spec.layers)
    if (l.kind == LayerKind::dropout) return l.rate;
  return 0.0;
}

int cmd_train(const CLI::App* sub, CliOptions& o) {
  const std::set<std::string> from_file = layer_config_file(sub, o);
  const auto resolved = [&](const char* key) {
    return flag_set(sub, std::string("--") + key) || from_file.count(key) > 0;
  };

  DatasetManifest manifest;
  std::optional<Model<float>> model;
  std::vector<RmspropState<float>> opt_states;
  std::int64_t start_epoch = 0;
  fs::path run_dir;

  if (!o.resume.empty()) {
    const Checkpoint ckpt = load_checkpoint(o.resume);
    run_dir = fs::path(o.resume).parent_path();
    if (run_dir.empty()) run_dir = ".";

    if (!resolved("seed")) o.seed = ckpt.train_seed;
    if (!resolved("ratios")) o.ratios = {ckpt.ratios.train, ckpt.ratios.val, ckpt.ratios.test};
    if (!resolved("classes")) o.classes = ckpt.classes;
    if (resolved("pool-stride") && o.pool_stride != spec_pool_stride(ckpt.spec))
      throw UsageError("--pool-stride cannot change when resuming a checkpoint");
    if (resolved("dropout") && o.dropout != spec_dropout_rate(ckpt.spec))
      throw UsageError("--dropout cannot change when resuming a checkpoint");
    o.pool_stride = spec_pool_stride(ckpt.spec);
    o.dropout = spec_dropout_rate(ckpt.spec);
    validate_hyperparams(o);
    ratios_from(o);
    if (o.classes != ckpt.classes)
      throw UsageError("--classes cannot change when resuming a checkpoint");

    manifest = manifest_for_run_dir(o, run_dir);
    if (manifest.classes != ckpt.classes)
      throw Error("manifest classes do not match the checkpoint");

    model = model_from_checkpoint(ckpt);
    opt_states = ckpt.opt_states;
    start_epoch = ckpt.epochs_completed;
    if (start_epoch >= o.epochs) {
      std::printf("checkpoint already has %lld epochs; target is %lld, nothing to do\n",
                  (long long)start_epoch, (long long)o.epochs);
      return 0;
    }
  } else {
    validate_hyperparams(o);
    const SplitRatios ratios = ratios_from(o);
    if (o.out.empty()) throw UsageError("train needs --out");
    run_dir = o.out;
    fs::create_directories(run_dir);

    if (!o.manifest_path.empty()) {
      manifest = load_manifest(o.manifest_path);
      if (!o.classes.empty() && o.classes != manifest.classes)
        throw UsageError("--classes does not match the classes in --manifest");
      o.classes = manifest.classes;
      o.seed = resolved("seed") ? o.seed : manifest.seed;
    } else {
      if (o.data.empty()) throw UsageError("train needs --data (or --manifest/--resume)");
      if (o.classes.empty()) throw UsageError("train needs --classes");
      const auto items = scan_dataset(o.data, o.classes);
      manifest = split_stratified(o.classes, items, ratios, o.seed);
    }
    if (manifest.classes.size() != 2 && manifest.classes.size() != 3)
      throw UsageError("train supports 2 or 3 classes, got " +
                       std::to_string(manifest.classes.size()));

    save_manifest(manifest, (run_dir / "manifest.txt").string());
    const ModelSpec spec = build_reference_spec(std::int64_t(manifest.classes.size()),
                                            o.pool_stride, o.dropout);
    model = build_model<float>(spec, o.seed);
    opt_states = attach_states(model->params);
  }

  write_config_snapshot(run_dir / "config.txt", o);

  TrainConfig tc;
  tc.epochs = o.epochs;
  tc.batch_size = o.batch_size;
  tc.optimizer = RmspropConfig{o.lr, o.rho, o.epsilon};
  tc.dropout_rate = o.dropout;
  tc.seed = o.seed;
  tc.pool_stride = o.pool_stride;
  tc.augment = augment_from(o);
  tc.checkpoint_dir = run_dir.string();

  // On resume, keep the rows already logged for finished epochs and continue
  // the same file; a fresh run starts an empty log.
  const auto metrics_path = (run_dir / "metrics.csv").string();
  std::vector<EpochMetrics> kept;
  if (start_epoch > 0 && fs::exists(metrics_path)) {
    for (const auto& row : load_metrics_csv(metrics_path))
      if (row.epoch <= start_epoch) kept.push_back(row);
  }
  MetricsCsvWriter writer(metrics_path);
  for (const auto& row : kept) writer.append(row);

  const auto on_epoch = [&](const EpochMetrics& m) {
    writer.append(m);
    std::printf("epoch %lld/%lld  train_loss %.6f  train_acc %.4f  val_loss %.6f  val_acc %.4f\n",
                (long long)m.epoch, (long long)o.epochs, m.train_loss, m.train_acc, m.val_loss,
                m.val_acc);
    std::fflush(stdout);
  };

  fit(*model, opt_states, manifest, tc, start_epoch, on_epoch);

  plot_curves(metrics_path, run_dir.string());
  export_filters(*model, run_dir.string());
  std::printf("run artifacts in %s\n", run_dir.string().c_str());
  return 0;
}

int cmd_evaluate(const CLI::App* sub, CliOptions& o) {
  layer_config_file(sub, o);
  if (o.batch_size < 1) throw UsageError("--batch-size must be >= 1");
  const Split split = split_from_name(o.split);

  std::vector<double> accuracies_pct;
  bool header_needed = !o.eval_csv.empty() && !fs::exists(o.eval_csv);
  for (const auto& ckpt_path : o.checkpoints) {
    const Checkpoint ckpt = load_checkpoint(ckpt_path);
    const fs::path run_dir = fs::path(ckpt_path).parent_path();
    const DatasetManifest manifest = manifest_for_run_dir(o, run_dir.empty() ? "." : run_dir);
    if (manifest.classes != ckpt.classes)
      throw Error("manifest classes do not match the checkpoint");

    const Model<float> model = model_from_checkpoint(ckpt);
    const StepResult r = evaluate(model, manifest, split, o.batch_size);
    const std::string line =
        std::string(split_name(split)) + "," + g9(r.loss) + "," + g9(r.accuracy);
    std::printf("%s\n", line.c_str());
    accuracies_pct.push_back(r.accuracy * 100.0);

    if (!o.eval_csv.empty()) {
      std::ofstream csv(o.eval_csv, std::ios::binary | std::ios::app);
      if (!csv) throw Error("cannot open " + o.eval_csv);
      if (header_needed) {
        csv << "split,loss,accuracy\n";
        header_needed = false;
      }
      csv << line << "\n";
    }
  }
  if (accuracies_pct.size() > 1) {
    const auto [mean, stdev] = aggregate_mean_std(accuracies_pct);
    std::printf("accuracy_pct %.2f ± %.2f (n=%zu)\n", mean, stdev, accuracies_pct.size());
  }
  return 0;
}

int cmd_predict(CliOptions& o) {
  const Checkpoint ckpt = load_checkpoint(o.checkpoint);
  const Model<float> model = model_from_checkpoint(ckpt);
  const std::int64_t in_h = model.spec.in_h, in_w = model.spec.in_w;

  struct Item {
    std::string path;
    TensorF pixels;
    std::string error;
  };
  std::vector<Item> items;
  bool any_failed = false;
  for (const auto& path : o.images) {
    Item item;
    item.path = path;
    try {
      TensorF img = load_image(path);
      if (img.shape()[0] != in_h || img.shape()[1] != in_w)
        img = resize_bilinear(img, in_h, in_w);
      item.pixels = std::move(img);
    } catch (const Error& e) {
      item.error = e.what();
      any_failed = true;
    }
    items.push_back(std::move(item));
  }

  std::vector<std::size_t> ok;
  for (std::size_t i = 0; i < items.size(); ++i)
    if (items[i].error.empty()) ok.push_back(i);

  TensorF probs;
  if (!ok.empty()) {
    TensorF batch = TensorF::zeros({std::int64_t(ok.size()), in_h, in_w, 3});
    const std::int64_t plane = in_h * in_w * 3;
    for (std::size_t b = 0; b < ok.size(); ++b)
      std::copy(items[ok[b]].pixels.data().begin(), items[ok[b]].pixels.data().end(),
                batch.data().begin() + std::int64_t(b) * plane);
    probs = forward(model, batch, Mode::eval).probs;
  }

  std::size_t next_ok = 0;
  for (const auto& item : items) {
    if (!item.error.empty()) {
      std::printf("%s,error\n", item.path.c_str());
      std::fprintf(stderr, "error: %s: %s\n", item.path.c_str(), item.error.c_str());
      continue;
    }
    const std::int64_t row = std::int64_t(next_ok++);
    std::int64_t best = 0;
    for (std::int64_t c = 1; c < probs.shape()[1]; ++c)
      if (probs(row, c) > probs(row, best)) best = c;
    std::string line = item.path + "," + ckpt.classes[std::size_t(best)];
    for (std::int64_t c = 0; c < probs.shape()[1]; ++c) line += "," + g9(probs(row, c));
    std::printf("%s\n", line.c_str());
  }
  return any_failed ? 1 : 0;
}

int cmd_export_filters(CliOptions& o) {
  const Checkpoint ckpt = load_checkpoint(o.checkpoint);
  const Model<float> model = model_from_checkpoint(ckpt);
  const fs::path out_dir =
      o.out.empty() ? fs::path(o.checkpoint).parent_path() : fs::path(o.out);
  const auto paths = export_filters(model, out_dir.empty() ? "." : out_dir.string());
  for (const auto& p : paths) std::printf("%s\n", p.c_str());
  return 0;
}

int cmd_plot(CliOptions& o) {
  const fs::path out_dir =
      o.out.empty() ? fs::path(o.metrics_csv).parent_path() : fs::path(o.out);
  const auto paths = plot_curves(o.metrics_csv, out_dir.empty() ? "." : out_dir.string());
  for (const auto& p : paths) std::printf("%s\n", p.c_str());
  return 0;
}

// ---------------------------------------------------------------------------

void add_data_flags(CLI::App* sub, CliOptions& o) {
  sub->add_option("--data", o.data, "dataset root with one subdirectory per class");
  sub->add_option("--classes", o.classes, "comma-separated class subdirectory names")
      ->delimiter(',');
  sub->add_option("--seed", o.seed, "seed for the split and the training streams");
  sub->add_option("--ratios", o.ratios, "train,val,test fractions, summing to 1")
      ->delimiter(',')
      ->expected(1, 3);
  sub->add_option("--config", o.config, "key = value config file (flags take precedence)");
}

void add_train_flags(CLI::App* sub, CliOptions& o) {
  sub->add_option("--epochs", o.epochs, "training epochs (total, including resumed ones)");
  sub->add_option("--batch-size", o.batch_size, "images per optimizer step");
  sub->add_option("--lr", o.lr, "rmsprop learning rate");
  sub->add_option("--rho", o.rho, "rmsprop moving-average decay");
  sub->add_option("--epsilon", o.epsilon, "rmsprop denominator epsilon");
  sub->add_option("--dropout", o.dropout, "dropout rate between the dense layers");
  sub->add_option("--pool-stride", o.pool_stride, "max-pool stride");
  sub->add_flag("--no-augment", o.no_augment, "disable train-split augmentation");
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CliOptions o;
  CLI::App app{"histoconv: a small convolutional network for classifying tissue images"};
  app.require_subcommand(1);

  CLI::App* train = app.add_subcommand("train", "train a model and write run artifacts");
  add_data_flags(train, o);
  add_train_flags(train, o);
  train->add_option("--out", o.out, "run directory for all artifacts");
  train->add_option("--resume", o.resume, "checkpoint to continue from");
  train->add_option("--manifest", o.manifest_path, "reuse an existing manifest file");

  CLI::App* split = app.add_subcommand("split", "scan a dataset and write a manifest");
  add_data_flags(split, o);
  split->add_option("--out", o.out, "directory for manifest.txt");

  CLI::App* eval = app.add_subcommand("evaluate", "print split,loss,accuracy for a checkpoint");
  eval->add_option("checkpoint", o.checkpoints, "checkpoint file(s)")
      ->required()
      ->expected(-1);
  eval->add_option("--split", o.split, "split to evaluate")
      ->check(CLI::IsMember({"train", "val", "test"}));
  eval->add_option("--manifest", o.manifest_path,
                   "manifest path (default: manifest.txt beside the checkpoint)");
  eval->add_option("--batch-size", o.batch_size, "images per forward pass");
  eval->add_option("--csv", o.eval_csv, "append the printed row to this csv file");
  eval->add_option("--config", o.config, "key = value config file (flags take precedence)");

  CLI::App* predict = app.add_subcommand("predict", "print path,label,probabilities per image");
  predict->add_option("checkpoint", o.checkpoint, "checkpoint file")->required();
  predict->add_option("images", o.images, "image files to classify")->required()->expected(-1);

  CLI::App* filters = app.add_subcommand("export-filters",
                                         "write one filter-grid png per convolution layer");
  filters->add_option("checkpoint", o.checkpoint, "checkpoint file")->required();
  filters->add_option("--out", o.out, "output directory (default: beside the checkpoint)");

  CLI::App* plot = app.add_subcommand("plot", "render loss.png and accuracy.png from a metrics csv");
  plot->add_option("metrics_csv", o.metrics_csv, "metrics csv file")->required();
  plot->add_option("--out", o.out, "output directory (default: beside the csv)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (app.got_subcommand(train)) return cmd_train(train, o);
    if (app.got_subcommand(split)) return cmd_split(split, o);
    if (app.got_subcommand(eval)) return cmd_evaluate(eval, o);
    if (app.got_subcommand(predict)) return cmd_predict(o);
    if (app.got_subcommand(filters)) return cmd_export_filters(o);
    if (app.got_subcommand(plot)) return cmd_plot(o);
  } catch (const UsageError& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}

}  // namespace histoconv
