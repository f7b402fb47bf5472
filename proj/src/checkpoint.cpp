#include "histoconv/checkpoint.hpp"

#include <bit>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "histoconv/rng.hpp"

namespace histoconv {

namespace {

using nlohmann::json;

static_assert(std::endian::native == std::endian::little,
              "checkpoint serialization assumes a little-endian host");

constexpr char kMagic[4] = {'H', 'C', 'V', '1'};

// --- little-endian primitives ------------------------------------------------

void put_u32(std::ostream& out, std::uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

void put_u64(std::ostream& out, std::uint64_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

void put_bytes(std::ostream& out, const void* data, std::size_t n) {
  out.write(reinterpret_cast<const char*>(data), std::streamsize(n));
}

void put_string(std::ostream& out, const std::string& s) {
  put_u32(out, std::uint32_t(s.size()));
  put_bytes(out, s.data(), s.size());
}

struct Reader {
  std::istream& in;
  const std::string& path;

  void bytes(void* data, std::size_t n) {
    in.read(reinterpret_cast<char*>(data), std::streamsize(n));
    if (std::size_t(in.gcount()) != n) throw Error("truncated checkpoint: " + path);
  }
  std::uint32_t u32() {
    std::uint32_t v;
    bytes(&v, sizeof v);
    return v;
  }
  std::uint64_t u64() {
    std::uint64_t v;
    bytes(&v, sizeof v);
    return v;
  }
  std::string str() {
    std::string s(u32(), '\0');
    bytes(s.data(), s.size());
    return s;
  }
};

// --- tensor block ------------------------------------------------------------

void put_tensor(std::ostream& out, const TensorF& t) {
  put_u32(out, std::uint32_t(t.rank()));
  for (std::int64_t d = 0; d < t.rank(); ++d) put_u64(out, std::uint64_t(t.dim(d)));
  const std::uint64_t bytes = std::uint64_t(t.size()) * sizeof(float);
  put_u64(out, bytes);
  put_bytes(out, t.data().data(), std::size_t(bytes));
}

TensorF read_tensor(Reader& r) {
  const std::uint32_t rank = r.u32();
  if (rank == 0 || rank > 8) throw Error("checkpoint tensor has invalid rank");
  Shape shape(rank);
  for (auto& d : shape) d = std::int64_t(r.u64());
  TensorF t(shape);
  const std::uint64_t bytes = r.u64();
  if (bytes != std::uint64_t(t.size()) * sizeof(float))
    throw Error("checkpoint tensor byte length disagrees with its shape");
  r.bytes(t.data().data(), std::size_t(bytes));
  return t;
}

// --- model spec <-> json -----------------------------------------------------

json spec_to_json(const ModelSpec& s) {
  json layers = json::array();
  for (const auto& l : s.layers) {
    json o;
    o["kind"] = layer_kind_name(l.kind);
    switch (l.kind) {
      case LayerKind::conv:
        o["filters"] = l.filters;
        o["kernel"] = l.kernel;
        o["stride"] = l.stride;
        o["padding"] = l.padding == Padding::same ? "same" : "valid";
        break;
      case LayerKind::maxpool:
        o["pool"] = l.pool;
        o["stride"] = l.pool_stride;
        break;
      case LayerKind::dense:
        o["units"] = l.units;
        break;
      case LayerKind::dropout:
        o["rate"] = l.rate;
        break;
      default:
        break;
    }
    layers.push_back(std::move(o));
  }
  return json{{"in_h", s.in_h},
              {"in_w", s.in_w},
              {"in_c", s.in_c},
              {"num_classes", s.num_classes},
              {"layers", std::move(layers)}};
}

ModelSpec spec_from_json(const json& j) {
  ModelSpec s;
  s.in_h = j.at("in_h").get<std::int64_t>();
  s.in_w = j.at("in_w").get<std::int64_t>();
  s.in_c = j.at("in_c").get<std::int64_t>();
  s.num_classes = j.at("num_classes").get<std::int64_t>();
  for (const auto& o : j.at("layers")) {
    LayerSpec l;
    l.kind = layer_kind_from_name(o.at("kind").get<std::string>());
    switch (l.kind) {
      case LayerKind::conv:
        l.filters = o.at("filters").get<std::int64_t>();
        l.kernel = o.at("kernel").get<std::int64_t>();
        l.stride = o.at("stride").get<std::int64_t>();
        l.padding = o.at("padding").get<std::string>() == "same" ? Padding::same : Padding::valid;
        break;
      case LayerKind::maxpool:
        l.pool = o.at("pool").get<std::int64_t>();
        l.pool_stride = o.at("stride").get<std::int64_t>();
        break;
      case LayerKind::dense:
        l.units = o.at("units").get<std::int64_t>();
        break;
      case LayerKind::dropout:
        l.rate = o.at("rate").get<double>();
        break;
      default:
        break;
    }
    s.layers.push_back(l);
  }
  return s;
}

void write_checkpoint_stream(std::ostream& out, const Checkpoint& c) {
  put_bytes(out, kMagic, 4);
  put_u32(out, c.version);

  json meta{{"classes", c.classes},
            {"data_seed", c.data_seed},
            {"epochs_completed", c.epochs_completed},
            {"param_names", c.param_names},
            {"ratios", {c.ratios.train, c.ratios.val, c.ratios.test}},
            {"spec", spec_to_json(c.spec)},
            {"train_seed", c.train_seed}};
  const std::string meta_text = meta.dump();  // keys sorted: canonical
  put_u64(out, meta_text.size());
  put_bytes(out, meta_text.data(), meta_text.size());

  put_u64(out, c.params.size());
  for (std::size_t i = 0; i < c.params.size(); ++i) {
    put_string(out, c.param_names[i]);
    put_tensor(out, c.params[i]);
  }

  put_u64(out, c.opt_states.size());
  for (const auto& st : c.opt_states) {
    put_u64(out, std::uint64_t(st.step));
    put_tensor(out, st.v);
  }

  put_u64(out, c.rng_dump.size());
  put_bytes(out, c.rng_dump.data(), c.rng_dump.size());
}

}  // namespace

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  if (ckpt.params.size() != ckpt.param_names.size())
    throw Error("checkpoint has " + std::to_string(ckpt.params.size()) + " tensors but " +
                std::to_string(ckpt.param_names.size()) + " names");

  const std::string tmp = path + ".tmp";
  try {
    {
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      if (!out) throw Error("cannot open checkpoint for writing: " + tmp);
      write_checkpoint_stream(out, ckpt);
      out.flush();
      if (!out) throw Error("failed writing checkpoint: " + tmp);
    }
    std::filesystem::rename(tmp, path);
  } catch (...) {
    std::error_code ec;
    std::filesystem::remove(tmp, ec);
    throw;
  }
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open checkpoint: " + path);
  Reader r{in, path};

  char magic[4];
  r.bytes(magic, 4);
  if (!std::equal(magic, magic + 4, kMagic))
    throw Error("bad magic; not a checkpoint file: " + path);

  Checkpoint c;
  c.version = r.u32();
  if (c.version != kCheckpointVersion)
    throw Error("unsupported checkpoint version " + std::to_string(c.version) + " in " + path);

  const std::uint64_t meta_len = r.u64();
  std::string meta_text(meta_len, '\0');
  r.bytes(meta_text.data(), meta_text.size());
  json meta;
  try {
    meta = json::parse(meta_text);
  } catch (const json::exception& e) {
    throw Error("malformed checkpoint metadata in " + path + ": " + e.what());
  }
  try {
    c.classes = meta.at("classes").get<std::vector<std::string>>();
    c.data_seed = meta.at("data_seed").get<std::uint64_t>();
    c.epochs_completed = meta.at("epochs_completed").get<std::int64_t>();
    c.param_names = meta.at("param_names").get<std::vector<std::string>>();
    const auto& ratios = meta.at("ratios");
    c.ratios = SplitRatios{ratios.at(0).get<double>(), ratios.at(1).get<double>(),
                           ratios.at(2).get<double>()};
    c.spec = spec_from_json(meta.at("spec"));
    c.train_seed = meta.at("train_seed").get<std::uint64_t>();
  } catch (const json::exception& e) {
    throw Error("malformed checkpoint metadata in " + path + ": " + e.what());
  }

  const std::uint64_t n_tensors = r.u64();
  if (n_tensors != c.param_names.size())
    throw Error("checkpoint tensor count " + std::to_string(n_tensors) +
                " does not match metadata (" + std::to_string(c.param_names.size()) + ")");
  const auto expected = param_shapes(c.spec);
  if (expected.size() != n_tensors)
    throw Error("checkpoint tensor count " + std::to_string(n_tensors) +
                " does not match the model spec (" + std::to_string(expected.size()) + ")");
  for (std::uint64_t i = 0; i < n_tensors; ++i) {
    const std::string name = r.str();
    if (name != c.param_names[std::size_t(i)])
      throw Error("checkpoint tensor name mismatch: " + name + " vs " +
                  c.param_names[std::size_t(i)]);
    TensorF t = read_tensor(r);
    if (name != expected[std::size_t(i)].first || t.shape() != expected[std::size_t(i)].second)
      throw Error("checkpoint parameter shape mismatch for " + name + ": " +
                  shape_str(t.shape()) + " vs " + shape_str(expected[std::size_t(i)].second));
    c.params.push_back(std::move(t));
  }

  const std::uint64_t n_states = r.u64();
  if (n_states != n_tensors)
    throw Error("checkpoint optimizer state count " + std::to_string(n_states) +
                " does not match parameter count");
  for (std::uint64_t i = 0; i < n_states; ++i) {
    RmspropState<float> st;
    st.step = std::int64_t(r.u64());
    st.v = read_tensor(r);
    if (st.v.shape() != c.params[std::size_t(i)].shape())
      throw Error("checkpoint optimizer state shape mismatch for " +
                  c.param_names[std::size_t(i)]);
    c.opt_states.push_back(std::move(st));
  }

  const std::uint64_t rng_len = r.u64();
  c.rng_dump.resize(rng_len);
  r.bytes(c.rng_dump.data(), c.rng_dump.size());

  if (in.peek() != std::ifstream::traits_type::eof())
    throw Error("trailing data after checkpoint payload: " + path);
  return c;
}

Checkpoint make_checkpoint(const Model<float>& model,
                           const std::vector<RmspropState<float>>& opt_states,
                           const DatasetManifest& manifest, std::int64_t epochs_completed,
                           std::uint64_t train_seed) {
  Checkpoint c;
  c.spec = model.spec;
  c.param_names = model.param_names;
  c.params = model.params;
  c.opt_states = opt_states;
  c.data_seed = manifest.seed;
  c.ratios = manifest.ratios;
  c.classes = manifest.classes;
  c.epochs_completed = epochs_completed;
  c.train_seed = train_seed;

  // dropout stream as it will start the next epoch
  auto rng = derive_stream(train_seed, RngStream::dropout, std::uint64_t(epochs_completed));
  std::ostringstream dump;
  dump << rng;
  c.rng_dump = dump.str();
  return c;
}

Model<float> model_from_checkpoint(const Checkpoint& ckpt) {
  Model<float> m = build_model<float>(ckpt.spec, /*init_seed=*/0);
  if (m.param_names != ckpt.param_names)
    throw Error("checkpoint parameter names do not match the model spec");
  for (std::size_t i = 0; i < m.params.size(); ++i) {
    if (m.params[i].shape() != ckpt.params[i].shape())
      throw Error("checkpoint parameter shape mismatch for " + m.param_names[i]);
  }
  m.params = ckpt.params;
  return m;
}

}  // namespace histoconv
