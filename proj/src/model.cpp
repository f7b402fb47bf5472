#include "histoconv/model.hpp"

namespace histoconv {

const char* layer_kind_name(LayerKind k) {
  switch (k) {
    case LayerKind::conv: return "conv";
    case LayerKind::maxpool: return "maxpool";
    case LayerKind::relu: return "relu";
    case LayerKind::flatten: return "flatten";
    case LayerKind::dense: return "dense";
    case LayerKind::dropout: return "dropout";
    case LayerKind::softmax: return "softmax";
  }
  throw Error("invalid layer kind value");
}

LayerKind layer_kind_from_name(const std::string& name) {
  if (name == "conv") return LayerKind::conv;
  if (name == "maxpool") return LayerKind::maxpool;
  if (name == "relu") return LayerKind::relu;
  if (name == "flatten") return LayerKind::flatten;
  if (name == "dense") return LayerKind::dense;
  if (name == "dropout") return LayerKind::dropout;
  if (name == "softmax") return LayerKind::softmax;
  throw Error("unknown layer kind: " + name);
}

LayerSpec LayerSpec::conv2d(std::int64_t filters, std::int64_t kernel, std::int64_t stride,
                            Padding padding) {
  LayerSpec l;
  l.kind = LayerKind::conv;
  l.filters = filters;
  l.kernel = kernel;
  l.stride = stride;
  l.padding = padding;
  return l;
}

LayerSpec LayerSpec::maxpool2d(std::int64_t pool, std::int64_t stride) {
  LayerSpec l;
  l.kind = LayerKind::maxpool;
  l.pool = pool;
  l.pool_stride = stride;
  return l;
}

LayerSpec LayerSpec::relu() {
  LayerSpec l;
  l.kind = LayerKind::relu;
  return l;
}

LayerSpec LayerSpec::flatten() {
  LayerSpec l;
  l.kind = LayerKind::flatten;
  return l;
}

LayerSpec LayerSpec::dense(std::int64_t units) {
  LayerSpec l;
  l.kind = LayerKind::dense;
  l.units = units;
  return l;
}

LayerSpec LayerSpec::dropout(double rate) {
  LayerSpec l;
  l.kind = LayerKind::dropout;
  l.rate = rate;
  return l;
}

LayerSpec LayerSpec::softmax() {
  LayerSpec l;
  l.kind = LayerKind::softmax;
  return l;
}

ModelSpec build_reference_spec(std::int64_t num_classes, std::int64_t pool_stride,
                           double dropout_rate, std::int64_t in_h, std::int64_t in_w) {
  if (num_classes != 2 && num_classes != 3)
    throw Error("num_classes must be 2 or 3, got " + std::to_string(num_classes));

  ModelSpec s;
  s.in_h = in_h;
  s.in_w = in_w;
  s.in_c = 3;
  s.num_classes = num_classes;
  for (std::int64_t filters : {32, 64, 64}) {
    s.layers.push_back(LayerSpec::conv2d(filters, 3, 2, Padding::same));
    s.layers.push_back(LayerSpec::relu());
    s.layers.push_back(LayerSpec::maxpool2d(2, pool_stride));
  }
  s.layers.push_back(LayerSpec::flatten());
  s.layers.push_back(LayerSpec::dense(512));
  s.layers.push_back(LayerSpec::relu());
  s.layers.push_back(LayerSpec::dropout(dropout_rate));
  s.layers.push_back(LayerSpec::dense(num_classes));
  s.layers.push_back(LayerSpec::softmax());
  return s;
}

std::vector<Shape> check_shapes(const ModelSpec& spec) {
  if (spec.in_h < 1 || spec.in_w < 1 || spec.in_c < 1)
    throw Error("model input extents must be >= 1");
  if (spec.num_classes < 2) throw Error("model needs at least 2 classes");
  if (spec.layers.empty()) throw Error("model has no layers");

  auto fail = [](std::size_t i, LayerKind kind, const std::string& why) -> void {
    throw Error("layer " + std::to_string(i) + " (" + std::string(layer_kind_name(kind)) +
                "): " + why);
  };

  std::vector<Shape> out;
  Shape cur = {1, spec.in_h, spec.in_w, spec.in_c};
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const LayerSpec& l = spec.layers[i];
    switch (l.kind) {
      case LayerKind::conv: {
        if (cur.size() != 4) fail(i, l.kind, "needs rank-4 input, has " + shape_str(cur));
        if (l.filters < 1 || l.kernel < 1 || l.stride < 1)
          fail(i, l.kind, "invalid filters/kernel/stride");
        const std::int64_t oh = conv_out_extent(cur[1], l.kernel, l.stride, l.padding);
        const std::int64_t ow = conv_out_extent(cur[2], l.kernel, l.stride, l.padding);
        if (oh < 1 || ow < 1)
          fail(i, l.kind, "output would be empty for input " + shape_str(cur));
        cur = {cur[0], oh, ow, l.filters};
        break;
      }
      case LayerKind::maxpool: {
        if (cur.size() != 4) fail(i, l.kind, "needs rank-4 input, has " + shape_str(cur));
        if (l.pool < 1 || l.pool_stride < 1) fail(i, l.kind, "invalid pool window/stride");
        if (cur[1] < l.pool || cur[2] < l.pool)
          fail(i, l.kind,
               "window " + std::to_string(l.pool) + "x" + std::to_string(l.pool) +
                   " exceeds input " + shape_str(cur));
        cur = {cur[0], (cur[1] - l.pool) / l.pool_stride + 1,
               (cur[2] - l.pool) / l.pool_stride + 1, cur[3]};
        break;
      }
      case LayerKind::relu:
        break;  // shape preserved, any rank
      case LayerKind::flatten: {
        if (cur.size() != 4) fail(i, l.kind, "needs rank-4 input, has " + shape_str(cur));
        cur = {cur[0], cur[1] * cur[2] * cur[3]};
        break;
      }
      case LayerKind::dense: {
        if (cur.size() != 2) fail(i, l.kind, "needs rank-2 input, has " + shape_str(cur));
        if (l.units < 1) fail(i, l.kind, "units must be >= 1");
        cur = {cur[0], l.units};
        break;
      }
      case LayerKind::dropout: {
        if (!(l.rate >= 0.0 && l.rate < 1.0)) fail(i, l.kind, "rate must be in [0,1)");
        break;
      }
      case LayerKind::softmax: {
        if (cur.size() != 2) fail(i, l.kind, "needs rank-2 input, has " + shape_str(cur));
        if (i != spec.layers.size() - 1) fail(i, l.kind, "must be the final layer");
        break;
      }
    }
    out.push_back(cur);
  }

  if (spec.layers.back().kind != LayerKind::softmax)
    throw Error("model must end with softmax");
  if (out.back() != Shape{1, spec.num_classes})
    throw Error("model emits " + shape_str(out.back()) + " but num_classes is " +
                std::to_string(spec.num_classes));
  return out;
}

std::vector<std::pair<std::string, Shape>> param_shapes(const ModelSpec& spec) {
  const auto shapes = check_shapes(spec);
  std::vector<std::pair<std::string, Shape>> out;
  int conv_no = 0, dense_no = 0;
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const LayerSpec& l = spec.layers[i];
    const std::int64_t in_c = i == 0 ? spec.in_c : shapes[i - 1].back();
    if (l.kind == LayerKind::conv) {
      const std::string name = "conv" + std::to_string(++conv_no);
      out.emplace_back(name + ".weight", Shape{l.kernel, l.kernel, in_c, l.filters});
      out.emplace_back(name + ".bias", Shape{l.filters});
    } else if (l.kind == LayerKind::dense) {
      const std::string name = "dense" + std::to_string(++dense_no);
      out.emplace_back(name + ".weight", Shape{in_c, l.units});
      out.emplace_back(name + ".bias", Shape{l.units});
    }
  }
  return out;
}

}  // namespace histoconv
