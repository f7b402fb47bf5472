#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "histoconv/layers.hpp"
#include "histoconv/loss.hpp"
#include "histoconv/rng.hpp"
#include "histoconv/tensor.hpp"

namespace histoconv {

enum class LayerKind { conv, maxpool, relu, flatten, dense, dropout, softmax };

const char* layer_kind_name(LayerKind k);
LayerKind layer_kind_from_name(const std::string& name);

// Declarative description of one layer; only the fields for `kind` are used.
struct LayerSpec {
  LayerKind kind = LayerKind::relu;
  // conv
  std::int64_t filters = 0;
  std::int64_t kernel = 0;
  std::int64_t stride = 1;
  Padding padding = Padding::same;
  // maxpool
  std::int64_t pool = 0;
  std::int64_t pool_stride = 1;
  // dense
  std::int64_t units = 0;
  // dropout
  double rate = 0.0;

  static LayerSpec conv2d(std::int64_t filters, std::int64_t kernel, std::int64_t stride,
                          Padding padding);
  static LayerSpec maxpool2d(std::int64_t pool, std::int64_t stride);
  static LayerSpec relu();
  static LayerSpec flatten();
  static LayerSpec dense(std::int64_t units);
  static LayerSpec dropout(double rate);
  static LayerSpec softmax();
};

struct ModelSpec {
  std::int64_t in_h = 150, in_w = 150, in_c = 3;
  std::int64_t num_classes = 0;
  std::vector<LayerSpec> layers;
};

// The three conv+pool blocks, flatten, dense 512, dropout, and the classifier
// head. Pool stride and dropout rate are the two knobs the CLI exposes.
ModelSpec build_reference_spec(std::int64_t num_classes, std::int64_t pool_stride = 1,
                           double dropout_rate = 0.5, std::int64_t in_h = 150,
                           std::int64_t in_w = 150);

// Walks the spec symbolically (batch extent 1) and returns each layer's output
// shape. Throws, naming the layer index and kind, on any inconsistency; also
// enforces that the final layer is softmax emitting num_classes values.
std::vector<Shape> check_shapes(const ModelSpec& spec);

// Names and shapes of every parameter tensor the spec implies, in storage
// order; the reference layout for builders and checkpoint validation.
std::vector<std::pair<std::string, Shape>> param_shapes(const ModelSpec& spec);

namespace detail {

template <typename T>
using LayerCache = std::variant<std::monostate, ConvCache<T>, PoolCache, ReluCache<T>,
                                FlattenCache, DenseCache<T>, DropoutCache<T>>;

}  // namespace detail

// A spec plus its parameter tensors. Parameters are stored flat in layer
// order (conv: weight then bias; dense: weight then bias) with stable names
// like "conv1.weight", "dense2.bias".
template <typename T>
struct Model {
  ModelSpec spec;
  std::vector<Tensor<T>> params;
  std::vector<std::string> param_names;
  // first index into params per layer; -1 for parameterless layers
  std::vector<std::int64_t> layer_param_base;
};

template <typename T>
struct ForwardResult {
  Tensor<T> probs;   // [n, num_classes], rows sum to 1
  Tensor<T> logits;  // [n, num_classes], pre-softmax
  std::vector<detail::LayerCache<T>> caches;  // populated in train mode only
};

template <typename T>
struct BackwardResult {
  std::vector<Tensor<T>> d_params;  // aligned with model.params
  Tensor<T> d_input;
};

namespace detail {

template <typename T>
Conv2DParams<T> conv_params_view(const LayerSpec& l, const Model<T>& m, std::int64_t base) {
  Conv2DParams<T> p;
  p.filters = l.filters;
  p.kernel_h = p.kernel_w = l.kernel;
  p.stride = l.stride;
  p.padding = l.padding;
  p.weights = m.params[std::size_t(base)];
  p.bias = m.params[std::size_t(base + 1)];
  return p;
}

template <typename T>
DenseParams<T> dense_params_view(const LayerSpec& l, const Model<T>& m, std::int64_t base) {
  DenseParams<T> p;
  p.weights = m.params[std::size_t(base)];
  p.bias = m.params[std::size_t(base + 1)];
  p.in_features = p.weights.dim(0);
  p.out_features = p.weights.dim(1);
  return p;
}

[[noreturn]] inline void rethrow_at_layer(std::size_t index, LayerKind kind,
                                          const Error& inner) {
  throw Error("layer " + std::to_string(index) + " (" + layer_kind_name(kind) +
              "): " + inner.what());
}

}  // namespace detail

// Builds parameter tensors for a spec: weights from a zero-mean Gaussian
// (std 0.05 by default), biases zero, drawn from a stream derived from the
// seed so identical seeds give bitwise-identical parameters.
template <typename T>
Model<T> build_model(const ModelSpec& spec, std::uint64_t init_seed, double init_std = 0.05) {
  const auto shapes = check_shapes(spec);  // shapes[i] = output of layer i, batch 1
  Model<T> m;
  m.spec = spec;

  auto rng = derive_stream(init_seed, RngStream::init);
  std::normal_distribution<double> normal(0.0, init_std);
  auto gaussian = [&](Shape shape) {
    Tensor<T> t(std::move(shape));
    for (auto& v : t.data()) v = static_cast<T>(normal(rng));
    return t;
  };

  int conv_no = 0, dense_no = 0;
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const LayerSpec& l = spec.layers[i];
    // input extents for layer i come from the previous layer's output
    const std::int64_t in_c = i == 0 ? spec.in_c : shapes[i - 1].back();
    switch (l.kind) {
      case LayerKind::conv: {
        m.layer_param_base.push_back(std::int64_t(m.params.size()));
        const std::string name = "conv" + std::to_string(++conv_no);
        m.params.push_back(gaussian({l.kernel, l.kernel, in_c, l.filters}));
        m.param_names.push_back(name + ".weight");
        m.params.push_back(Tensor<T>::zeros({l.filters}));
        m.param_names.push_back(name + ".bias");
        break;
      }
      case LayerKind::dense: {
        m.layer_param_base.push_back(std::int64_t(m.params.size()));
        const std::string name = "dense" + std::to_string(++dense_no);
        m.params.push_back(gaussian({in_c, l.units}));
        m.param_names.push_back(name + ".weight");
        m.params.push_back(Tensor<T>::zeros({l.units}));
        m.param_names.push_back(name + ".bias");
        break;
      }
      default:
        m.layer_param_base.push_back(-1);
        break;
    }
  }
  return m;
}

template <typename T>
ForwardResult<T> forward(const Model<T>& model, const Tensor<T>& images, Mode mode,
                         std::mt19937* dropout_rng = nullptr) {
  const ModelSpec& spec = model.spec;
  if (images.rank() != 4 || images.dim(1) != spec.in_h || images.dim(2) != spec.in_w ||
      images.dim(3) != spec.in_c)
    throw Error("model input must be [n," + std::to_string(spec.in_h) + "," +
                std::to_string(spec.in_w) + "," + std::to_string(spec.in_c) + "], got " +
                shape_str(images.shape()));

  ForwardResult<T> r;
  if (mode == Mode::train) r.caches.resize(spec.layers.size());

  Tensor<T> x = images;
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const LayerSpec& l = spec.layers[i];
    const std::int64_t base = model.layer_param_base[i];
    try {
      switch (l.kind) {
        case LayerKind::conv: {
          auto [y, cache] = conv2d_forward(x, detail::conv_params_view(l, model, base));
          x = std::move(y);
          if (mode == Mode::train) r.caches[i] = std::move(cache);
          break;
        }
        case LayerKind::maxpool: {
          auto [y, cache] = maxpool_forward(x, MaxPoolParams{l.pool, l.pool, l.pool_stride});
          x = std::move(y);
          if (mode == Mode::train) r.caches[i] = std::move(cache);
          break;
        }
        case LayerKind::relu: {
          auto [y, cache] = relu_forward(x);
          x = std::move(y);
          if (mode == Mode::train) r.caches[i] = std::move(cache);
          break;
        }
        case LayerKind::flatten: {
          auto [y, cache] = flatten_forward(x);
          x = std::move(y);
          if (mode == Mode::train) r.caches[i] = std::move(cache);
          break;
        }
        case LayerKind::dense: {
          auto [y, cache] = dense_forward(x, detail::dense_params_view(l, model, base));
          x = std::move(y);
          if (mode == Mode::train) r.caches[i] = std::move(cache);
          break;
        }
        case LayerKind::dropout: {
          if (mode == Mode::train && l.rate > 0.0 && dropout_rng == nullptr)
            throw Error("train-mode forward needs a dropout rng");
          static std::mt19937 unused_rng;  // never advanced in eval mode
          auto [y, cache] = dropout_forward(x, DropoutParams{l.rate, mode},
                                            dropout_rng ? *dropout_rng : unused_rng);
          x = std::move(y);
          if (mode == Mode::train) r.caches[i] = std::move(cache);
          break;
        }
        case LayerKind::softmax: {
          r.logits = x;
          x = softmax(x);
          break;
        }
      }
    } catch (const Error& e) {
      detail::rethrow_at_layer(i, l.kind, e);
    }
  }
  r.probs = std::move(x);
  return r;
}

// Reverse pass for the fused softmax/cross-entropy objective: the gradient
// enters at the logits, so the trailing softmax layer is skipped.
template <typename T>
BackwardResult<T> backward(const Model<T>& model, const ForwardResult<T>& fwd,
                           const Tensor<T>& targets) {
  const ModelSpec& spec = model.spec;
  if (spec.layers.empty() || spec.layers.back().kind != LayerKind::softmax)
    throw Error("backward expects a softmax-terminated model");
  if (fwd.caches.size() != spec.layers.size())
    throw Error("backward needs train-mode caches");

  BackwardResult<T> r;
  r.d_params.resize(model.params.size());

  Tensor<T> g = softmax_xent_grad(fwd.logits, targets);
  for (std::size_t ri = spec.layers.size() - 1; ri-- > 0;) {
    const LayerSpec& l = spec.layers[ri];
    const std::int64_t base = model.layer_param_base[ri];
    try {
      switch (l.kind) {
        case LayerKind::conv: {
          auto lg = conv2d_backward(g, std::get<ConvCache<T>>(fwd.caches[ri]),
                                    detail::conv_params_view(l, model, base));
          g = std::move(lg.d_input);
          r.d_params[std::size_t(base)] = std::move(lg.d_params[0]);
          r.d_params[std::size_t(base + 1)] = std::move(lg.d_params[1]);
          break;
        }
        case LayerKind::maxpool:
          g = maxpool_backward(g, std::get<PoolCache>(fwd.caches[ri]));
          break;
        case LayerKind::relu:
          g = relu_backward(g, std::get<ReluCache<T>>(fwd.caches[ri]));
          break;
        case LayerKind::flatten:
          g = flatten_backward(g, std::get<FlattenCache>(fwd.caches[ri]));
          break;
        case LayerKind::dense: {
          auto lg = dense_backward(g, std::get<DenseCache<T>>(fwd.caches[ri]),
                                   detail::dense_params_view(l, model, base));
          g = std::move(lg.d_input);
          r.d_params[std::size_t(base)] = std::move(lg.d_params[0]);
          r.d_params[std::size_t(base + 1)] = std::move(lg.d_params[1]);
          break;
        }
        case LayerKind::dropout:
          g = dropout_backward(g, std::get<DropoutCache<T>>(fwd.caches[ri]));
          break;
        case LayerKind::softmax:
          throw Error("softmax may only terminate the model");
      }
    } catch (const Error& e) {
      detail::rethrow_at_layer(ri, l.kind, e);
    }
  }
  r.d_input = std::move(g);
  return r;
}

// Convenience wrapper matching the published architecture.
template <typename T>
Model<T> build_reference_model(std::int64_t num_classes, std::uint64_t init_seed) {
  return build_model<T>(build_reference_spec(num_classes), init_seed);
}

}  // namespace histoconv
