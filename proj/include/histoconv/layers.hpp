#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "histoconv/tensor.hpp"

namespace histoconv {

enum class Padding { same, valid };
enum class Mode { train, eval };

template <typename T>
struct Conv2DParams {
  std::int64_t filters = 0;
  std::int64_t kernel_h = 0, kernel_w = 0;
  std::int64_t stride = 1;
  Padding padding = Padding::same;
  Tensor<T> weights;  // [kernel_h, kernel_w, in_c, filters]
  Tensor<T> bias;     // [filters]
};

struct MaxPoolParams {
  std::int64_t pool_h = 2, pool_w = 2;
  std::int64_t stride = 1;
  // padding is always valid
};

template <typename T>
struct DenseParams {
  std::int64_t in_features = 0, out_features = 0;
  Tensor<T> weights;  // [in_features, out_features]
  Tensor<T> bias;     // [out_features]
};

struct DropoutParams {
  double rate = 0.5;
  Mode mode = Mode::train;
};

// Gradient of a scalar objective w.r.t. a layer's input and parameters.
// Every tensor matches the shape of the value it differentiates.
template <typename T>
struct LayerGrad {
  Tensor<T> d_input;
  std::vector<Tensor<T>> d_params;
};

inline std::int64_t conv_out_extent(std::int64_t in, std::int64_t k, std::int64_t stride,
                                    Padding padding) {
  if (stride < 1) throw Error("stride must be >= 1");
  if (padding == Padding::same) return (in + stride - 1) / stride;
  return (in - k) / stride + 1;
}

// Total same-padding, split floor-left / ceil-right.
inline std::int64_t same_pad_before(std::int64_t in, std::int64_t k, std::int64_t stride) {
  const std::int64_t out = (in + stride - 1) / stride;
  const std::int64_t total = std::max<std::int64_t>((out - 1) * stride + k - in, 0);
  return total / 2;
}

// ---------------------------------------------------------------------------
// convolution (im2col + matmul; the nested-loop reference lives in the tests)

template <typename T>
struct ConvCache {
  Shape x_shape;
  Tensor<T> cols;  // [n*oh*ow, kh*kw*in_c]
  std::int64_t oh = 0, ow = 0;
};

template <typename T>
std::pair<Tensor<T>, ConvCache<T>> conv2d_forward(const Tensor<T>& x, const Conv2DParams<T>& p) {
  if (x.rank() != 4) throw Error("conv2d expects NHWC input, got " + shape_str(x.shape()));
  const std::int64_t n = x.dim(0), h = x.dim(1), w = x.dim(2), c = x.dim(3);
  const Shape want_w = {p.kernel_h, p.kernel_w, c, p.filters};
  if (p.weights.shape() != want_w)
    throw Error("conv2d weight shape " + shape_str(p.weights.shape()) + " does not match " +
                shape_str(want_w) + " for input " + shape_str(x.shape()));
  if (p.bias.shape() != Shape{p.filters})
    throw Error("conv2d bias shape " + shape_str(p.bias.shape()) + " != [" +
                std::to_string(p.filters) + "]");
  const std::int64_t oh = conv_out_extent(h, p.kernel_h, p.stride, p.padding);
  const std::int64_t ow = conv_out_extent(w, p.kernel_w, p.stride, p.padding);
  if (oh < 1 || ow < 1)
    throw Error("conv2d valid-padding output would be empty for input " + shape_str(x.shape()));
  const std::int64_t pad_top = (p.padding == Padding::same) ? same_pad_before(h, p.kernel_h, p.stride) : 0;
  const std::int64_t pad_left = (p.padding == Padding::same) ? same_pad_before(w, p.kernel_w, p.stride) : 0;

  const std::int64_t rows = n * oh * ow;
  const std::int64_t patch = p.kernel_h * p.kernel_w * c;
  Tensor<T> cols({rows, patch});
  const T* px = x.data().data();
  T* pc = cols.data().data();
  parallel_for(rows, [&](std::int64_t r0, std::int64_t r1) {
    for (std::int64_t r = r0; r < r1; ++r) {
      const std::int64_t nn = r / (oh * ow);
      const std::int64_t rem = r % (oh * ow);
      const std::int64_t oy = rem / ow, ox = rem % ow;
      const std::int64_t iy0 = oy * p.stride - pad_top;
      const std::int64_t ix0 = ox * p.stride - pad_left;
      T* dst = pc + r * patch;
      for (std::int64_t ky = 0; ky < p.kernel_h; ++ky) {
        const std::int64_t iy = iy0 + ky;
        if (iy < 0 || iy >= h) continue;  // zero padding (cols start zeroed)
        for (std::int64_t kx = 0; kx < p.kernel_w; ++kx) {
          const std::int64_t ix = ix0 + kx;
          if (ix < 0 || ix >= w) continue;
          const T* src = px + ((nn * h + iy) * w + ix) * c;
          T* out = dst + (ky * p.kernel_w + kx) * c;
          for (std::int64_t ch = 0; ch < c; ++ch) out[ch] = src[ch];
        }
      }
    }
  }, 64);

  const Tensor<T> w2 = p.weights.reshaped({patch, p.filters});
  Tensor<T> y2 = matmul(cols, w2);
  T* py = y2.data().data();
  const T* pb = p.bias.data().data();
  for (std::int64_t r = 0; r < rows; ++r) {
    T* row = py + r * p.filters;
    for (std::int64_t f = 0; f < p.filters; ++f) row[f] += pb[f];
  }
  ConvCache<T> cache{x.shape(), std::move(cols), oh, ow};
  return {y2.reshaped({n, oh, ow, p.filters}), std::move(cache)};
}

template <typename T>
LayerGrad<T> conv2d_backward(const Tensor<T>& d_y, const ConvCache<T>& cache,
                             const Conv2DParams<T>& p) {
  const std::int64_t n = cache.x_shape[0], h = cache.x_shape[1], w = cache.x_shape[2],
                     c = cache.x_shape[3];
  const Shape want = {n, cache.oh, cache.ow, p.filters};
  if (d_y.shape() != want)
    throw Error("conv2d_backward d_y shape " + shape_str(d_y.shape()) + " != " + shape_str(want));
  const std::int64_t rows = n * cache.oh * cache.ow;
  const std::int64_t patch = p.kernel_h * p.kernel_w * c;
  const Tensor<T> d_y2 = d_y.reshaped({rows, p.filters});

  Tensor<T> d_bias = reduce(d_y2, 0, Reduce::sum);
  Tensor<T> d_w = matmul_atb(cache.cols, d_y2).reshaped(p.weights.shape());
  const Tensor<T> w2 = p.weights.reshaped({patch, p.filters});
  const Tensor<T> d_cols = matmul_abt(d_y2, w2);

  const std::int64_t pad_top = (p.padding == Padding::same) ? same_pad_before(h, p.kernel_h, p.stride) : 0;
  const std::int64_t pad_left = (p.padding == Padding::same) ? same_pad_before(w, p.kernel_w, p.stride) : 0;
  Tensor<T> d_x(cache.x_shape);
  const T* pdc = d_cols.data().data();
  T* pdx = d_x.data().data();
  parallel_for(n, [&](std::int64_t n0, std::int64_t n1) {
    for (std::int64_t nn = n0; nn < n1; ++nn) {
      for (std::int64_t oy = 0; oy < cache.oh; ++oy) {
        for (std::int64_t ox = 0; ox < cache.ow; ++ox) {
          const std::int64_t r = (nn * cache.oh + oy) * cache.ow + ox;
          const std::int64_t iy0 = oy * p.stride - pad_top;
          const std::int64_t ix0 = ox * p.stride - pad_left;
          const T* src = pdc + r * patch;
          for (std::int64_t ky = 0; ky < p.kernel_h; ++ky) {
            const std::int64_t iy = iy0 + ky;
            if (iy < 0 || iy >= h) continue;
            for (std::int64_t kx = 0; kx < p.kernel_w; ++kx) {
              const std::int64_t ix = ix0 + kx;
              if (ix < 0 || ix >= w) continue;
              T* dst = pdx + ((nn * h + iy) * w + ix) * c;
              const T* col = src + (ky * p.kernel_w + kx) * c;
              for (std::int64_t ch = 0; ch < c; ++ch) dst[ch] += col[ch];
            }
          }
        }
      }
    }
  }, 1);
  return {std::move(d_x), {std::move(d_w), std::move(d_bias)}};
}

// ---------------------------------------------------------------------------
// max pooling (always valid padding)

struct PoolCache {
  Shape x_shape;
  Shape y_shape;
  std::vector<std::int64_t> argmax;  // linear index into x per output element
};

template <typename T>
std::pair<Tensor<T>, PoolCache> maxpool_forward(const Tensor<T>& x, const MaxPoolParams& p) {
  if (x.rank() != 4) throw Error("maxpool expects NHWC input, got " + shape_str(x.shape()));
  if (p.pool_h < 1 || p.pool_w < 1 || p.stride < 1)
    throw Error("maxpool window and stride must be >= 1");
  const std::int64_t n = x.dim(0), h = x.dim(1), w = x.dim(2), c = x.dim(3);
  const std::int64_t oh = (h - p.pool_h) / p.stride + 1;
  const std::int64_t ow = (w - p.pool_w) / p.stride + 1;
  if (oh < 1 || ow < 1)
    throw Error("maxpool window " + std::to_string(p.pool_h) + "x" + std::to_string(p.pool_w) +
                " larger than input " + shape_str(x.shape()) + " under valid padding");
  Tensor<T> y({n, oh, ow, c});
  PoolCache cache{x.shape(), y.shape(), std::vector<std::int64_t>(static_cast<std::size_t>(y.size()))};
  const T* px = x.data().data();
  T* py = y.data().data();
  std::int64_t* pa = cache.argmax.data();
  parallel_for(n * oh * ow, [&](std::int64_t r0, std::int64_t r1) {
    for (std::int64_t r = r0; r < r1; ++r) {
      const std::int64_t nn = r / (oh * ow);
      const std::int64_t rem = r % (oh * ow);
      const std::int64_t oy = rem / ow, ox = rem % ow;
      const std::int64_t iy0 = oy * p.stride, ix0 = ox * p.stride;
      for (std::int64_t ch = 0; ch < c; ++ch) {
        T best{};
        std::int64_t best_idx = -1;
        for (std::int64_t ky = 0; ky < p.pool_h; ++ky) {
          for (std::int64_t kx = 0; kx < p.pool_w; ++kx) {
            const std::int64_t idx = ((nn * h + iy0 + ky) * w + ix0 + kx) * c + ch;
            if (best_idx < 0 || px[idx] > best) {  // ties keep the first position
              best = px[idx];
              best_idx = idx;
            }
          }
        }
        py[r * c + ch] = best;
        pa[r * c + ch] = best_idx;
      }
    }
  }, 64);
  return {std::move(y), std::move(cache)};
}

// Routes each upstream element to the input position that achieved the max;
// overlapping windows (stride < pool) accumulate.
template <typename T>
Tensor<T> maxpool_backward(const Tensor<T>& d_y, const PoolCache& cache) {
  if (d_y.shape() != cache.y_shape)
    throw Error("maxpool_backward d_y shape " + shape_str(d_y.shape()) + " != " +
                shape_str(cache.y_shape));
  Tensor<T> d_x(cache.x_shape);
  const T* pdy = d_y.data().data();
  T* pdx = d_x.data().data();
  const std::int64_t n = cache.x_shape[0];
  const std::int64_t per_sample = d_y.size() / n;
  const std::int64_t* pa = cache.argmax.data();
  parallel_for(n, [&](std::int64_t n0, std::int64_t n1) {
    for (std::int64_t nn = n0; nn < n1; ++nn)
      for (std::int64_t i = nn * per_sample; i < (nn + 1) * per_sample; ++i)
        pdx[pa[i]] += pdy[i];
  }, 1);
  return d_x;
}

// ---------------------------------------------------------------------------
// dense

template <typename T>
struct DenseCache {
  Tensor<T> x;
};

template <typename T>
std::pair<Tensor<T>, DenseCache<T>> dense_forward(const Tensor<T>& x, const DenseParams<T>& p) {
  if (x.rank() != 2) throw Error("dense expects [n, features] input, got " + shape_str(x.shape()));
  if (x.dim(1) != p.in_features)
    throw Error("dense feature mismatch: input " + shape_str(x.shape()) + " vs in_features " +
                std::to_string(p.in_features));
  if (p.weights.shape() != Shape{p.in_features, p.out_features} ||
      p.bias.shape() != Shape{p.out_features})
    throw Error("dense parameter shapes do not match declared feature counts");
  Tensor<T> y = matmul(x, p.weights);
  const std::int64_t n = y.dim(0), out = y.dim(1);
  T* py = y.data().data();
  const T* pb = p.bias.data().data();
  for (std::int64_t i = 0; i < n; ++i)
    for (std::int64_t j = 0; j < out; ++j) py[i * out + j] += pb[j];
  return {std::move(y), DenseCache<T>{x}};
}

template <typename T>
LayerGrad<T> dense_backward(const Tensor<T>& d_y, const DenseCache<T>& cache,
                            const DenseParams<T>& p) {
  if (d_y.rank() != 2 || d_y.dim(0) != cache.x.dim(0) || d_y.dim(1) != p.out_features)
    throw Error("dense_backward d_y shape " + shape_str(d_y.shape()) + " does not match cache");
  Tensor<T> d_w = matmul_atb(cache.x, d_y);
  Tensor<T> d_b = reduce(d_y, 0, Reduce::sum);
  Tensor<T> d_x = matmul_abt(d_y, p.weights);
  return {std::move(d_x), {std::move(d_w), std::move(d_b)}};
}

// ---------------------------------------------------------------------------
// relu

template <typename T>
struct ReluCache {
  Tensor<T> x;
};

template <typename T>
std::pair<Tensor<T>, ReluCache<T>> relu_forward(const Tensor<T>& x) {
  Tensor<T> y(x.shape());
  const T* px = x.data().data();
  T* py = y.data().data();
  for (std::int64_t i = 0; i < x.size(); ++i) py[i] = px[i] > T(0) ? px[i] : T(0);
  return {std::move(y), ReluCache<T>{x}};
}

// Subgradient at exactly 0 is 0.
template <typename T>
Tensor<T> relu_backward(const Tensor<T>& d_y, const ReluCache<T>& cache) {
  if (d_y.shape() != cache.x.shape())
    throw Error("relu_backward d_y shape " + shape_str(d_y.shape()) + " != cached input shape");
  Tensor<T> d_x(d_y.shape());
  const T* pdy = d_y.data().data();
  const T* px = cache.x.data().data();
  T* pdx = d_x.data().data();
  for (std::int64_t i = 0; i < d_y.size(); ++i) pdx[i] = px[i] > T(0) ? pdy[i] : T(0);
  return d_x;
}

// ---------------------------------------------------------------------------
// dropout (inverted: kept elements scaled by 1/(1-rate) so eval is identity)

template <typename T>
struct DropoutCache {
  Tensor<T> mask;  // 0 for dropped, 1/(1-rate) for kept
};

template <typename T>
std::pair<Tensor<T>, DropoutCache<T>> dropout_forward(const Tensor<T>& x, const DropoutParams& p,
                                                      std::mt19937& rng) {
  if (!(p.rate >= 0.0 && p.rate < 1.0))
    throw Error("dropout rate must be in [0,1), got " + std::to_string(p.rate));
  if (p.mode == Mode::eval || p.rate == 0.0)
    return {x, DropoutCache<T>{Tensor<T>::full(x.shape(), T(1))}};
  Tensor<T> mask(x.shape());
  const T scale = static_cast<T>(1.0 / (1.0 - p.rate));
  T* pm = mask.data().data();
  for (std::int64_t i = 0; i < mask.size(); ++i) {
    const double u = static_cast<double>(rng()) * 0x1p-32;  // pinned uniform in [0,1)
    pm[i] = (u >= p.rate) ? scale : T(0);
  }
  Tensor<T> y = mul(x, mask);
  return {std::move(y), DropoutCache<T>{std::move(mask)}};
}

template <typename T>
Tensor<T> dropout_backward(const Tensor<T>& d_y, const DropoutCache<T>& cache) {
  return mul(d_y, cache.mask);
}

// ---------------------------------------------------------------------------
// softmax (row-wise, max-subtracted)

template <typename T>
Tensor<T> softmax(const Tensor<T>& x) {
  if (x.rank() != 2) throw Error("softmax expects [n, classes], got " + shape_str(x.shape()));
  const std::int64_t n = x.dim(0), c = x.dim(1);
  Tensor<T> y(x.shape());
  const T* px = x.data().data();
  T* py = y.data().data();
  for (std::int64_t i = 0; i < n; ++i) {
    const T* row = px + i * c;
    T m = row[0];
    for (std::int64_t j = 1; j < c; ++j) m = std::max(m, row[j]);
    T sum = 0;
    T* out = py + i * c;
    for (std::int64_t j = 0; j < c; ++j) {
      out[j] = std::exp(row[j] - m);
      sum += out[j];
    }
    for (std::int64_t j = 0; j < c; ++j) out[j] /= sum;
  }
  return y;
}

// ---------------------------------------------------------------------------
// flatten

struct FlattenCache {
  Shape x_shape;
};

template <typename T>
std::pair<Tensor<T>, FlattenCache> flatten_forward(const Tensor<T>& x) {
  if (x.rank() != 4) throw Error("flatten expects rank-4 input, got " + shape_str(x.shape()));
  return {x.reshaped({x.dim(0), x.dim(1) * x.dim(2) * x.dim(3)}), FlattenCache{x.shape()}};
}

template <typename T>
Tensor<T> flatten_backward(const Tensor<T>& d_y, const FlattenCache& cache) {
  return d_y.reshaped(cache.x_shape);
}

}  // namespace histoconv
