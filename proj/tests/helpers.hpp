#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <vector>

#include "histoconv/layers.hpp"
#include "histoconv/tensor.hpp"

namespace testutil {

using histoconv::Padding;
using histoconv::Shape;
using histoconv::Tensor;

inline Tensor<double> random_normal(const Shape& shape, std::mt19937& rng, double std_dev = 1.0) {
  Tensor<double> t(shape);
  std::normal_distribution<double> dist(0.0, std_dev);
  for (auto& v : t.data()) v = dist(rng);
  return t;
}

// Distinct values on a coarse grid (gap 0.01, offset so no element is 0).
// Keeps finite differences with h=1e-5 away from max-pool and relu kinks.
inline Tensor<double> random_distinct(const Shape& shape, std::mt19937& rng) {
  const std::int64_t n = histoconv::numel(shape);
  std::vector<double> vals(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i) vals[static_cast<std::size_t>(i)] = 0.01 * (i - n / 2) + 0.003;
  std::shuffle(vals.begin(), vals.end(), rng);
  return Tensor<double>(shape, std::move(vals));
}

template <typename T, typename U>
Tensor<T> cast(const Tensor<U>& t) {
  Tensor<T> out(t.shape());
  for (std::int64_t i = 0; i < t.size(); ++i) out[i] = static_cast<T>(t[i]);
  return out;
}

// Central finite differences of a scalar function of one tensor.
template <typename F>
Tensor<double> fd_grad(const Tensor<double>& x, F&& scalar_of, double h = 1e-5) {
  Tensor<double> g(x.shape());
  Tensor<double> probe = x;
  for (std::int64_t i = 0; i < x.size(); ++i) {
    const double orig = probe[i];
    probe[i] = orig + h;
    const double fp = scalar_of(probe);
    probe[i] = orig - h;
    const double fm = scalar_of(probe);
    probe[i] = orig;
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

inline double rel_err_max(const Tensor<double>& a, const Tensor<double>& b, double floor = 1e-6) {
  double worst = 0.0;
  for (std::int64_t i = 0; i < a.size(); ++i) {
    const double denom = std::max({floor, std::abs(a[i]), std::abs(b[i])});
    worst = std::max(worst, std::abs(a[i] - b[i]) / denom);
  }
  return worst;
}

inline double dot_all(const Tensor<double>& a, const Tensor<double>& b) {
  double s = 0.0;
  for (std::int64_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Direct six-loop convolution, independent of the im2col path.
inline Tensor<double> naive_conv2d(const Tensor<double>& x, const Tensor<double>& weights,
                                   const Tensor<double>& bias, std::int64_t stride,
                                   Padding padding) {
  const std::int64_t n = x.dim(0), h = x.dim(1), w = x.dim(2), c = x.dim(3);
  const std::int64_t kh = weights.dim(0), kw = weights.dim(1), f = weights.dim(3);
  std::int64_t oh, ow, pad_top, pad_left;
  if (padding == Padding::same) {
    oh = (h + stride - 1) / stride;
    ow = (w + stride - 1) / stride;
    pad_top = std::max<std::int64_t>((oh - 1) * stride + kh - h, 0) / 2;
    pad_left = std::max<std::int64_t>((ow - 1) * stride + kw - w, 0) / 2;
  } else {
    oh = (h - kh) / stride + 1;
    ow = (w - kw) / stride + 1;
    pad_top = pad_left = 0;
  }
  Tensor<double> y({n, oh, ow, f});
  for (std::int64_t nn = 0; nn < n; ++nn)
    for (std::int64_t oy = 0; oy < oh; ++oy)
      for (std::int64_t ox = 0; ox < ow; ++ox)
        for (std::int64_t ff = 0; ff < f; ++ff) {
          double acc = bias[ff];
          for (std::int64_t ky = 0; ky < kh; ++ky)
            for (std::int64_t kx = 0; kx < kw; ++kx) {
              const std::int64_t iy = oy * stride - pad_top + ky;
              const std::int64_t ix = ox * stride - pad_left + kx;
              if (iy < 0 || iy >= h || ix < 0 || ix >= w) continue;
              for (std::int64_t ch = 0; ch < c; ++ch)
                acc += x(nn, iy, ix, ch) * weights(ky, kx, ch, ff);
            }
          y(nn, oy, ox, ff) = acc;
        }
  return y;
}

// Direct windowed max, independent of the argmax-cache path.
inline Tensor<double> naive_maxpool(const Tensor<double>& x, std::int64_t pool,
                                    std::int64_t stride) {
  const std::int64_t n = x.dim(0), h = x.dim(1), w = x.dim(2), c = x.dim(3);
  const std::int64_t oh = (h - pool) / stride + 1;
  const std::int64_t ow = (w - pool) / stride + 1;
  Tensor<double> y({n, oh, ow, c});
  for (std::int64_t nn = 0; nn < n; ++nn)
    for (std::int64_t oy = 0; oy < oh; ++oy)
      for (std::int64_t ox = 0; ox < ow; ++ox)
        for (std::int64_t ch = 0; ch < c; ++ch) {
          double best = x(nn, oy * stride, ox * stride, ch);
          for (std::int64_t ky = 0; ky < pool; ++ky)
            for (std::int64_t kx = 0; kx < pool; ++kx)
              best = std::max(best, x(nn, oy * stride + ky, ox * stride + kx, ch));
          y(nn, oy, ox, ch) = best;
        }
  return y;
}

}  // namespace testutil
