#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "histoconv/parallel.hpp"

namespace histoconv {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

using Shape = std::vector<std::int64_t>;

inline std::int64_t numel(const Shape& shape) {
  std::int64_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

inline std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
  os << ']';
  return os.str();
}

// Canonical NHWC interpretation of an image batch (row-major, channels fastest).
struct Shape4 {
  std::int64_t n, h, w, c;
  Shape4(std::int64_t n_, std::int64_t h_, std::int64_t w_, std::int64_t c_)
      : n(n_), h(h_), w(w_), c(c_) {
    if (n < 1 || h < 1 || w < 1 || c < 1)
      throw Error("Shape4 extents must all be >= 1, got " + shape_str({n, h, w, c}));
  }
  explicit Shape4(const Shape& s) : Shape4(s.size() == 4 ? s[0] : -1,
                                           s.size() == 4 ? s[1] : -1,
                                           s.size() == 4 ? s[2] : -1,
                                           s.size() == 4 ? s[3] : -1) {}
  Shape as_shape() const { return {n, h, w, c}; }
};

// Dense n-dimensional array, row-major (last axis fastest). A tensor is a
// value: copies are deep, the shape never changes after construction, and a
// constructed tensor may be shared across threads for reading.
template <typename T>
class Tensor {
 public:
  Tensor() = default;

  explicit Tensor(Shape shape) : shape_(std::move(shape)) {
    validate_shape();
    data_.assign(static_cast<std::size_t>(numel(shape_)), T(0));
  }

  Tensor(Shape shape, T value) : shape_(std::move(shape)) {
    validate_shape();
    data_.assign(static_cast<std::size_t>(numel(shape_)), value);
  }

  Tensor(Shape shape, std::vector<T> data) : shape_(std::move(shape)), data_(std::move(data)) {
    validate_shape();
    if (numel(shape_) != static_cast<std::int64_t>(data_.size()))
      throw Error("tensor data length " + std::to_string(data_.size()) +
                  " does not match shape " + shape_str(shape_));
  }

  static Tensor zeros(Shape shape) { return Tensor(std::move(shape)); }
  static Tensor full(Shape shape, T value) { return Tensor(std::move(shape), value); }
  static Tensor zeros_like(const Tensor& other) { return Tensor(other.shape()); }

  const Shape& shape() const { return shape_; }
  int rank() const { return static_cast<int>(shape_.size()); }
  std::int64_t dim(int axis) const { return shape_.at(static_cast<std::size_t>(axis)); }
  std::int64_t size() const { return static_cast<std::int64_t>(data_.size()); }

  std::span<T> data() { return data_; }
  std::span<const T> data() const { return data_; }

  T& operator[](std::int64_t i) { return data_[static_cast<std::size_t>(i)]; }
  const T& operator[](std::int64_t i) const { return data_[static_cast<std::size_t>(i)]; }

  T& operator()(std::int64_t i, std::int64_t j) { return data_[static_cast<std::size_t>(i * shape_[1] + j)]; }
  const T& operator()(std::int64_t i, std::int64_t j) const {
    return data_[static_cast<std::size_t>(i * shape_[1] + j)];
  }
  T& operator()(std::int64_t i, std::int64_t j, std::int64_t k) {
    return data_[static_cast<std::size_t>((i * shape_[1] + j) * shape_[2] + k)];
  }
  const T& operator()(std::int64_t i, std::int64_t j, std::int64_t k) const {
    return data_[static_cast<std::size_t>((i * shape_[1] + j) * shape_[2] + k)];
  }
  T& operator()(std::int64_t i, std::int64_t j, std::int64_t k, std::int64_t l) {
    return data_[static_cast<std::size_t>(((i * shape_[1] + j) * shape_[2] + k) * shape_[3] + l)];
  }
  const T& operator()(std::int64_t i, std::int64_t j, std::int64_t k, std::int64_t l) const {
    return data_[static_cast<std::size_t>(((i * shape_[1] + j) * shape_[2] + k) * shape_[3] + l)];
  }

  // New value with the same data in a new shape; element count must match.
  Tensor reshaped(Shape new_shape) const {
    if (numel(new_shape) != size())
      throw Error("reshape from " + shape_str(shape_) + " to " + shape_str(new_shape) +
                  " changes element count");
    Tensor out;
    out.shape_ = std::move(new_shape);
    out.validate_shape();
    out.data_ = data_;
    return out;
  }

 private:
  void validate_shape() const {
    if (shape_.empty()) throw Error("tensor shape must have at least one axis");
    for (auto d : shape_)
      if (d < 1) throw Error("tensor extents must all be >= 1, got " + shape_str(shape_));
  }

  Shape shape_;
  std::vector<T> data_;
};

using TensorF = Tensor<float>;
using TensorD = Tensor<double>;

enum class BinaryOp { add, sub, mul, div };

// Per-element combination of two same-shape tensors. No implicit
// broadcasting; division follows IEEE semantics (x/0 yields +/-inf or nan).
template <typename T>
Tensor<T> elementwise(const Tensor<T>& a, const Tensor<T>& b, BinaryOp op) {
  if (a.shape() != b.shape())
    throw Error("elementwise shape mismatch: " + shape_str(a.shape()) + " vs " +
                shape_str(b.shape()));
  Tensor<T> out(a.shape());
  const T* pa = a.data().data();
  const T* pb = b.data().data();
  T* po = out.data().data();
  const std::int64_t n = a.size();
  switch (op) {
    case BinaryOp::add: for (std::int64_t i = 0; i < n; ++i) po[i] = pa[i] + pb[i]; break;
    case BinaryOp::sub: for (std::int64_t i = 0; i < n; ++i) po[i] = pa[i] - pb[i]; break;
    case BinaryOp::mul: for (std::int64_t i = 0; i < n; ++i) po[i] = pa[i] * pb[i]; break;
    case BinaryOp::div: for (std::int64_t i = 0; i < n; ++i) po[i] = pa[i] / pb[i]; break;
  }
  return out;
}

template <typename T> Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) { return elementwise(a, b, BinaryOp::add); }
template <typename T> Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) { return elementwise(a, b, BinaryOp::sub); }
template <typename T> Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) { return elementwise(a, b, BinaryOp::mul); }
template <typename T> Tensor<T> div(const Tensor<T>& a, const Tensor<T>& b) { return elementwise(a, b, BinaryOp::div); }

namespace detail {

template <typename T>
void require_rank2(const Tensor<T>& t, const char* who) {
  if (t.rank() != 2) throw Error(std::string(who) + " expects a rank-2 tensor, got " + shape_str(t.shape()));
}

}  // namespace detail

// C = A[m,k] * B[k,n]. Row-parallel; each output row is computed by exactly
// one worker in a fixed order, so results are deterministic for fixed inputs.
template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
  detail::require_rank2(a, "matmul");
  detail::require_rank2(b, "matmul");
  const std::int64_t m = a.dim(0), k = a.dim(1), k2 = b.dim(0), n = b.dim(1);
  if (k != k2)
    throw Error("matmul inner extents differ: " + shape_str(a.shape()) + " vs " +
                shape_str(b.shape()));
  Tensor<T> c({m, n});
  const T* pa = a.data().data();
  const T* pb = b.data().data();
  T* pc = c.data().data();
  parallel_for(m, [&](std::int64_t i0, std::int64_t i1) {
    for (std::int64_t i = i0; i < i1; ++i) {
      T* crow = pc + i * n;
      const T* arow = pa + i * k;
      for (std::int64_t kk = 0; kk < k; ++kk) {
        const T aik = arow[kk];
        const T* brow = pb + kk * n;
        for (std::int64_t j = 0; j < n; ++j) crow[j] += aik * brow[j];
      }
    }
  }, /*grain=*/std::max<std::int64_t>(1, 16384 / std::max<std::int64_t>(1, k * n)));
  return c;
}

// C = A[m,k] * B[n,k]^T. Contiguous dot products over k.
template <typename T>
Tensor<T> matmul_abt(const Tensor<T>& a, const Tensor<T>& b) {
  detail::require_rank2(a, "matmul_abt");
  detail::require_rank2(b, "matmul_abt");
  const std::int64_t m = a.dim(0), k = a.dim(1), n = b.dim(0);
  if (k != b.dim(1))
    throw Error("matmul_abt inner extents differ: " + shape_str(a.shape()) + " vs " +
                shape_str(b.shape()));
  Tensor<T> c({m, n});
  const T* pa = a.data().data();
  const T* pb = b.data().data();
  T* pc = c.data().data();
  parallel_for(m, [&](std::int64_t i0, std::int64_t i1) {
    for (std::int64_t i = i0; i < i1; ++i) {
      const T* arow = pa + i * k;
      T* crow = pc + i * n;
      for (std::int64_t j = 0; j < n; ++j) {
        const T* brow = pb + j * k;
        T acc = 0;
        for (std::int64_t kk = 0; kk < k; ++kk) acc += arow[kk] * brow[kk];
        crow[j] = acc;
      }
    }
  }, std::max<std::int64_t>(1, 16384 / std::max<std::int64_t>(1, k * n)));
  return c;
}

// C = A[k,m]^T * B[k,n]. Accumulates rank-1 updates row by row.
template <typename T>
Tensor<T> matmul_atb(const Tensor<T>& a, const Tensor<T>& b) {
  detail::require_rank2(a, "matmul_atb");
  detail::require_rank2(b, "matmul_atb");
  const std::int64_t k = a.dim(0), m = a.dim(1), n = b.dim(1);
  if (k != b.dim(0))
    throw Error("matmul_atb outer extents differ: " + shape_str(a.shape()) + " vs " +
                shape_str(b.shape()));
  Tensor<T> c({m, n});
  const T* pa = a.data().data();
  const T* pb = b.data().data();
  T* pc = c.data().data();
  parallel_for(m, [&](std::int64_t j0, std::int64_t j1) {
    for (std::int64_t kk = 0; kk < k; ++kk) {
      const T* arow = pa + kk * m;
      const T* brow = pb + kk * n;
      for (std::int64_t j = j0; j < j1; ++j) {
        const T ajk = arow[j];
        T* crow = pc + j * n;
        for (std::int64_t jj = 0; jj < n; ++jj) crow[jj] += ajk * brow[jj];
      }
    }
  }, std::max<std::int64_t>(1, 16384 / std::max<std::int64_t>(1, k * n)));
  return c;
}

template <typename T>
Tensor<T> transpose2d(const Tensor<T>& t) {
  detail::require_rank2(t, "transpose2d");
  const std::int64_t m = t.dim(0), n = t.dim(1);
  Tensor<T> out({n, m});
  for (std::int64_t i = 0; i < m; ++i)
    for (std::int64_t j = 0; j < n; ++j) out(j, i) = t(i, j);
  return out;
}

enum class Reduce { sum, max, mean };

// Reduces one axis away; the result drops that axis (rank-1 inputs reduce to
// a single-element tensor).
template <typename T>
Tensor<T> reduce(const Tensor<T>& t, int axis, Reduce op) {
  if (axis < 0 || axis >= t.rank())
    throw Error("reduce axis " + std::to_string(axis) + " invalid for " + shape_str(t.shape()));
  const Shape& s = t.shape();
  Shape out_shape;
  for (int i = 0; i < t.rank(); ++i)
    if (i != axis) out_shape.push_back(s[static_cast<std::size_t>(i)]);
  if (out_shape.empty()) out_shape = {1};

  std::int64_t outer = 1, inner = 1;
  for (int i = 0; i < axis; ++i) outer *= s[static_cast<std::size_t>(i)];
  for (int i = axis + 1; i < t.rank(); ++i) inner *= s[static_cast<std::size_t>(i)];
  const std::int64_t extent = s[static_cast<std::size_t>(axis)];

  Tensor<T> out(out_shape);
  const T* src = t.data().data();
  T* dst = out.data().data();
  for (std::int64_t o = 0; o < outer; ++o) {
    for (std::int64_t in = 0; in < inner; ++in) {
      const T* base = src + (o * extent) * inner + in;
      T acc = (op == Reduce::max) ? *base : T(0);
      for (std::int64_t e = (op == Reduce::max) ? 1 : 0; e < extent; ++e) {
        const T v = base[e * inner];
        if (op == Reduce::max)
          acc = std::max(acc, v);
        else
          acc += v;
      }
      if (op == Reduce::mean) acc /= static_cast<T>(extent);
      dst[o * inner + in] = acc;
    }
  }
  return out;
}

// Full reduction to a scalar.
template <typename T>
T reduce_all(const Tensor<T>& t, Reduce op) {
  const T* p = t.data().data();
  const std::int64_t n = t.size();
  T acc = (op == Reduce::max) ? p[0] : T(0);
  for (std::int64_t i = (op == Reduce::max) ? 1 : 0; i < n; ++i)
    acc = (op == Reduce::max) ? std::max(acc, p[i]) : acc + p[i];
  if (op == Reduce::mean) acc /= static_cast<T>(n);
  return acc;
}

}  // namespace histoconv
