#pragma once

#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "histoconv/layers.hpp"
#include "histoconv/tensor.hpp"

namespace histoconv {

// Mean categorical cross-entropy over a batch, in nats.
struct LossValue {
  double mean_loss = 0.0;
  std::int64_t batch_size = 0;
};

struct EpochMetrics {
  int epoch = 0;  // 1-based
  double train_loss = 0.0, train_acc = 0.0;
  double val_loss = 0.0, val_acc = 0.0;
};

namespace detail {

template <typename T>
void check_prob_target_pair(const Tensor<T>& probs, const Tensor<T>& targets) {
  if (probs.rank() != 2 || targets.rank() != 2 || probs.shape() != targets.shape())
    throw Error("probs " + shape_str(probs.shape()) + " and targets " +
                shape_str(targets.shape()) + " must be matching [n, classes] tensors");
  const std::int64_t n = targets.dim(0), c = targets.dim(1);
  for (std::int64_t i = 0; i < n; ++i) {
    int ones = 0;
    for (std::int64_t j = 0; j < c; ++j) {
      const T v = targets(i, j);
      if (v == T(1))
        ++ones;
      else if (v != T(0))
        throw Error("target row " + std::to_string(i) + " is not one-hot");
    }
    if (ones != 1) throw Error("target row " + std::to_string(i) + " is not one-hot");
  }
}

}  // namespace detail

// Probabilities are clamped to [1e-7, 1] inside the log; the loss is the
// mean over the batch, not the sum.
template <typename T>
LossValue cross_entropy(const Tensor<T>& probs, const Tensor<T>& targets) {
  detail::check_prob_target_pair(probs, targets);
  const std::int64_t n = probs.dim(0), c = probs.dim(1);
  double total = 0.0;
  for (std::int64_t i = 0; i < n; ++i) {
    double row_sum = 0.0;
    for (std::int64_t j = 0; j < c; ++j) row_sum += static_cast<double>(probs(i, j));
    if (std::abs(row_sum - 1.0) > 1e-4)
      throw Error("probs row " + std::to_string(i) + " sums to " + std::to_string(row_sum) +
                  ", not 1");
    for (std::int64_t j = 0; j < c; ++j) {
      if (targets(i, j) == T(1)) {
        const double y = std::min(std::max(static_cast<double>(probs(i, j)), 1e-7), 1.0);
        total -= std::log(y);
      }
    }
  }
  return {total / static_cast<double>(n), n};
}

// Fused gradient of mean cross-entropy w.r.t. logits:
// d_logits = (softmax(logits) - targets) / n.
template <typename T>
Tensor<T> softmax_xent_grad(const Tensor<T>& logits, const Tensor<T>& targets) {
  detail::check_prob_target_pair(logits, targets);
  Tensor<T> d = softmax(logits);
  const std::int64_t n = d.dim(0);
  T* pd = d.data().data();
  const T* pt = targets.data().data();
  const T inv_n = T(1) / static_cast<T>(n);
  for (std::int64_t i = 0; i < d.size(); ++i) pd[i] = (pd[i] - pt[i]) * inv_n;
  return d;
}

// Fraction of rows whose argmax matches the target class. Argmax ties break
// toward the lowest class index.
template <typename T>
double accuracy(const Tensor<T>& probs, const Tensor<T>& targets) {
  detail::check_prob_target_pair(probs, targets);
  const std::int64_t n = probs.dim(0), c = probs.dim(1);
  std::int64_t correct = 0;
  for (std::int64_t i = 0; i < n; ++i) {
    std::int64_t pred = 0, truth = 0;
    for (std::int64_t j = 1; j < c; ++j) {
      if (probs(i, j) > probs(i, pred)) pred = j;
      if (targets(i, j) == T(1)) truth = j;
    }
    if (pred == truth) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(n);
}

// Mean and sample standard deviation (n-1 denominator; 0 for a single value).
inline std::pair<double, double> aggregate_mean_std(const std::vector<double>& values) {
  if (values.empty()) throw Error("aggregate_mean_std needs at least one value");
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  if (values.size() == 1) return {mean, 0.0};
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / static_cast<double>(values.size() - 1))};
}

}  // namespace histoconv
