#pragma once

#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "histoconv/tensor.hpp"

namespace histoconv {

struct RmspropConfig {
  double learning_rate = 1e-4;
  double rho = 0.9;
  double epsilon = 1e-7;

  void validate() const {
    if (!(learning_rate > 0.0)) throw Error("learning_rate must be > 0");
    if (!(rho >= 0.0 && rho < 1.0)) throw Error("rho must be in [0,1)");
    if (!(epsilon > 0.0)) throw Error("epsilon must be > 0");
  }
};

// Per-parameter squared-gradient accumulator, zero initialized.
template <typename T>
struct RmspropState {
  Tensor<T> v;
  std::int64_t step = 0;
};

// v <- rho*v + (1-rho)*g^2;  param <- param - lr * g / (sqrt(v) + eps).
// Epsilon sits outside the square root.
template <typename T>
void rmsprop_step_inplace(Tensor<T>& param, const Tensor<T>& grad, RmspropState<T>& state,
                          const RmspropConfig& cfg) {
  cfg.validate();
  if (param.shape() != grad.shape() || param.shape() != state.v.shape())
    throw Error("rmsprop shapes differ: param " + shape_str(param.shape()) + ", grad " +
                shape_str(grad.shape()) + ", v " + shape_str(state.v.shape()));
  const T rho = static_cast<T>(cfg.rho);
  const T one_minus_rho = static_cast<T>(1.0 - cfg.rho);
  const T lr = static_cast<T>(cfg.learning_rate);
  const T eps = static_cast<T>(cfg.epsilon);
  T* pp = param.data().data();
  const T* pg = grad.data().data();
  T* pv = state.v.data().data();
  const std::int64_t n = param.size();
  for (std::int64_t i = 0; i < n; ++i) {
    pv[i] = rho * pv[i] + one_minus_rho * pg[i] * pg[i];
    pp[i] -= lr * pg[i] / (std::sqrt(pv[i]) + eps);
  }
  ++state.step;
}

template <typename T>
std::pair<Tensor<T>, RmspropState<T>> rmsprop_step(const Tensor<T>& param, const Tensor<T>& grad,
                                                   const RmspropState<T>& state,
                                                   const RmspropConfig& cfg) {
  Tensor<T> new_param = param;
  RmspropState<T> new_state = state;
  rmsprop_step_inplace(new_param, grad, new_state, cfg);
  return {std::move(new_param), std::move(new_state)};
}

// One zero-initialized state per parameter, shapes matched.
template <typename T>
std::vector<RmspropState<T>> attach_states(const std::vector<Tensor<T>>& params) {
  std::vector<RmspropState<T>> states;
  states.reserve(params.size());
  for (const auto& p : params) states.push_back(RmspropState<T>{Tensor<T>(p.shape()), 0});
  return states;
}

}  // namespace histoconv
