#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "helpers.hpp"
#include "histoconv/optimizer.hpp"

using namespace histoconv;
using testutil::random_normal;

TEST_CASE("defaults and validation") {
  RmspropConfig c;
  CHECK(c.learning_rate == doctest::Approx(1e-4));
  CHECK(c.rho == doctest::Approx(0.9));
  CHECK(c.epsilon == doctest::Approx(1e-7));
  c.validate();

  RmspropConfig bad = c;
  bad.learning_rate = 0.0;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = c;
  bad.rho = 1.0;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = c;
  bad.epsilon = 0.0;
  CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("first step from zero state has the closed-form size") {
  // v = 0.1*g^2 = 0.1; delta = -lr * 1 / (sqrt(0.1) + eps)
  RmspropConfig c;  // defaults
  Tensor<double> p({1}, {0.0});
  Tensor<double> g({1}, {1.0});
  RmspropState<double> st{Tensor<double>::zeros({1}), 0};
  auto [p2, st2] = rmsprop_step(p, g, st, c);

  const double expect = -1e-4 / (std::sqrt(0.1) + 1e-7);
  CHECK(p2[0] == doctest::Approx(expect).epsilon(1e-12));
  // the rounded literature value
  CHECK(std::abs(p2[0] - (-3.1623e-4)) < 1e-7);
  CHECK(st2.v[0] == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(st2.step == 1);
}

TEST_CASE("two steps match a scalar recurrence oracle") {
  RmspropConfig c;
  c.learning_rate = 0.01;
  c.rho = 0.9;
  c.epsilon = 1e-7;

  // independent scalar evaluation of the update rule
  double v = 0.0, p = 0.5;
  const double g1 = 0.3, g2 = -0.7;
  v = 0.9 * v + 0.1 * g1 * g1;
  p = p - 0.01 * g1 / (std::sqrt(v) + 1e-7);
  v = 0.9 * v + 0.1 * g2 * g2;
  p = p - 0.01 * g2 / (std::sqrt(v) + 1e-7);

  Tensor<double> pt({1}, {0.5});
  RmspropState<double> st{Tensor<double>::zeros({1}), 0};
  auto [p1, s1] = rmsprop_step(pt, Tensor<double>({1}, {g1}), st, c);
  auto [p2, s2] = rmsprop_step(p1, Tensor<double>({1}, {g2}), s1, c);

  CHECK(p2[0] == doctest::Approx(p).epsilon(1e-12));
  CHECK(s2.v[0] == doctest::Approx(v).epsilon(1e-12));
  CHECK(s2.step == 2);
}

TEST_CASE("accumulator stays non-negative and shapes are enforced") {
  std::mt19937 rng(1);
  RmspropConfig c;
  auto p = random_normal({4, 3}, rng);
  RmspropState<double> st{Tensor<double>::zeros({4, 3}), 0};
  for (int it = 0; it < 50; ++it) {
    auto g = random_normal({4, 3}, rng, 2.0);
    auto [pn, sn] = rmsprop_step(p, g, st, c);
    p = pn;
    st = sn;
    for (auto v : st.v.data()) CHECK(v >= 0.0);
  }
  CHECK(st.step == 50);

  auto wrong = Tensor<double>::zeros({2, 2});
  CHECK_THROWS_AS(rmsprop_step(p, wrong, st, c), Error);
}

TEST_CASE("with a constant gradient the step size settles near the learning rate") {
  RmspropConfig c;
  c.learning_rate = 1e-2;
  Tensor<double> p({1}, {0.0});
  RmspropState<double> st{Tensor<double>::zeros({1}), 0};
  Tensor<double> g({1}, {0.37});
  double prev = 0.0;
  for (int it = 0; it < 500; ++it) {
    prev = p[0];
    auto [pn, sn] = rmsprop_step(p, g, st, c);
    p = pn;
    st = sn;
  }
  // v converges to g^2, so each step approaches -lr * sign(g)
  CHECK(std::abs((prev - p[0]) - 1e-2) < 1e-4);
}

TEST_CASE("zero gradient leaves parameters untouched") {
  RmspropConfig c;
  Tensor<double> p({3}, {1.0, -2.0, 3.0});
  RmspropState<double> st{Tensor<double>::zeros({3}), 0};
  auto [p2, s2] = rmsprop_step(p, Tensor<double>::zeros({3}), st, c);
  for (std::int64_t i = 0; i < 3; ++i) CHECK(p2[i] == p[i]);
}

TEST_CASE("attach_states builds one zero state per parameter") {
  std::vector<Tensor<float>> params;
  params.push_back(TensorF::zeros({3, 3, 3, 32}));
  params.push_back(TensorF::zeros({32}));
  auto states = attach_states(params);
  REQUIRE(states.size() == 2);
  CHECK(states[0].v.shape() == params[0].shape());
  CHECK(states[1].v.shape() == params[1].shape());
  CHECK(states[0].step == 0);
  for (auto v : states[0].v.data()) CHECK(v == 0.0f);
}

TEST_CASE("in-place kernel agrees with the pure step") {
  std::mt19937 rng(2);
  RmspropConfig c;
  c.learning_rate = 3e-3;
  auto p0 = random_normal({5}, rng);
  auto g = random_normal({5}, rng);

  auto p_pure = p0;
  RmspropState<double> st_pure{Tensor<double>::zeros({5}), 0};
  auto [p1, s1] = rmsprop_step(p_pure, g, st_pure, c);

  auto p_inpl = p0;
  RmspropState<double> st_inpl{Tensor<double>::zeros({5}), 0};
  rmsprop_step_inplace(p_inpl, g, st_inpl, c);

  for (std::int64_t i = 0; i < 5; ++i) {
    CHECK(p_inpl[i] == doctest::Approx(p1[i]).epsilon(1e-15));
    CHECK(st_inpl.v[i] == doctest::Approx(s1.v[i]).epsilon(1e-15));
  }
  CHECK(st_inpl.step == 1);
}
