#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "helpers.hpp"
#include "histoconv/layers.hpp"
#include "histoconv/loss.hpp"

using namespace histoconv;
using testutil::random_normal;
using testutil::rel_err_max;

namespace {

Tensor<double> one_hot(const std::vector<int>& labels, std::int64_t classes) {
  auto t = Tensor<double>::zeros({std::int64_t(labels.size()), classes});
  for (std::size_t i = 0; i < labels.size(); ++i) t(std::int64_t(i), labels[i]) = 1.0;
  return t;
}

}  // namespace

TEST_CASE("cross entropy analytic values") {
  // uniform prediction over 3 classes: loss is ln 3 per sample
  Tensor<double> probs({2, 3}, {1.0 / 3, 1.0 / 3, 1.0 / 3, 1.0 / 3, 1.0 / 3, 1.0 / 3});
  auto targets = one_hot({0, 2}, 3);
  auto lv = cross_entropy(probs, targets);
  CHECK(lv.batch_size == 2);
  CHECK(lv.mean_loss == doctest::Approx(1.0986122886681098).epsilon(1e-5));

  // perfect prediction: loss 0 up to the floor clamp
  Tensor<double> sure({1, 2}, {1.0, 0.0});
  auto lv2 = cross_entropy(sure, one_hot({0}, 2));
  CHECK(lv2.mean_loss == doctest::Approx(0.0).epsilon(1e-9));

  // scalar oracle: -ln p_true averaged over the batch
  Tensor<double> p({2, 2}, {0.9, 0.1, 0.25, 0.75});
  auto lv3 = cross_entropy(p, one_hot({0, 1}, 2));
  const double expect = -(std::log(0.9) + std::log(0.75)) / 2.0;
  CHECK(lv3.mean_loss == doctest::Approx(expect).epsilon(1e-9));
}

TEST_CASE("cross entropy clamps a zero probability instead of producing inf") {
  Tensor<double> p({1, 2}, {0.0, 1.0});
  auto lv = cross_entropy(p, one_hot({0}, 2));
  CHECK(std::isfinite(lv.mean_loss));
  CHECK(lv.mean_loss == doctest::Approx(-std::log(1e-7)).epsilon(1e-6));
}

TEST_CASE("cross entropy validates its inputs") {
  auto t = one_hot({0}, 2);
  CHECK_THROWS_AS(cross_entropy(Tensor<double>({1, 2}, {0.5, 0.6}), t), Error);  // row sum != 1
  CHECK_THROWS_AS(cross_entropy(Tensor<double>({1, 3}, {0.2, 0.3, 0.5}), t), Error);  // shape
  Tensor<double> not_onehot({1, 2}, {0.5, 0.5});
  CHECK_THROWS_AS(cross_entropy(Tensor<double>({1, 2}, {0.5, 0.5}), not_onehot), Error);
}

TEST_CASE("fused gradient equals softmax minus targets over n") {
  std::mt19937 rng(1);
  auto logits = random_normal({4, 3}, rng, 2.0);
  auto targets = one_hot({0, 2, 1, 1}, 3);
  auto g = softmax_xent_grad(logits, targets);
  auto p = softmax(logits);
  for (std::int64_t i = 0; i < g.size(); ++i)
    CHECK(g[i] == doctest::Approx((p[i] - targets[i]) / 4.0).epsilon(1e-12));
}

TEST_CASE("fused gradient matches finite differences through softmax and loss") {
  std::mt19937 rng(2);
  for (int it = 0; it < 5; ++it) {
    auto logits = random_normal({3, 4}, rng, 1.5);
    auto targets = one_hot({it % 4, (it + 1) % 4, (it + 2) % 4}, 4);
    auto g = softmax_xent_grad(logits, targets);
    auto fd = testutil::fd_grad(logits, [&](const Tensor<double>& probe) {
      return cross_entropy(softmax(probe), targets).mean_loss;
    });
    CHECK(rel_err_max(g, fd) < 1e-6);
  }
}

TEST_CASE("fused gradient rows sum to zero") {
  std::mt19937 rng(3);
  auto logits = random_normal({5, 3}, rng, 3.0);
  auto targets = one_hot({0, 1, 2, 0, 1}, 3);
  auto g = softmax_xent_grad(logits, targets);
  for (std::int64_t i = 0; i < 5; ++i) {
    double s = 0.0;
    for (std::int64_t j = 0; j < 3; ++j) s += g(i, j);
    CHECK(std::abs(s) < 1e-12);
  }
}

TEST_CASE("accuracy counts argmax matches") {
  Tensor<double> probs({3, 2}, {0.9, 0.1, 0.2, 0.8, 0.6, 0.4});
  auto targets = one_hot({0, 1, 1}, 2);
  CHECK(accuracy(probs, targets) == doctest::Approx(2.0 / 3.0));
  CHECK(accuracy(probs, one_hot({0, 1, 0}, 2)) == doctest::Approx(1.0));
}

TEST_CASE("accuracy breaks argmax ties toward the lower index") {
  Tensor<double> probs({1, 3}, {0.4, 0.4, 0.2});
  CHECK(accuracy(probs, one_hot({0}, 3)) == doctest::Approx(1.0));
  CHECK(accuracy(probs, one_hot({1}, 3)) == doctest::Approx(0.0));
}

TEST_CASE("accuracy is invariant under monotone rescaling of scores") {
  std::mt19937 rng(4);
  for (int it = 0; it < 10; ++it) {
    auto scores = random_normal({6, 4}, rng);
    auto targets = one_hot({0, 1, 2, 3, 1, 2}, 4);
    auto a1 = accuracy(scores, targets);
    auto scaled = scores;
    for (auto& v : scaled.data()) v = 3.0 * v + 11.0;
    CHECK(accuracy(scaled, targets) == doctest::Approx(a1));
  }
}

TEST_CASE("mean and sample standard deviation") {
  auto [m, s] = aggregate_mean_std({1.0, 2.0, 3.0});
  CHECK(m == doctest::Approx(2.0));
  CHECK(s == doctest::Approx(1.0));  // sample std with n-1 denominator

  auto [m1, s1] = aggregate_mean_std({5.5});
  CHECK(m1 == doctest::Approx(5.5));
  CHECK(s1 == 0.0);

  CHECK_THROWS_AS(aggregate_mean_std({}), Error);
}
