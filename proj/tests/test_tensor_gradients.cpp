// Finite-difference checks of every differentiable tensor op. Built against
// the 64-bit storage variant of the library.

#include <gtest/gtest.h>

#include "advca/rng.hpp"
#include "advca/tensor.hpp"
#include "support/gradcheck.hpp"

using namespace advca;
using advca::testing::check_gradients;

namespace {

constexpr double kTolerance = 1e-4;

Tensor random_tensor(Rng& rng, Shape shape) {
  std::vector<real> v(shape_numel(shape));
  for (auto& x : v) x = static_cast<real>(rng.uniform(-2.0, 2.0));
  return Tensor::from(std::move(shape), std::move(v), true);
}

}  // namespace

TEST(TensorGradients, RealIsDouble) { static_assert(sizeof(real) == 8); }

TEST(TensorGradients, Matmul) {
  Rng rng(1);
  for (int trial = 0; trial < 5; ++trial) {
    auto a = random_tensor(rng, {3, 4});
    auto b = random_tensor(rng, {4, 2});
    auto r = check_gradients([&] { return sum(matmul(a, b)); }, {{"a", a}, {"b", b}});
    EXPECT_LT(r.max_rel_error, kTolerance) << r.worst;
    // Weighted sum exercises non-uniform upstream gradients.
    auto w = random_tensor(rng, {3, 2});
    w.set_requires_grad(false);
    r = check_gradients([&] { return sum(matmul(a, b) * w); }, {{"a", a}, {"b", b}});
    EXPECT_LT(r.max_rel_error, kTolerance) << r.worst;
  }
}

TEST(TensorGradients, BroadcastElementwise) {
  Rng rng(2);
  for (int trial = 0; trial < 5; ++trial) {
    auto col = random_tensor(rng, {3, 1});
    auto row = random_tensor(rng, {1, 4});
    auto m = random_tensor(rng, {3, 4});
    auto s = random_tensor(rng, {1});
    auto r = check_gradients(
        [&] { return sum((col * m - row) * (m + s) * col); },
        {{"col", col}, {"row", row}, {"m", m}, {"s", s}});
    EXPECT_LT(r.max_rel_error, kTolerance) << r.worst;
  }
}

TEST(TensorGradients, UnaryOps) {
  Rng rng(3);
  auto x = random_tensor(rng, {5, 3});
  auto w = random_tensor(rng, {5, 3});
  w.set_requires_grad(false);
  auto r = check_gradients([&] { return sum(sigmoid(x) * w); }, {{"x", x}});
  EXPECT_LT(r.max_rel_error, kTolerance) << r.worst;
  r = check_gradients([&] { return sum(relu(x) * w); }, {{"x", x}});
  EXPECT_LT(r.max_rel_error, kTolerance) << r.worst;
  r = check_gradients([&] { return sum(abs(x) * w); }, {{"x", x}});
  EXPECT_LT(r.max_rel_error, kTolerance) << r.worst;
  r = check_gradients([&] { return sum(scale(x, 0.3) * w + 2.0) + sum(mean(x * x, 1)); },
                      {{"x", x}});
  EXPECT_LT(r.max_rel_error, kTolerance) << r.worst;
}

TEST(TensorGradients, SoftmaxCrossEntropy) {
  auto logits = Tensor::from({3}, {0.2, -0.3, 0.5}, true);
  auto r = check_gradients([&] { return softmax_cross_entropy(logits, 2); }, {{"logits", logits}});
  EXPECT_LT(r.max_rel_error, kTolerance) << r.worst;
  // Analytic gradient is softmax - one_hot.
  logits.zero_grad();
  softmax_cross_entropy(logits, 2).backward();
  const double e0 = std::exp(0.2), e1 = std::exp(-0.3), e2 = std::exp(0.5);
  const double z = e0 + e1 + e2;
  EXPECT_NEAR(logits.grad()[0], e0 / z, 1e-12);
  EXPECT_NEAR(logits.grad()[1], e1 / z, 1e-12);
  EXPECT_NEAR(logits.grad()[2], e2 / z - 1.0, 1e-12);
  EXPECT_NEAR(softmax_cross_entropy(logits, 2).item(), std::log(z) - 0.5, 1e-12);
}

TEST(TensorGradients, ReductionsAndDistance) {
  Rng rng(4);
  for (int trial = 0; trial < 5; ++trial) {
    auto a = random_tensor(rng, {4, 3});
    auto b = random_tensor(rng, {4, 3});
    auto r = check_gradients(
        [&] { return squared_l2_distance(mean(a, 0), sum(b, 0)) + squared_l2_distance(a, b); },
        {{"a", a}, {"b", b}});
    EXPECT_LT(r.max_rel_error, kTolerance) << r.worst;
  }
}

TEST(TensorGradients, GatherConcatScatter) {
  Rng rng(5);
  auto z = random_tensor(rng, {4, 3});
  auto w = random_tensor(rng, {6, 1});
  std::vector<std::size_t> src{0, 1, 3};
  std::vector<std::size_t> dst{1, 2, 0};
  std::vector<std::pair<std::size_t, std::size_t>> pairs{{0, 1}, {1, 2}, {0, 3}};
  auto probe = random_tensor(rng, {4, 4});
  probe.set_requires_grad(false);
  auto r = check_gradients(
      [&] {
        auto h = concat_cols(gather_rows(z, src), gather_rows(z, dst));
        auto v = sigmoid(matmul(h, w));
        return sum(scatter_symmetric(v, pairs, 4) * probe);
      },
      {{"z", z}, {"w", w}});
  EXPECT_LT(r.max_rel_error, kTolerance) << r.worst;
}
