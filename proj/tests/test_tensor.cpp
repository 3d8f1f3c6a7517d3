#include <gtest/gtest.h>

#include <cmath>

#include "advca/tensor.hpp"

using namespace advca;

namespace {

std::vector<real> values(const Tensor& t) { return {t.data().begin(), t.data().end()}; }

}  // namespace

TEST(Tensor, RejectsMismatchedValueCount) {
  EXPECT_THROW(Tensor::from({2, 2}, {1, 2, 3}), DimensionError);
  EXPECT_THROW(Tensor::zeros({0, 3}), DimensionError);
}

TEST(Tensor, GradPresentIffRequiresGrad) {
  auto a = Tensor::zeros({2, 3});
  EXPECT_TRUE(a.grad().empty());
  a.set_requires_grad(true);
  EXPECT_EQ(a.grad().size(), 6u);
}

TEST(Matmul, IdentityLeavesOperandUnchanged) {
  auto eye = Tensor::from({2, 2}, {1, 0, 0, 1});
  auto m = Tensor::from({2, 2}, {1, 2, 3, 4});
  EXPECT_EQ(values(matmul(eye, m)), (std::vector<real>{1, 2, 3, 4}));
}

TEST(Matmul, Projector) {
  auto p = Tensor::from({2, 2}, {1, 0, 0, 0});
  auto v = Tensor::from({2, 1}, {5, 7});
  auto out = matmul(p, v);
  EXPECT_EQ(out.shape(), (Shape{2, 1}));
  EXPECT_EQ(values(out), (std::vector<real>{5, 0}));
}

TEST(Matmul, ShapeMismatchIsDimensionError) {
  EXPECT_THROW(matmul(Tensor::zeros({2, 3}), Tensor::zeros({2, 3})), DimensionError);
}

TEST(Elementwise, HadamardProduct) {
  auto a = Tensor::from({3}, {1, 2, 3});
  auto b = Tensor::from({3}, {0, 1, 0});
  EXPECT_EQ(values(a * b), (std::vector<real>{0, 2, 0}));
}

TEST(Elementwise, ColumnBroadcast) {
  auto col = Tensor::from({2, 1}, {2, 3});
  auto out = col * Tensor::ones({2, 2});
  EXPECT_EQ(out.shape(), (Shape{2, 2}));
  EXPECT_EQ(values(out), (std::vector<real>{2, 2, 3, 3}));
}

TEST(Elementwise, BroadcastGradientSumsOverExpandedAxis) {
  auto col = Tensor::from({2, 1}, {2, 3}, true);
  auto m = Tensor::from({2, 2}, {1, 2, 3, 4}, true);
  sum(col * m).backward();
  EXPECT_EQ(std::vector<real>(col.grad().begin(), col.grad().end()), (std::vector<real>{3, 7}));
  EXPECT_EQ(std::vector<real>(m.grad().begin(), m.grad().end()), (std::vector<real>{2, 2, 3, 3}));
}

TEST(Elementwise, NonBroadcastableIsDimensionError) {
  EXPECT_THROW(Tensor::zeros({2, 3}) + Tensor::zeros({3, 2}), DimensionError);
  EXPECT_THROW(Tensor::zeros({2}) * Tensor::zeros({3}), DimensionError);
}

TEST(Sigmoid, KnownValues) {
  EXPECT_EQ(sigmoid(Tensor::scalar(0)).item(), real{0.5});
  EXPECT_NEAR(sigmoid(Tensor::scalar(100)).item(), 1.0, 1e-9);
  // 1 / (1 + e^-1) to 10 digits.
  EXPECT_NEAR(sigmoid(Tensor::scalar(1)).item(), 0.7310585786, 1e-7);
  const real low = sigmoid(Tensor::scalar(-1000)).item();
  EXPECT_TRUE(std::isfinite(low));
  EXPECT_GE(low, 0);
}

TEST(SoftmaxCrossEntropy, UniformLogits) {
  EXPECT_NEAR(softmax_cross_entropy(Tensor::from({3}, {0.7f, 0.7f, 0.7f}), 1).item(), std::log(3.0),
              1e-6);
}

TEST(SoftmaxCrossEntropy, SaturatedLogitsStayFinite) {
  const real loss = softmax_cross_entropy(Tensor::from({2}, {1000, 0}), 0).item();
  EXPECT_TRUE(std::isfinite(loss));
  EXPECT_NEAR(loss, 0.0, 1e-6);
}

TEST(SoftmaxCrossEntropy, LabelOutOfRange) {
  EXPECT_THROW(softmax_cross_entropy(Tensor::zeros({3}), 3), IndexError);
}

TEST(Reduce, MeanAndAxisSum) {
  EXPECT_EQ(mean(Tensor::from({3}, {2, 4, 6})).item(), real{4});
  auto rows = sum(Tensor::from({2, 2}, {1, 2, 3, 4}), 0);
  EXPECT_EQ(rows.shape(), (Shape{1, 2}));
  EXPECT_EQ(values(rows), (std::vector<real>{4, 6}));
  EXPECT_THROW(sum(Tensor::zeros({2, 2}), 2), DimensionError);
}

TEST(Reduce, MeanGradientIsUniform) {
  auto a = Tensor::from({4}, {1, -2, 3, 9}, true);
  mean(a).backward();
  for (real g : a.grad()) EXPECT_EQ(g, real{0.25});
}

TEST(SquaredL2, Values) {
  auto a = Tensor::from({2}, {1, 0});
  EXPECT_EQ(squared_l2_distance(a, a).item(), real{0});
  EXPECT_EQ(squared_l2_distance(a, Tensor::from({2}, {0, 1})).item(), real{2});
  EXPECT_THROW(squared_l2_distance(a, Tensor::zeros({3})), DimensionError);
}

TEST(Backward, NonScalarRootIsContractError) {
  auto a = Tensor::ones({2}, true);
  EXPECT_THROW((a * a).backward(), ContractError);
}

TEST(Backward, ConstantRootLeavesGradsZero) {
  auto w = Tensor::from({3}, {1, 2, 3}, true);
  auto c = sum(w.detach());
  c.backward();
  for (real g : w.grad()) EXPECT_EQ(g, real{0});
}

TEST(Backward, SumGivesOnes) {
  auto w = Tensor::from({2, 2}, {1, -2, 3, 0.5f}, true);
  sum(w).backward();
  for (real g : w.grad()) EXPECT_EQ(g, real{1});
}

TEST(Backward, TwoPassesDoubleLeafGradients) {
  auto w = Tensor::from({3}, {0.3f, -1.2f, 2}, true);
  auto root = sum(sigmoid(w) * w);
  root.backward();
  std::vector<real> once(w.grad().begin(), w.grad().end());
  root.backward();
  for (std::size_t i = 0; i < once.size(); ++i) EXPECT_FLOAT_EQ(w.grad()[i], 2 * once[i]);
  w.zero_grad();
  for (real g : w.grad()) EXPECT_EQ(g, real{0});
}

TEST(Backward, SharedSubexpressionVisitedOnce) {
  auto x = Tensor::scalar(3, true);
  auto y = x * x;      // 9
  auto z = y * y + y;  // 81 + 9
  z.backward();
  // dz/dx = (2y + 1) * 2x = 19 * 6
  EXPECT_EQ(x.grad()[0], real{114});
}

TEST(NoGrad, GuardSkipsRecording) {
  auto w = Tensor::ones({2}, true);
  NoGradGuard guard;
  auto out = w * w;
  EXPECT_FALSE(out.requires_grad());
}

TEST(ForwardDeterminism, RepeatedEvaluationIsBitwiseEqual) {
  auto a = Tensor::from({3, 4}, {0.1f, -0.7f, 1.3f, 0.2f, 2.f, -1.f, 0.5f, 0.25f, -0.3f, 0.9f, 1.1f, -1.9f});
  auto b = Tensor::from({4, 2}, {0.4f, -0.2f, 1.f, 0.3f, -1.2f, 0.8f, 0.6f, -0.5f});
  EXPECT_EQ(values(sigmoid(matmul(a, b))), values(sigmoid(matmul(a, b))));
}

TEST(GatherScatter, ScatterSymmetricPlacesBothOrientations) {
  std::vector<std::pair<std::size_t, std::size_t>> pairs{{0, 1}, {1, 2}};
  auto m = scatter_symmetric(Tensor::from({2, 1}, {0.25f, 0.75f}), pairs, 3);
  EXPECT_EQ(values(m), (std::vector<real>{0, 0.25f, 0, 0.25f, 0, 0.75f, 0, 0.75f, 0}));
}
