#include <gtest/gtest.h>

#include <cmath>

#include "advca/errors.hpp"
#include "advca/gcs.hpp"
#include "support/fixtures.hpp"
#include "support/gcs_oracles.hpp"

using namespace advca;
using namespace advca::testing;

namespace {

Eigen::VectorXd point(double x) { return Eigen::VectorXd::Constant(1, x); }

}  // namespace

TEST(Kde, StandardNormalDensityAtZero) {
  const KdeModel kde = KdeModel::fit(gaussian_sample(2000, 0.0, 1.0, 1));
  EXPECT_NEAR(kde.density(point(0.0)), 1.0 / std::sqrt(2.0 * M_PI), 0.05);
}

TEST(Kde, MatchesDirectKernelSum) {
  const KdeModel kde = KdeModel::fit(gaussian_sample(300, 0.5, 2.0, 2));
  for (double z : {-3.0, 0.0, 0.7, 4.0}) EXPECT_NEAR(kde.density(point(z)), kde_reference(kde, z), 1e-12);
}

TEST(Kde, ScottBandwidth) {
  const Eigen::MatrixXd pts = gaussian_sample(500, 0.0, 3.0, 3);
  const double mean = pts.mean();
  const double sd = std::sqrt((pts.array() - mean).square().sum() / 499.0);
  EXPECT_NEAR(KdeModel::fit(pts).bandwidth()(0), sd * std::pow(500.0, -0.2), 1e-12);
}

TEST(Kde, IntegratesToOne) {
  const KdeModel kde = KdeModel::fit(gaussian_sample(2000, 0.0, 1.0, 4));
  EXPECT_NEAR(integrate([&](double z) { return kde.density(point(z)); }, -10, 10, 4000), 1.0, 0.01);
}

TEST(Kde, SymmetricForMirroredData) {
  Eigen::MatrixXd half = gaussian_sample(400, 1.0, 1.0, 5);
  Eigen::MatrixXd pts(800, 1);
  pts << half, -half;
  const KdeModel kde = KdeModel::fit(pts);
  for (double z : {0.3, 1.0, 2.5}) EXPECT_NEAR(kde.density(point(z)), kde.density(point(-z)), 1e-12);
}

TEST(Kde, PositiveEverywhereFinite) {
  const KdeModel kde = KdeModel::fit(gaussian_sample(50, 0.0, 1.0, 6));
  EXPECT_GT(kde.density(point(5.0)), 0.0);
}

TEST(Kde, NeedsTwoPoints) {
  EXPECT_THROW(KdeModel::fit(Eigen::MatrixXd::Zero(1, 2)), ArgumentError);
}

TEST(Kde, ZeroSpreadGetsFloorBandwidth) {
  const KdeModel kde = KdeModel::fit(Eigen::MatrixXd::Ones(10, 1));
  EXPECT_GT(kde.bandwidth()(0), 0.0);
  EXPECT_TRUE(std::isfinite(kde.density(point(1.0))));
}

TEST(Gcs, IdenticalSetsNearZero) {
  const Eigen::MatrixXd a = gaussian_sample(1000, 0.0, 1.0, 7);
  const GcsReport r = estimate_gcs(a, a, 10000, 0, 1);
  EXPECT_LT(r.gcs, 0.05);
  EXPECT_EQ(r.num_samples, 10000u);
  EXPECT_EQ(r.feature_dim, 1u);
}

TEST(Gcs, FarApartGaussiansNearOne) {
  const Eigen::MatrixXd a = gaussian_sample(1000, 0.0, 0.1, 8);
  const Eigen::MatrixXd b = gaussian_sample(1000, 100.0, 0.1, 9);
  // The union bandwidth is ~100x the cluster width, so the importance weights
  // are heavy; 1e5 draws bring the standard error to ~0.03.
  EXPECT_GT(estimate_gcs(a, b, 100000, 0, 2).gcs, 0.9);
}

TEST(Gcs, MatchesQuadratureOnFittedKdes) {
  const Eigen::MatrixXd a = gaussian_sample(2000, 0.0, 1.0, 10);
  const Eigen::MatrixXd b = gaussian_sample(2000, 1.0, 1.0, 11);
  const GcsReport r = estimate_gcs(a, b, 10000, 0, 3);
  EXPECT_NEAR(r.gcs, gcs_quadrature(a, b, r.epsilon), 0.1);
  // An explicit, larger threshold widens S; the estimate still tracks quadrature.
  const GcsReport wide = estimate_gcs(a, b, 10000, 0.1, 3);
  EXPECT_NEAR(wide.gcs, gcs_quadrature(a, b, 0.1), 0.1);
}

TEST(Gcs, AlwaysInUnitInterval) {
  for (std::uint64_t s = 0; s < 5; ++s) {
    const auto r = estimate_gcs(gaussian_sample(200, 0, 0.01, s), gaussian_sample(200, 3, 5, s + 50), 2000, 0, s);
    EXPECT_GE(r.gcs, 0.0);
    EXPECT_LE(r.gcs, 1.0);
    EXPECT_GE(r.accepted_fraction, 0.0);
    EXPECT_LE(r.accepted_fraction, 1.0);
  }
}

TEST(Gcs, RoughlySymmetric) {
  const Eigen::MatrixXd a = gaussian_sample(1000, 0.0, 1.0, 12);
  const Eigen::MatrixXd b = gaussian_sample(1000, 3.0, 1.0, 13);
  EXPECT_NEAR(estimate_gcs(a, b, 10000, 0, 4).gcs, estimate_gcs(b, a, 10000, 0, 4).gcs, 0.05);
}

TEST(Gcs, MonotoneInSeparation) {
  const Eigen::MatrixXd a = gaussian_sample(1000, 0.0, 1.0, 14);
  double previous = -1.0;
  for (double gap : {0.0, 1.0, 3.0, 10.0}) {
    const double g = estimate_gcs(a, gaussian_sample(1000, gap, 1.0, 15), 10000, 0, 5).gcs;
    EXPECT_GE(g, previous) << "gap " << gap;
    previous = g;
  }
}

TEST(Gcs, DeterministicAndValidated) {
  const Eigen::MatrixXd a = gaussian_sample(100, 0.0, 1.0, 16);
  const Eigen::MatrixXd b = gaussian_sample(100, 2.0, 1.0, 17);
  EXPECT_EQ(estimate_gcs(a, b, 500, 0, 9).gcs, estimate_gcs(a, b, 500, 0, 9).gcs);
  EXPECT_THROW(estimate_gcs(a, b, 0, 0, 9), ArgumentError);
  EXPECT_THROW(estimate_gcs(a, b, 10, -1, 9), ArgumentError);
}

TEST(GcsReport, JsonLayout) {
  GcsReport r;
  r.gcs = 0.25;
  r.num_samples = 10;
  r.epsilon = 0.5;
  r.feature_dim = 4;
  r.accepted_fraction = 1;
  EXPECT_EQ(r.to_json(), R"({"gcs":0.25,"M":10,"epsilon":0.5,"feature_dim":4,"accepted_fraction":1.0})");
}

TEST(Standardize, UnionMomentsAndPartition) {
  Rng rng(1);
  Eigen::MatrixXd a(30, 3);
  Eigen::MatrixXd b(20, 3);
  for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = rng.uniform(-2, 5);
  for (Eigen::Index i = 0; i < b.size(); ++i) b.data()[i] = rng.uniform(0, 9);
  const FeatureSets f = standardize_and_project(a, b, 3);
  ASSERT_EQ(f.a.rows(), 30);
  ASSERT_EQ(f.b.rows(), 20);
  Eigen::MatrixXd all(50, 3);
  all << f.a, f.b;
  for (Eigen::Index k = 0; k < 3; ++k) {
    EXPECT_NEAR(all.col(k).mean(), 0.0, 1e-6);
    EXPECT_NEAR((all.col(k).array() - all.col(k).mean()).square().mean(), 1.0, 1e-6);
  }
}

TEST(Standardize, DropsZeroVarianceDimensionWithWarning) {
  Rng rng(2);
  Eigen::MatrixXd a(10, 3);
  Eigen::MatrixXd b(10, 3);
  for (Eigen::Index i = 0; i < 10; ++i) {
    a.row(i) << rng.uniform01(), 7.0, rng.uniform01();
    b.row(i) << rng.uniform01(), 7.0, rng.uniform01();
  }
  const FeatureSets f = standardize_and_project(a, b, 4);
  EXPECT_EQ(f.dropped_dims, std::vector<std::size_t>{1});
  EXPECT_EQ(f.a.cols(), 2);
  EXPECT_FALSE(f.warnings.empty());
}

TEST(Standardize, ProjectionKeepsLeadingComponent) {
  // Variance lives almost entirely along (1, 1, 0) after scaling.
  Rng rng(3);
  Eigen::MatrixXd a(200, 3);
  for (Eigen::Index i = 0; i < 200; ++i) {
    const double t = rng.normal();
    a.row(i) << t, t + 0.01 * rng.normal(), rng.normal();
  }
  const FeatureSets f = standardize_and_project(a.topRows(100), a.bottomRows(100), 1);
  Eigen::MatrixXd all(200, 1);
  all << f.a, f.b;
  // Leading eigenvalue of the scaled covariance is ≈ 2.
  EXPECT_NEAR(all.col(0).array().square().mean(), 2.0, 0.1);
}

TEST(DomainClassifier, IdenticalSetsAreIndistinguishable) {
  const auto split = tiny_split(1, 10);
  const auto inputs = make_inputs(split.train);
  GcsConfig config;
  config.domain_epochs = 3;
  const DomainClassifier clf = train_domain_classifier(inputs, inputs, config);
  EXPECT_NEAR(clf.balanced_accuracy(inputs, inputs), 0.5, 0.1);
}

TEST(DomainClassifier, SeparatesDisjointFeatureConstants) {
  const auto split = tiny_split(2, 10);
  std::vector<Graph> shifted = split.train;
  for (auto& g : shifted) {
    for (auto& x : g.features) x += 3;
  }
  const auto a = make_inputs(split.train);
  const auto b = make_inputs(shifted);
  GcsConfig config;
  config.domain_epochs = 5;
  const DomainClassifier clf = train_domain_classifier(a, b, config);
  EXPECT_GT(clf.balanced_accuracy(a, b), 0.95);
  const DomainClassifier again = train_domain_classifier(a, b, config);
  EXPECT_EQ(snapshot(clf.model.parameters()), snapshot(again.model.parameters()));
  EXPECT_THROW(train_domain_classifier({}, b, config), ArgumentError);
}

TEST(AugShift, IdentityAndDropEdge) {
  const auto split = tiny_split(3, 12);
  const auto train = make_inputs(split.train);
  const auto test = make_inputs(split.test);
  GcsConfig config;
  config.domain_epochs = 4;
  config.num_samples = 2000;
  const AugShift identity = measure_aug_shift(nullptr, Augmentation::identity, train, test, config);
  const AugShift dropped = measure_aug_shift(nullptr, Augmentation::dropedge, train, test, config);
  EXPECT_LT(identity.aug_train.gcs, 0.05);
  EXPECT_GT(dropped.aug_train.gcs, identity.aug_train.gcs);
  EXPECT_THROW(measure_aug_shift(nullptr, Augmentation::advca, train, test, config), ArgumentError);
}

TEST(AugShift, AdvcaAugmentationKeepsTopology) {
  const auto split = tiny_split(4);
  const auto train = make_inputs(split.train);
  const ModelBundle bundle = ModelBundle::create(tiny_model(), 3);
  Rng rng(0);
  const auto aug = augment(train, Augmentation::advca, &bundle, 0.2, rng);
  ASSERT_EQ(aug.size(), train.size());
  for (std::size_t i = 0; i < aug.size(); ++i) {
    EXPECT_EQ(aug[i].edges, train[i].edges);
    // Soft masks shrink features and edge weights, never grow them.
    for (std::size_t k = 0; k < aug[i].features.numel(); ++k) {
      EXPECT_LE(aug[i].features.data()[k], train[i].features.data()[k] + 1e-6f);
    }
  }
}
