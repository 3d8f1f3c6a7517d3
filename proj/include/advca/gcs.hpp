#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "advca/engine.hpp"

namespace advca {
ADVCA_NS_BEGIN

struct GcsConfig {
  // Domain classifier (a fresh GIN, independent of the task backbone).
  std::size_t domain_layers = 2;
  std::size_t domain_hidden = 32;
  std::size_t domain_epochs = 10;
  std::size_t domain_batch = 32;  // graphs drawn from each set per step
  double domain_lr = 5e-3;
  // Estimation.
  std::size_t feature_dim = 4;     // d_f after principal-component projection
  std::size_t num_samples = 10000; // M
  double epsilon = 0.0;            // <= 0: 1e-4 × the largest self-density
  std::uint64_t seed = 0;

  void validate() const;
};

struct DomainClassifier {
  Backbone model;  // encoder h and binary head Φ
  // Fraction of `a` classified 0 and `b` classified 1, averaged over the two sets.
  double balanced_accuracy(const std::vector<GraphInput>& a, const std::vector<GraphInput>& b) const;
};

// Binary GIN classifier for set_a → 0, set_b → 1. Every step draws the same
// number of graphs from each set.
DomainClassifier train_domain_classifier(const std::vector<GraphInput>& set_a, const std::vector<GraphInput>& set_b,
                                         const GcsConfig& config);

struct FeatureSets {
  Eigen::MatrixXd a;  // |set_a| × d_f
  Eigen::MatrixXd b;  // |set_b| × d_f
  std::vector<std::size_t> dropped_dims;  // zero-variance embedding dimensions
  std::vector<std::string> warnings;
};

// Union statistics for the scaling, then projection onto the leading
// principal components of the scaled union.
FeatureSets standardize_and_project(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, std::size_t feature_dim);
FeatureSets extract_and_standardize(const GinEncoder& encoder, const std::vector<GraphInput>& set_a,
                                    const std::vector<GraphInput>& set_b, std::size_t feature_dim);
Eigen::MatrixXd embed(const GinEncoder& encoder, const std::vector<GraphInput>& graphs);

// Gaussian product-kernel density with Scott's-rule bandwidths.
class KdeModel {
 public:
  // Rows are points. Needs at least 2 points.
  static KdeModel fit(const Eigen::MatrixXd& points);

  double density(const Eigen::VectorXd& z) const;
  // Uniform component choice plus bandwidth-scaled Gaussian noise.
  Eigen::VectorXd sample(Rng& rng) const;
  const Eigen::MatrixXd& points() const { return points_; }
  const Eigen::VectorXd& bandwidth() const { return bandwidth_; }

 private:
  Eigen::MatrixXd points_;
  Eigen::VectorXd bandwidth_;
  double norm_ = 0.0;
};

struct GcsReport {
  double gcs = 0.0;
  std::size_t num_samples = 0;
  double epsilon = 0.0;
  std::size_t feature_dim = 0;
  double accepted_fraction = 0.0;

  std::string to_json() const;
};

// Importance-sampled estimate of ½∫_S |P_a − P_b| with S approximated by
// {P̂_a < ε or P̂_b < ε}. Clamped to [0, 1].
GcsReport estimate_gcs(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, std::size_t num_samples, double epsilon,
                       std::uint64_t seed);

// Classifier, features and estimate in one go.
GcsReport graph_covariate_shift(const std::vector<GraphInput>& set_a, const std::vector<GraphInput>& set_b,
                                const GcsConfig& config, std::vector<std::string>* warnings = nullptr);

enum class Augmentation { identity, dropedge, advca };
std::string to_string(Augmentation augmentation);
Augmentation parse_augmentation(const std::string& name);

// One augmented copy per graph. advca uses g̃ built from the bundle's
// augmenter and generator masks; dropedge uses `dropedge_p`.
std::vector<GraphInput> augment(const std::vector<GraphInput>& graphs, Augmentation augmentation,
                                const ModelBundle* bundle, double dropedge_p, Rng& rng);

struct AugShift {
  GcsReport aug_train;  // GCS(P_aug, P_tr)
  GcsReport aug_test;   // GCS(P_aug, P_te)
};

AugShift measure_aug_shift(const ModelBundle* bundle, Augmentation augmentation, const std::vector<GraphInput>& train,
                           const std::vector<GraphInput>& test, const GcsConfig& config, double dropedge_p = 0.2);

ADVCA_NS_END
}  // namespace advca
