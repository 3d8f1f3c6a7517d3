#include "advca/gcs.hpp"

#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <numeric>

#include "advca/errors.hpp"

namespace advca {
ADVCA_NS_BEGIN

namespace {

constexpr double kRelativeEpsilon = 1e-4;
constexpr double kMinBandwidth = 1e-9;
constexpr double kMinStd = 1e-12;

GraphInput drop_input_edges(const GraphInput& input, double p, Rng& rng) {
  Graph g;
  g.num_nodes = input.num_nodes;
  g.edges = input.edges;
  g.feature_dim = input.features.dim(1);
  g.features.assign(input.features.data().begin(), input.features.data().end());
  g.label = input.label;
  g.causal_nodes.assign(input.num_nodes, false);
  return make_input(dropedge_augment(g, p, rng));
}

}  // namespace

void GcsConfig::validate() const {
  if (domain_layers == 0 || domain_hidden == 0 || domain_epochs == 0 || domain_batch == 0) {
    throw ArgumentError("domain classifier sizes must be positive");
  }
  if (!(domain_lr > 0)) throw ArgumentError("domain_lr must be > 0");
  if (feature_dim == 0) throw ArgumentError("feature_dim must be >= 1");
  if (num_samples == 0) throw ArgumentError("num_samples must be >= 1");
  if (!std::isfinite(epsilon)) throw ArgumentError("epsilon must be finite");
}

double DomainClassifier::balanced_accuracy(const std::vector<GraphInput>& a, const std::vector<GraphInput>& b) const {
  NoGradGuard no_grad;
  auto hits = [this](const std::vector<GraphInput>& set, std::size_t label) {
    std::size_t c = 0;
    for (const auto& g : set) c += argmax(model.logits(g)) == label;
    return set.empty() ? 0.0 : static_cast<double>(c) / static_cast<double>(set.size());
  };
  return 0.5 * (hits(a, 0) + hits(b, 1));
}

DomainClassifier train_domain_classifier(const std::vector<GraphInput>& set_a, const std::vector<GraphInput>& set_b,
                                         const GcsConfig& config) {
  config.validate();
  if (set_a.empty() || set_b.empty()) throw ArgumentError("domain classifier needs two nonempty sets");
  const std::size_t in_dim = set_a.front().features.dim(1);
  Rng rng(config.seed);
  DomainClassifier out;
  out.model.encoder = GinEncoder(in_dim, config.domain_hidden, config.domain_layers, rng);
  out.model.classifier = Classifier(config.domain_hidden, 2, rng);
  Optimizer opt(out.model.parameters(), static_cast<real>(config.domain_lr), true);

  // Each set is walked in its own shuffled order, reshuffled when exhausted.
  struct Cursor {
    std::vector<std::size_t> order;
    std::size_t pos = 0;
  };
  auto make_cursor = [](std::size_t n) {
    Cursor c;
    c.order.resize(n);
    std::iota(c.order.begin(), c.order.end(), std::size_t{0});
    c.pos = n;
    return c;
  };
  auto next = [&rng](Cursor& c) {
    if (c.pos == c.order.size()) {
      rng.shuffle(c.order);
      c.pos = 0;
    }
    return c.order[c.pos++];
  };
  Cursor ca = make_cursor(set_a.size());
  Cursor cb = make_cursor(set_b.size());
  const std::size_t per_side = std::min(config.domain_batch, std::max(set_a.size(), set_b.size()));
  const std::size_t steps_per_epoch = (std::max(set_a.size(), set_b.size()) + per_side - 1) / per_side;
  const real inv = static_cast<real>(1.0 / static_cast<double>(2 * per_side));
  for (std::size_t epoch = 0; epoch < config.domain_epochs; ++epoch) {
    for (std::size_t step = 0; step < steps_per_epoch; ++step) {
      opt.zero_grad();
      Tensor loss;
      for (std::size_t k = 0; k < per_side; ++k) {
        const Tensor la = softmax_cross_entropy(out.model.logits(set_a[next(ca)]), 0);
        const Tensor lb = softmax_cross_entropy(out.model.logits(set_b[next(cb)]), 1);
        loss = loss.defined() ? loss + la + lb : la + lb;
      }
      loss = loss * inv;
      if (!std::isfinite(loss.item())) throw TrainingError("domain classifier diverged");
      loss.backward();
      opt.step();
    }
  }
  return out;
}

Eigen::MatrixXd embed(const GinEncoder& encoder, const std::vector<GraphInput>& graphs) {
  NoGradGuard no_grad;
  Eigen::MatrixXd out(static_cast<Eigen::Index>(graphs.size()), static_cast<Eigen::Index>(encoder.hidden()));
  for (std::size_t i = 0; i < graphs.size(); ++i) {
    const Tensor e = encoder.encode(graphs[i]).embedding;
    for (std::size_t k = 0; k < e.numel(); ++k) out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = e.data()[k];
  }
  return out;
}

FeatureSets standardize_and_project(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, std::size_t feature_dim) {
  if (a.rows() == 0 || b.rows() == 0) throw ArgumentError("feature sets must be nonempty");
  if (a.cols() != b.cols()) throw DimensionError("feature sets differ in width");
  if (feature_dim == 0) throw ArgumentError("feature_dim must be >= 1");
  Eigen::MatrixXd all(a.rows() + b.rows(), a.cols());
  all << a, b;
  const Eigen::RowVectorXd mean = all.colwise().mean();
  all.rowwise() -= mean;
  const Eigen::RowVectorXd stddev = (all.colwise().squaredNorm() / static_cast<double>(all.rows())).cwiseSqrt();

  FeatureSets out;
  std::vector<Eigen::Index> kept;
  for (Eigen::Index k = 0; k < all.cols(); ++k) {
    if (stddev(k) > kMinStd) {
      kept.push_back(k);
    } else {
      out.dropped_dims.push_back(static_cast<std::size_t>(k));
    }
  }
  if (!out.dropped_dims.empty()) {
    out.warnings.push_back("dropped " + std::to_string(out.dropped_dims.size()) +
                           " zero-variance feature dimension(s) before projection");
  }
  if (kept.empty()) throw DataError("all feature dimensions have zero variance");

  Eigen::MatrixXd scaled(all.rows(), static_cast<Eigen::Index>(kept.size()));
  for (std::size_t j = 0; j < kept.size(); ++j) scaled.col(static_cast<Eigen::Index>(j)) = all.col(kept[j]) / stddev(kept[j]);

  Eigen::MatrixXd projected;
  if (feature_dim >= kept.size()) {
    projected = scaled;
  } else {
    const Eigen::MatrixXd cov = scaled.transpose() * scaled / static_cast<double>(scaled.rows());
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
    // Eigenvalues come in ascending order; take the last feature_dim columns.
    const Eigen::Index d = static_cast<Eigen::Index>(feature_dim);
    Eigen::MatrixXd basis = solver.eigenvectors().rightCols(d).rowwise().reverse();
    for (Eigen::Index j = 0; j < d; ++j) {
      Eigen::Index arg = 0;
      basis.col(j).cwiseAbs().maxCoeff(&arg);
      if (basis(arg, j) < 0) basis.col(j) *= -1.0;
    }
    projected = scaled * basis;
  }
  out.a = projected.topRows(a.rows());
  out.b = projected.bottomRows(b.rows());
  return out;
}

FeatureSets extract_and_standardize(const GinEncoder& encoder, const std::vector<GraphInput>& set_a,
                                    const std::vector<GraphInput>& set_b, std::size_t feature_dim) {
  return standardize_and_project(embed(encoder, set_a), embed(encoder, set_b), feature_dim);
}

KdeModel KdeModel::fit(const Eigen::MatrixXd& points) {
  if (points.rows() < 2) throw ArgumentError("KDE needs at least 2 points");
  KdeModel m;
  m.points_ = points;
  const double n = static_cast<double>(points.rows());
  const double d = static_cast<double>(points.cols());
  const Eigen::RowVectorXd mean = points.colwise().mean();
  // Sample standard deviation per dimension, Scott's factor n^(-1/(d+4)).
  const Eigen::RowVectorXd sd = ((points.rowwise() - mean).colwise().squaredNorm() / (n - 1.0)).cwiseSqrt();
  const double factor = std::pow(n, -1.0 / (d + 4.0));
  m.bandwidth_ = (sd.transpose() * factor).cwiseMax(kMinBandwidth);
  constexpr double kInvSqrt2Pi = 0.39894228040143267794;
  m.norm_ = 1.0 / n;
  for (Eigen::Index k = 0; k < m.bandwidth_.size(); ++k) m.norm_ *= kInvSqrt2Pi / m.bandwidth_(k);
  return m;
}

double KdeModel::density(const Eigen::VectorXd& z) const {
  if (z.size() != points_.cols()) throw DimensionError("KDE query has the wrong dimension");
  const Eigen::VectorXd inv_h = bandwidth_.cwiseInverse();
  double total = 0.0;
  for (Eigen::Index i = 0; i < points_.rows(); ++i) {
    double q = 0.0;
    for (Eigen::Index k = 0; k < points_.cols(); ++k) {
      const double u = (z(k) - points_(i, k)) * inv_h(k);
      q += u * u;
    }
    total += std::exp(-0.5 * q);
  }
  return norm_ * total;
}

Eigen::VectorXd KdeModel::sample(Rng& rng) const {
  const auto i = static_cast<Eigen::Index>(rng.index(static_cast<std::size_t>(points_.rows())));
  Eigen::VectorXd z = points_.row(i).transpose();
  for (Eigen::Index k = 0; k < z.size(); ++k) z(k) += bandwidth_(k) * rng.normal();
  return z;
}

std::string GcsReport::to_json() const {
  nlohmann::ordered_json j;
  j["gcs"] = gcs;
  j["M"] = num_samples;
  j["epsilon"] = epsilon;
  j["feature_dim"] = feature_dim;
  j["accepted_fraction"] = accepted_fraction;
  return j.dump();
}

GcsReport estimate_gcs(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, std::size_t num_samples, double epsilon,
                       std::uint64_t seed) {
  if (num_samples == 0) throw ArgumentError("M must be >= 1");
  if (!std::isfinite(epsilon) || epsilon < 0) throw ArgumentError("epsilon must be > 0 (or 0 for the default)");
  if (a.cols() != b.cols()) throw DimensionError("feature sets differ in width");
  Eigen::MatrixXd all(a.rows() + b.rows(), a.cols());
  all << a, b;
  const KdeModel omega = KdeModel::fit(all);
  const KdeModel pa = KdeModel::fit(a);
  const KdeModel pb = KdeModel::fit(b);

  if (epsilon == 0) {
    double peak = 0.0;
    for (Eigen::Index i = 0; i < a.rows(); ++i) peak = std::max(peak, pa.density(a.row(i).transpose()));
    for (Eigen::Index i = 0; i < b.rows(); ++i) peak = std::max(peak, pb.density(b.row(i).transpose()));
    epsilon = kRelativeEpsilon * peak;
  }

  Rng rng(seed);
  double total = 0.0;
  std::size_t accepted = 0;
  for (std::size_t t = 0; t < num_samples; ++t) {
    const Eigen::VectorXd z = omega.sample(rng);
    const double da = pa.density(z);
    const double db = pb.density(z);
    if (da < epsilon || db < epsilon) {
      const double w = omega.density(z);
      if (w > 0) total += std::abs(da - db) / w;
      ++accepted;
    }
  }
  GcsReport r;
  r.gcs = std::clamp(total / (2.0 * static_cast<double>(num_samples)), 0.0, 1.0);
  r.num_samples = num_samples;
  r.epsilon = epsilon;
  r.feature_dim = static_cast<std::size_t>(a.cols());
  r.accepted_fraction = static_cast<double>(accepted) / static_cast<double>(num_samples);
  return r;
}

GcsReport graph_covariate_shift(const std::vector<GraphInput>& set_a, const std::vector<GraphInput>& set_b,
                                const GcsConfig& config, std::vector<std::string>* warnings) {
  const DomainClassifier clf = train_domain_classifier(set_a, set_b, config);
  FeatureSets f = extract_and_standardize(clf.model.encoder, set_a, set_b, config.feature_dim);
  if (warnings != nullptr) warnings->insert(warnings->end(), f.warnings.begin(), f.warnings.end());
  return estimate_gcs(f.a, f.b, config.num_samples, config.epsilon, config.seed ^ 0x6763735fULL);
}

std::string to_string(Augmentation augmentation) {
  switch (augmentation) {
    case Augmentation::identity: return "identity";
    case Augmentation::dropedge: return "dropedge";
    case Augmentation::advca: return "advca";
  }
  return "unknown";
}

Augmentation parse_augmentation(const std::string& name) {
  for (Augmentation a : {Augmentation::identity, Augmentation::dropedge, Augmentation::advca}) {
    if (to_string(a) == name) return a;
  }
  throw ArgumentError("unknown augmentation '" + name + "'");
}

std::vector<GraphInput> augment(const std::vector<GraphInput>& graphs, Augmentation augmentation,
                                const ModelBundle* bundle, double dropedge_p, Rng& rng) {
  std::vector<GraphInput> out;
  out.reserve(graphs.size());
  switch (augmentation) {
    case Augmentation::identity:
      return graphs;
    case Augmentation::dropedge:
      for (const auto& g : graphs) out.push_back(drop_input_edges(g, dropedge_p, rng));
      return out;
    case Augmentation::advca: {
      if (bundle == nullptr) throw ArgumentError("advca augmentation needs a trained bundle");
      NoGradGuard no_grad;
      for (const auto& g : graphs) {
        const MaskPair mixed = combine_masks(g, bundle->augmenter.forward(g), bundle->generator.forward(g));
        out.push_back(apply_mask(g, mixed));
      }
      return out;
    }
  }
  return out;
}

AugShift measure_aug_shift(const ModelBundle* bundle, Augmentation augmentation, const std::vector<GraphInput>& train,
                           const std::vector<GraphInput>& test, const GcsConfig& config, double dropedge_p) {
  Rng rng(config.seed ^ 0x617567ULL);
  const std::vector<GraphInput> augmented = augment(train, augmentation, bundle, dropedge_p, rng);
  AugShift out;
  out.aug_train = graph_covariate_shift(augmented, train, config);
  out.aug_test = graph_covariate_shift(augmented, test, config);
  return out;
}

ADVCA_NS_END
}  // namespace advca
