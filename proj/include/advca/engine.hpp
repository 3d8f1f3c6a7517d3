#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "advca/gnn.hpp"
#include "advca/graph.hpp"
#include "advca/optim.hpp"
#include "advca/rng.hpp"

namespace advca {
ADVCA_NS_BEGIN

// advca: full method. erm / dropedge: baselines. rdca: random 20%-zeroed
// masks in place of the adversarial augmenter. no_adv: causal learning with
// M_adv ≡ 1. no_cau: adversarial augmentation without the causal generator.
enum class Method { advca, erm, dropedge, rdca, no_adv, no_cau };

std::string to_string(Method method);
Method parse_method(const std::string& name);
// Whether inference classifies the causally masked graph f(T_θ2(g)).
bool uses_causal_generator(Method method);
bool uses_adversarial_augmenter(Method method);

struct ModelConfig {
  std::size_t feature_dim = 4;
  std::size_t num_classes = kNumMotifClasses;
  std::size_t backbone_layers = 3;
  std::size_t backbone_hidden = 64;
  std::size_t mask_layers = 2;
  std::size_t mask_hidden = 64;
};

struct TrainConfig {
  real adv_lr = 1e-3f;        // α, adversarial augmenter
  real lr = 5e-3f;            // β, backbone and causal generator
  real gamma = 0.2f;          // transport penalty
  real causal_ratio = 0.5f;   // λ_c
  real adv_ratio = 1.0f;      // λ_a
  real threshold = 0.5f;      // τ for the thresholded-count term
  std::size_t epochs = 100;
  std::size_t batch_size = 64;
  std::uint64_t seed = 0;
  bool adam = false;
  real dropedge_p = 0.2f;
  // Assert every batch that the ascent step leaves θ and θ2 untouched and the
  // descent step leaves θ1 untouched (bitwise).
  bool check_partition = false;

  // Throws ArgumentError when a field is out of range.
  void validate() const;
};

// Backbone f = Φ∘h (θ), adversarial augmenter T_θ1 and causal generator T_θ2.
// The three parameter stores are disjoint.
struct ModelBundle {
  ModelConfig config;
  Backbone backbone;
  MaskNet augmenter;
  MaskNet generator;

  static ModelBundle create(const ModelConfig& config, std::uint64_t seed);
  ModelBundle clone() const;

  ParamList backbone_params() const { return backbone.parameters(); }
  ParamList augmenter_params() const { return augmenter.parameters("augmenter"); }
  ParamList generator_params() const { return generator.parameters("generator"); }
  ParamList all_params() const;
};

using Batch = std::vector<const GraphInput*>;

// ‖h(g_aug) − h(g)‖² on graph embeddings; g_aug is g under `augmentation`.
Tensor transport_cost(const GinEncoder& encoder, const GraphInput& graph, const MaskPair& augmentation);

// m̃ = m_cau + m_adv ⊙ (1 − m_cau) on nodes and on the edge support.
MaskPair combine_masks(const GraphInput& graph, const MaskPair& adv, const MaskPair& cau);

// r(M, k, λ) = |ΣM/k − λ| + |#{M > τ}/k − λ|. The count term is piecewise
// constant and contributes no gradient.
Tensor regularizer(const Tensor& mask_values, std::size_t k, real lambda, real threshold);

// r over a mask pair: node term with k = n, edge term with k = m (each
// undirected edge once; skipped for edgeless graphs).
Tensor mask_regularizer(const GraphInput& graph, const MaskPair& mask, real lambda, real threshold);

struct AdversarialObjective {
  Tensor adv_loss;  // L_adv
  Tensor reg;       // L_reg1
};

// Batch means of ℓ(f(T_θ1(g)), y) − γ·c(T_θ1(g), g) and of the augmenter
// regularizer with target λ_a.
AdversarialObjective adversarial_objective(const Batch& batch, const ModelBundle& bundle, const TrainConfig& config);
Tensor adversarial_loss(const Batch& batch, const ModelBundle& bundle, real gamma);

// Supplies M_adv for the causal objective. Returned masks are treated as
// constants.
using AdvMaskSource = std::function<MaskPair(const GraphInput&)>;

struct CausalObjective {
  Tensor cau_loss;  // L_cau
  Tensor reg;       // L_reg2
  std::size_t correct = 0;  // argmax f(T_θ2(g)) == y over the batch
};

// Batch means of ℓ(f(T_θ2(g)), y) + ℓ(f(g̃), y) with g̃ built from
// combine_masks(M_adv, M_cau), and of the generator regularizer with target λ_c.
// Without `adv_source` M_adv comes from the (detached) augmenter.
CausalObjective causal_objective(const Batch& batch, const ModelBundle& bundle, const TrainConfig& config,
                                 const AdvMaskSource& adv_source = {});
Tensor causal_loss(const Batch& batch, const ModelBundle& bundle);

// Mean cross-entropy of the plain backbone.
Tensor erm_loss(const Batch& batch, const Backbone& backbone);

// All-one masks with ⌊0.2·n⌋ node entries and ⌊0.2·m⌋ undirected edge
// entries set to zero, chosen uniformly.
MaskPair rdca_random_masks(const GraphInput& graph, Rng& rng);

struct StepStats {
  double loss = 0.0;  // objective minimised by the descent step
  double adv_loss = std::numeric_limits<double>::quiet_NaN();
  double cau_loss = std::numeric_limits<double>::quiet_NaN();
  double reg1 = std::numeric_limits<double>::quiet_NaN();
  double reg2 = std::numeric_limits<double>::quiet_NaN();
  std::size_t correct = 0;
};

// Per-batch updates for one method. The ascent step changes only θ1; the
// descent step changes only θ and θ2.
class Trainer {
 public:
  Trainer(ModelBundle& bundle, const TrainConfig& config, Method method);

  // θ1 ← θ1 + α∇θ1(L_adv − L_reg1). Returns L_adv and L_reg1 before the step.
  StepStats ascent_step(const Batch& batch);
  // θ, θ2 ← · − β∇(L_cau + L_reg2) for the causal methods; θ ← θ − β∇(loss)
  // for the others. `loss_scale` multiplies the objective (used by the ERM
  // reduction check).
  StepStats descent_step(const Batch& batch, real loss_scale = 1);
  // One full batch of the method (ascent then fresh-forward descent where
  // applicable).
  StepStats train_batch(const Batch& batch);

  std::size_t partition_checks() const { return partition_checks_; }
  Rng& rng() { return rng_; }

 private:
  ModelBundle& bundle_;
  TrainConfig config_;
  Method method_;
  Optimizer augmenter_opt_;
  Optimizer main_opt_;
  Rng rng_;
  std::size_t partition_checks_ = 0;
};

// Inference: argmax f(T_θ2(g)), ties to the lowest class index.
std::size_t predict(const ModelBundle& bundle, const GraphInput& graph);
std::size_t predict(const ModelBundle& bundle, const GraphInput& graph, Method method);

struct EvalStats {
  double loss = 0.0;
  double accuracy = 0.0;
  // Mean causal-generator node mask over ground-truth motif / base nodes.
  double mask_causal = std::numeric_limits<double>::quiet_NaN();
  double mask_env = std::numeric_limits<double>::quiet_NaN();
};

EvalStats evaluate(const ModelBundle& bundle, Method method, const std::vector<GraphInput>& inputs,
                   const std::vector<Graph>& graphs);

struct EpochMetrics {
  std::size_t epoch = 0;
  std::string split;
  double loss = 0.0;
  double accuracy = 0.0;
  double adv_loss = std::numeric_limits<double>::quiet_NaN();
  double cau_loss = std::numeric_limits<double>::quiet_NaN();
  double reg1 = std::numeric_limits<double>::quiet_NaN();
  double reg2 = std::numeric_limits<double>::quiet_NaN();
  double mask_causal = std::numeric_limits<double>::quiet_NaN();
  double mask_env = std::numeric_limits<double>::quiet_NaN();
};

struct TrainResult {
  std::vector<EpochMetrics> history;  // train, val, test rows per epoch
  std::size_t best_epoch = 0;
  double best_val_accuracy = 0.0;
  double test_accuracy = 0.0;  // at the best-validation epoch
  std::size_t partition_checks = 0;
};

// Runs `config.epochs` epochs and leaves `bundle` at the best-validation
// epoch (earliest on ties). Throws TrainingError on a non-finite loss.
TrainResult train(ModelBundle& bundle, const DatasetSplit& split, const TrainConfig& config,
                  Method method = Method::advca);
TrainResult erm_train(ModelBundle& bundle, const DatasetSplit& split, const TrainConfig& config);

ADVCA_NS_END
}  // namespace advca
