#include "advca/engine.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "advca/errors.hpp"

namespace advca {
ADVCA_NS_BEGIN

namespace {

constexpr double kRdcaFraction = 0.2;

void require_nonempty(const Batch& batch) {
  if (batch.empty()) throw ArgumentError("batch must not be empty");
}

ParamList concat(ParamList a, const ParamList& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

bool finite(double v) { return std::isfinite(v); }

// Bitwise comparison of two snapshots; throws on the first changed value.
void expect_unchanged(const ParamList& params, const std::vector<std::vector<real>>& before, const char* step) {
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto now = params[i].tensor.data();
    if (!std::equal(now.begin(), now.end(), before[i].begin(), before[i].end())) {
      throw ContractError(std::string(step) + " step modified parameter " + params[i].name);
    }
  }
}

GraphInput drop_edges(const GraphInput& input, double p, Rng& rng) {
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

std::string to_string(Method method) {
  switch (method) {
    case Method::advca: return "advca";
    case Method::erm: return "erm";
    case Method::dropedge: return "dropedge";
    case Method::rdca: return "rdca";
    case Method::no_adv: return "no_adv";
    case Method::no_cau: return "no_cau";
  }
  return "unknown";
}

Method parse_method(const std::string& name) {
  for (Method m : {Method::advca, Method::erm, Method::dropedge, Method::rdca, Method::no_adv, Method::no_cau}) {
    if (to_string(m) == name) return m;
  }
  throw ArgumentError("unknown method '" + name + "'");
}

bool uses_causal_generator(Method method) {
  return method == Method::advca || method == Method::rdca || method == Method::no_adv;
}

bool uses_adversarial_augmenter(Method method) { return method == Method::advca || method == Method::no_cau; }

void TrainConfig::validate() const {
  if (!(adv_lr > 0)) throw ArgumentError("adv_lr must be > 0");
  if (!(lr >= 0)) throw ArgumentError("lr must be >= 0");
  if (!(gamma >= 0)) throw ArgumentError("gamma must be >= 0");
  if (!(causal_ratio > 0 && causal_ratio < 1)) throw ArgumentError("causal_ratio must lie in (0, 1)");
  if (!(adv_ratio > 0 && adv_ratio <= 1)) throw ArgumentError("adv_ratio must lie in (0, 1]");
  if (!(threshold > 0 && threshold < 1)) throw ArgumentError("threshold must lie in (0, 1)");
  if (epochs == 0) throw ArgumentError("epochs must be >= 1");
  if (batch_size == 0) throw ArgumentError("batch_size must be >= 1");
  if (!(dropedge_p >= 0 && dropedge_p < 1)) throw ArgumentError("dropedge_p must lie in [0, 1)");
}

ModelBundle ModelBundle::create(const ModelConfig& config, std::uint64_t seed) {
  if (config.feature_dim == 0 || config.num_classes < 2 || config.backbone_layers == 0 ||
      config.backbone_hidden == 0 || config.mask_layers == 0 || config.mask_hidden == 0) {
    throw ArgumentError("model dimensions must be positive (and at least 2 classes)");
  }
  Rng rng(seed);
  ModelBundle b;
  b.config = config;
  b.backbone.encoder = GinEncoder(config.feature_dim, config.backbone_hidden, config.backbone_layers, rng);
  b.backbone.classifier = Classifier(config.backbone_hidden, config.num_classes, rng);
  b.augmenter = MaskNet(config.feature_dim, config.mask_hidden, config.mask_layers, rng);
  b.generator = MaskNet(config.feature_dim, config.mask_hidden, config.mask_layers, rng);
  return b;
}

ModelBundle ModelBundle::clone() const {
  // Same architecture, then copy values so no storage is shared.
  ModelBundle out = create(config, 0);
  restore(out.all_params(), snapshot(all_params()));
  return out;
}

ParamList ModelBundle::all_params() const {
  return concat(concat(backbone_params(), augmenter_params()), generator_params());
}

Tensor transport_cost(const GinEncoder& encoder, const GraphInput& graph, const MaskPair& augmentation) {
  const Tensor augmented = encoder.encode(graph, &augmentation).embedding;
  const Tensor original = encoder.encode(graph).embedding;
  return squared_l2_distance(augmented, original);
}

MaskPair combine_masks(const GraphInput& graph, const MaskPair& adv, const MaskPair& cau) {
  if (adv.node.shape() != cau.node.shape()) {
    throw DimensionError("node masks differ: " + to_string(adv.node.shape()) + " vs " + to_string(cau.node.shape()));
  }
  if (adv.edge_values.defined() != cau.edge_values.defined() ||
      (cau.edge_values.defined() && adv.edge_values.shape() != cau.edge_values.shape())) {
    throw DimensionError("edge masks differ in shape");
  }
  const Tensor node = cau.node + adv.node * (1 - cau.node);
  Tensor edge_values;
  if (cau.edge_values.defined()) edge_values = cau.edge_values + adv.edge_values * (1 - cau.edge_values);
  return make_mask_pair(graph, node, edge_values);
}

Tensor regularizer(const Tensor& mask_values, std::size_t k, real lambda, real threshold) {
  if (k == 0) throw ArgumentError("regularizer needs k >= 1 constrained elements");
  if (mask_values.numel() != k) {
    throw DimensionError("regularizer got " + std::to_string(mask_values.numel()) + " values for k = " +
                         std::to_string(k));
  }
  const double inv_k = 1.0 / static_cast<double>(k);
  std::size_t above = 0;
  for (real v : mask_values.data()) {
    const bool over = v > threshold;
    detail::record_branch(over);
    if (over) ++above;
  }
  const real count_term = static_cast<real>(std::abs(static_cast<double>(above) * inv_k - lambda));
  const Tensor mean_term = abs(sum(mask_values) * static_cast<real>(inv_k) - lambda);
  return mean_term + count_term;
}

Tensor mask_regularizer(const GraphInput& graph, const MaskPair& mask, real lambda, real threshold) {
  Tensor r = regularizer(mask.node, graph.num_nodes, lambda, threshold);
  if (!graph.edges.empty()) r = r + regularizer(mask.edge_values, graph.edges.size(), lambda, threshold);
  return r;
}

AdversarialObjective adversarial_objective(const Batch& batch, const ModelBundle& bundle, const TrainConfig& config) {
  require_nonempty(batch);
  const real inv = static_cast<real>(1.0 / static_cast<double>(batch.size()));
  Tensor loss;
  Tensor reg;
  for (const GraphInput* g : batch) {
    const MaskPair adv = bundle.augmenter.forward(*g);
    // One encoding of T_θ1(g) feeds both the classifier and the transport cost.
    const Tensor augmented = bundle.backbone.encoder.encode(*g, &adv).embedding;
    const Tensor original = bundle.backbone.encoder.encode(*g).embedding;
    Tensor term = softmax_cross_entropy(bundle.backbone.classifier.logits(augmented), g->label);
    if (config.gamma != 0) term = term - squared_l2_distance(augmented, original) * config.gamma;
    const Tensor r = mask_regularizer(*g, adv, config.adv_ratio, config.threshold);
    loss = loss.defined() ? loss + term : term;
    reg = reg.defined() ? reg + r : r;
  }
  return {loss * inv, reg * inv};
}

Tensor adversarial_loss(const Batch& batch, const ModelBundle& bundle, real gamma) {
  TrainConfig config;
  config.gamma = gamma;
  return adversarial_objective(batch, bundle, config).adv_loss;
}

CausalObjective causal_objective(const Batch& batch, const ModelBundle& bundle, const TrainConfig& config,
                                 const AdvMaskSource& adv_source) {
  require_nonempty(batch);
  const real inv = static_cast<real>(1.0 / static_cast<double>(batch.size()));
  CausalObjective out;
  Tensor loss;
  Tensor reg;
  for (const GraphInput* g : batch) {
    MaskPair adv;
    if (adv_source) {
      adv = detach(adv_source(*g));
    } else {
      NoGradGuard no_grad;
      adv = detach(bundle.augmenter.forward(*g));
    }
    const MaskPair cau = bundle.generator.forward(*g);
    const Tensor causal_logits = bundle.backbone.logits(*g, &cau);
    const MaskPair mixed = combine_masks(*g, adv, cau);
    const Tensor term = softmax_cross_entropy(causal_logits, g->label) +
                        softmax_cross_entropy(bundle.backbone.logits(*g, &mixed), g->label);
    const Tensor r = mask_regularizer(*g, cau, config.causal_ratio, config.threshold);
    loss = loss.defined() ? loss + term : term;
    reg = reg.defined() ? reg + r : r;
    if (argmax(causal_logits) == g->label) ++out.correct;
  }
  out.cau_loss = loss * inv;
  out.reg = reg * inv;
  return out;
}

Tensor causal_loss(const Batch& batch, const ModelBundle& bundle) {
  return causal_objective(batch, bundle, TrainConfig{}).cau_loss;
}

Tensor erm_loss(const Batch& batch, const Backbone& backbone) {
  require_nonempty(batch);
  Tensor loss;
  for (const GraphInput* g : batch) {
    const Tensor term = softmax_cross_entropy(backbone.logits(*g), g->label);
    loss = loss.defined() ? loss + term : term;
  }
  return loss * static_cast<real>(1.0 / static_cast<double>(batch.size()));
}

MaskPair rdca_random_masks(const GraphInput& graph, Rng& rng) {
  auto zeroed = [&rng](std::size_t count) {
    std::vector<real> values(count, real(1));
    std::vector<std::size_t> order(count);
    std::iota(order.begin(), order.end(), std::size_t{0});
    rng.shuffle(order);
    const auto k = static_cast<std::size_t>(std::floor(kRdcaFraction * static_cast<double>(count) + 1e-9));
    for (std::size_t i = 0; i < k; ++i) values[order[i]] = 0;
    return values;
  };
  const std::size_t n = graph.num_nodes;
  const std::size_t m = graph.edges.size();
  Tensor node = Tensor::from({n, 1}, zeroed(n));
  Tensor edges;
  if (m > 0) edges = Tensor::from({m, 1}, zeroed(m));
  return make_mask_pair(graph, node, edges);
}

Trainer::Trainer(ModelBundle& bundle, const TrainConfig& config, Method method)
    : bundle_(bundle),
      config_(config),
      method_(method),
      augmenter_opt_(bundle.augmenter_params(), config.adv_lr, config.adam),
      main_opt_(uses_causal_generator(method) ? concat(bundle.backbone_params(), bundle.generator_params())
                                              : bundle.backbone_params(),
                config.lr, config.adam),
      rng_(config.seed ^ 0x5eedf00dULL) {
  config_.validate();
}

StepStats Trainer::ascent_step(const Batch& batch) {
  if (!uses_adversarial_augmenter(method_)) throw ArgumentError(to_string(method_) + " has no adversarial step");
  const ParamList frozen = concat(bundle_.backbone_params(), bundle_.generator_params());
  std::vector<std::vector<real>> before;
  if (config_.check_partition) before = snapshot(frozen);

  set_trainable(frozen, false);
  set_trainable(bundle_.augmenter_params(), true);
  augmenter_opt_.zero_grad();
  const AdversarialObjective obj = adversarial_objective(batch, bundle_, config_);
  StepStats stats;
  stats.adv_loss = obj.adv_loss.item();
  stats.reg1 = obj.reg.item();
  if (!finite(stats.adv_loss) || !finite(stats.reg1)) {
    set_trainable(frozen, true);
    throw TrainingError("non-finite adversarial objective");
  }
  // Ascent on L_adv − L_reg1 by descending its negation.
  (obj.reg - obj.adv_loss).backward();
  augmenter_opt_.step();
  set_trainable(frozen, true);

  if (config_.check_partition) {
    expect_unchanged(frozen, before, "adversarial");
    ++partition_checks_;
  }
  return stats;
}

StepStats Trainer::descent_step(const Batch& batch, real loss_scale) {
  const ParamList augmenter = bundle_.augmenter_params();
  std::vector<std::vector<real>> before;
  if (config_.check_partition) before = snapshot(augmenter);
  set_trainable(augmenter, false);
  set_trainable(main_opt_.params(), true);
  main_opt_.zero_grad();

  StepStats stats;
  Tensor objective;
  switch (method_) {
    case Method::advca:
    case Method::rdca:
    case Method::no_adv: {
      AdvMaskSource source;
      if (method_ == Method::rdca) {
        source = [this](const GraphInput& g) { return rdca_random_masks(g, rng_); };
      } else if (method_ == Method::no_adv) {
        source = [](const GraphInput& g) { return constant_mask(g, 1); };
      }
      const CausalObjective obj = causal_objective(batch, bundle_, config_, source);
      stats.cau_loss = obj.cau_loss.item();
      stats.reg2 = obj.reg.item();
      stats.correct = obj.correct;
      objective = obj.cau_loss + obj.reg;
      break;
    }
    case Method::erm:
    case Method::dropedge: {
      std::vector<GraphInput> dropped;
      Batch view = batch;
      if (method_ == Method::dropedge) {
        dropped.reserve(batch.size());
        for (const GraphInput* g : batch) dropped.push_back(drop_edges(*g, config_.dropedge_p, rng_));
        for (std::size_t i = 0; i < batch.size(); ++i) view[i] = &dropped[i];
      }
      require_nonempty(view);
      Tensor loss;
      for (const GraphInput* g : view) {
        const Tensor logits = bundle_.backbone.logits(*g);
        if (argmax(logits) == g->label) ++stats.correct;
        const Tensor term = softmax_cross_entropy(logits, g->label);
        loss = loss.defined() ? loss + term : term;
      }
      objective = loss * static_cast<real>(1.0 / static_cast<double>(view.size()));
      break;
    }
    case Method::no_cau: {
      require_nonempty(batch);
      Tensor loss;
      for (const GraphInput* g : batch) {
        MaskPair adv;
        {
          NoGradGuard no_grad;
          adv = detach(bundle_.augmenter.forward(*g));
        }
        const Tensor logits = bundle_.backbone.logits(*g);
        if (argmax(logits) == g->label) ++stats.correct;
        const Tensor term = softmax_cross_entropy(logits, g->label) +
                            softmax_cross_entropy(bundle_.backbone.logits(*g, &adv), g->label);
        loss = loss.defined() ? loss + term : term;
      }
      objective = loss * static_cast<real>(1.0 / static_cast<double>(batch.size()));
      stats.cau_loss = objective.item();
      break;
    }
  }

  stats.loss = objective.item();
  if (!finite(stats.loss)) {
    set_trainable(augmenter, true);
    throw TrainingError("non-finite training loss");
  }
  if (loss_scale != 1) objective = objective * loss_scale;
  objective.backward();
  main_opt_.step();
  set_trainable(augmenter, true);

  if (config_.check_partition) {
    expect_unchanged(augmenter, before, "causal");
    ++partition_checks_;
  }
  return stats;
}

StepStats Trainer::train_batch(const Batch& batch) {
  if (!uses_adversarial_augmenter(method_)) return descent_step(batch);
  const StepStats ascent = ascent_step(batch);
  StepStats stats = descent_step(batch);
  stats.adv_loss = ascent.adv_loss;
  stats.reg1 = ascent.reg1;
  return stats;
}

std::size_t predict(const ModelBundle& bundle, const GraphInput& graph) {
  NoGradGuard no_grad;
  const MaskPair masks = bundle.generator.forward(graph);
  return argmax(bundle.backbone.logits(graph, &masks));
}

std::size_t predict(const ModelBundle& bundle, const GraphInput& graph, Method method) {
  if (uses_causal_generator(method)) return predict(bundle, graph);
  NoGradGuard no_grad;
  return argmax(bundle.backbone.logits(graph));
}

EvalStats evaluate(const ModelBundle& bundle, Method method, const std::vector<GraphInput>& inputs,
                   const std::vector<Graph>& graphs) {
  if (inputs.size() != graphs.size()) throw DimensionError("evaluate: inputs and graphs differ in length");
  EvalStats out;
  if (inputs.empty()) return out;
  NoGradGuard no_grad;
  const bool causal = uses_causal_generator(method);
  double loss = 0.0;
  std::size_t correct = 0;
  double mask_causal = 0.0;
  double mask_env = 0.0;
  std::size_t n_causal = 0;
  std::size_t n_env = 0;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const GraphInput& g = inputs[i];
    Tensor logits;
    if (causal) {
      const MaskPair masks = bundle.generator.forward(g);
      logits = bundle.backbone.logits(g, &masks);
      const auto node = masks.node.data();
      for (std::size_t v = 0; v < g.num_nodes; ++v) {
        if (graphs[i].causal_nodes[v]) {
          mask_causal += node[v];
          ++n_causal;
        } else {
          mask_env += node[v];
          ++n_env;
        }
      }
    } else {
      logits = bundle.backbone.logits(g);
    }
    loss += softmax_cross_entropy(logits, g.label).item();
    if (argmax(logits) == g.label) ++correct;
  }
  out.loss = loss / static_cast<double>(inputs.size());
  out.accuracy = static_cast<double>(correct) / static_cast<double>(inputs.size());
  if (n_causal > 0) out.mask_causal = mask_causal / static_cast<double>(n_causal);
  if (n_env > 0) out.mask_env = mask_env / static_cast<double>(n_env);
  return out;
}

TrainResult train(ModelBundle& bundle, const DatasetSplit& split, const TrainConfig& config, Method method) {
  config.validate();
  if (split.train.empty() || split.val.empty()) throw ArgumentError("train and val splits must not be empty");
  const std::vector<GraphInput> train_inputs = make_inputs(split.train);
  const std::vector<GraphInput> val_inputs = make_inputs(split.val);
  const std::vector<GraphInput> test_inputs = make_inputs(split.test);

  Trainer trainer(bundle, config, method);
  Rng order_rng(config.seed);
  std::vector<std::size_t> order(train_inputs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  TrainResult result;
  std::vector<std::vector<real>> best;
  const ParamList params = bundle.all_params();
  bool have_best = false;

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    order_rng.shuffle(order);
    double loss = 0.0, adv = 0.0, cau = 0.0, reg1 = 0.0, reg2 = 0.0;
    std::size_t correct = 0;
    std::size_t batch_index = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size, ++batch_index) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      Batch batch;
      for (std::size_t i = start; i < end; ++i) batch.push_back(&train_inputs[order[i]]);
      StepStats s;
      try {
        s = trainer.train_batch(batch);
      } catch (const TrainingError& e) {
        throw TrainingError(std::string(e.what()) + " at epoch " + std::to_string(epoch) + ", batch " +
                            std::to_string(batch_index));
      }
      const double w = static_cast<double>(batch.size());
      loss += s.loss * w;
      adv += s.adv_loss * w;
      cau += s.cau_loss * w;
      reg1 += s.reg1 * w;
      reg2 += s.reg2 * w;
      correct += s.correct;
    }
    const double n = static_cast<double>(train_inputs.size());
    EpochMetrics row;
    row.epoch = epoch;
    row.split = "train";
    row.loss = loss / n;
    row.accuracy = static_cast<double>(correct) / n;
    row.adv_loss = adv / n;
    row.cau_loss = cau / n;
    row.reg1 = reg1 / n;
    row.reg2 = reg2 / n;
    result.history.push_back(row);

    const EvalStats val = evaluate(bundle, method, val_inputs, split.val);
    const EvalStats test = evaluate(bundle, method, test_inputs, split.test);
    for (const auto& [name, stats] : {std::pair{"val", val}, std::pair{"test", test}}) {
      EpochMetrics r;
      r.epoch = epoch;
      r.split = name;
      r.loss = stats.loss;
      r.accuracy = stats.accuracy;
      r.mask_causal = stats.mask_causal;
      r.mask_env = stats.mask_env;
      result.history.push_back(r);
    }
    if (!have_best || val.accuracy > result.best_val_accuracy) {
      have_best = true;
      result.best_epoch = epoch;
      result.best_val_accuracy = val.accuracy;
      result.test_accuracy = test.accuracy;
      best = snapshot(params);
    }
  }
  restore(params, best);
  result.partition_checks = trainer.partition_checks();
  return result;
}

TrainResult erm_train(ModelBundle& bundle, const DatasetSplit& split, const TrainConfig& config) {
  return train(bundle, split, config, Method::erm);
}

ADVCA_NS_END
}  // namespace advca
