#pragma once

#include <vector>

#include "advca/engine.hpp"

namespace advca::testing {

inline Graph path3_graph(std::size_t feature_dim = 2) {
  Graph g;
  g.num_nodes = 3;
  g.edges = {{0, 1}, {1, 2}};
  g.feature_dim = feature_dim;
  g.features = std::vector<real>(3 * feature_dim);
  for (std::size_t i = 0; i < g.features.size(); ++i) g.features[i] = real(0.5) + real(0.25) * real(i % 3);
  g.causal_nodes.assign(3, false);
  return g;
}

// Zero the last layer of both heads and set its bias so the net emits
// sigmoid(bias) everywhere. A bias of 100 saturates to exactly 1.
inline void set_constant_output(MaskNet& net, real bias) {
  for (Mlp* head : {&net.node_head(), &net.edge_head()}) {
    Linear& last = head->layers().back();
    for (real& w : last.weight().mutable_data()) w = 0;
    for (real& b : last.bias().mutable_data()) b = bias;
  }
}

// Small base-shift split for fast engine tests.
inline DatasetSplit tiny_split(std::uint64_t seed, std::size_t per_class = 4, std::size_t feature_dim = 4) {
  MotifConfig config = base_shift_config(per_class, per_class, seed);
  config.feature_dim = feature_dim;
  for (auto& env : config.envs) {
    env.min_base_nodes = 5;
    env.max_base_nodes = 8;
  }
  return split_covariate(generate_motif_dataset(config), ShiftKind::base);
}

inline ModelConfig tiny_model(std::size_t feature_dim = 4) {
  ModelConfig m;
  m.feature_dim = feature_dim;
  m.backbone_layers = 2;
  m.backbone_hidden = 8;
  m.mask_layers = 1;
  m.mask_hidden = 6;
  return m;
}

inline Batch batch_of(const std::vector<GraphInput>& inputs) {
  Batch b;
  for (const auto& g : inputs) b.push_back(&g);
  return b;
}

}  // namespace advca::testing
