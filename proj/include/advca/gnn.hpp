#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "advca/graph.hpp"
#include "advca/rng.hpp"
#include "advca/tensor.hpp"

namespace advca {
ADVCA_NS_BEGIN

struct NamedParam {
  std::string name;
  Tensor tensor;
};
using ParamList = std::vector<NamedParam>;

void set_trainable(const ParamList& params, bool trainable);
void zero_grads(const ParamList& params);
// Deep copy of the parameter values, in order.
std::vector<std::vector<real>> snapshot(const ParamList& params);
void restore(const ParamList& params, const std::vector<std::vector<real>>& values);

// y = x·W + b with W: in×out. Weights and bias are drawn uniformly from
// [-1/sqrt(in), 1/sqrt(in)].
class Linear {
 public:
  Linear() = default;
  Linear(std::size_t in, std::size_t out, Rng& rng);

  Tensor forward(const Tensor& x) const;
  std::size_t in_features() const { return weight_.dim(0); }
  std::size_t out_features() const { return weight_.dim(1); }
  Tensor& weight() { return weight_; }
  Tensor& bias() { return bias_; }
  void collect(ParamList& out, const std::string& prefix) const;

 private:
  Tensor weight_;
  Tensor bias_;
};

// Linear layers with ReLU between consecutive layers (none after the last).
class Mlp {
 public:
  Mlp() = default;
  explicit Mlp(const std::vector<std::size_t>& widths, Rng& rng);

  Tensor forward(const Tensor& x) const;
  std::vector<Linear>& layers() { return layers_; }
  void collect(ParamList& out, const std::string& prefix) const;

 private:
  std::vector<Linear> layers_;
};

// Soft masks over one graph. node: n×1. edge_values: m×1, one per undirected
// edge in GraphInput::edges order (undefined when the graph has no edges).
// edge: n×n symmetric, equal to edge_values on the edge support and 0 elsewhere.
struct MaskPair {
  Tensor node;
  Tensor edge_values;
  Tensor edge;
};

MaskPair make_mask_pair(const GraphInput& graph, Tensor node, Tensor edge_values);
MaskPair constant_mask(const GraphInput& graph, real value);
MaskPair detach(const MaskPair& mask);

// Graph with A⊙M^a and X⊙M^x substituted, detached from any tape.
GraphInput apply_mask(const GraphInput& graph, const MaskPair& mask);

struct Encoding {
  Tensor nodes;      // n×d
  Tensor embedding;  // 1×d, mean over node states
};

// GIN with ε = 0: H ← MLP(H + Â·H), ReLU between layers, mean readout.
class GinEncoder {
 public:
  GinEncoder() = default;
  GinEncoder(std::size_t in_dim, std::size_t hidden, std::size_t num_layers, Rng& rng);

  Encoding encode(const GraphInput& graph, const MaskPair* mask = nullptr) const;
  std::size_t hidden() const { return hidden_; }
  std::size_t in_dim() const { return in_dim_; }
  std::vector<Mlp>& layers() { return layers_; }
  void collect(ParamList& out, const std::string& prefix) const;

 private:
  std::size_t in_dim_ = 0;
  std::size_t hidden_ = 0;
  std::vector<Mlp> layers_;
};

class Classifier {
 public:
  Classifier() = default;
  Classifier(std::size_t hidden, std::size_t num_classes, Rng& rng);

  Tensor logits(const Tensor& embedding) const;
  Linear& linear() { return linear_; }
  void collect(ParamList& out, const std::string& prefix) const;

 private:
  Linear linear_;
};

// f = Φ∘h
struct Backbone {
  GinEncoder encoder;
  Classifier classifier;

  Tensor logits(const GraphInput& graph, const MaskPair* mask = nullptr) const;
  ParamList parameters() const;
};

// Mask generation network: own GIN encoder, node head d→d→1 and edge head
// 2d→d→1, both followed by a sigmoid.
class MaskNet {
 public:
  MaskNet() = default;
  MaskNet(std::size_t in_dim, std::size_t hidden, std::size_t num_layers, Rng& rng);

  MaskPair forward(const GraphInput& graph) const;
  GinEncoder& encoder() { return encoder_; }
  Mlp& node_head() { return node_head_; }
  Mlp& edge_head() { return edge_head_; }
  ParamList parameters(const std::string& prefix) const;

 private:
  GinEncoder encoder_;
  Mlp node_head_;
  Mlp edge_head_;
};

std::size_t argmax(const Tensor& logits);

// Binary checkpoint: "ADVCA1", u32 count, then per tensor u32 name length,
// UTF-8 name, u32 rank, u32 dims, little-endian f32 values.
std::string encode_checkpoint(const ParamList& params);
ParamList decode_checkpoint(const std::string& bytes);
void save_checkpoint(const ParamList& params, const std::filesystem::path& path);
// Copies values into `params` by name; names, order and shapes must match.
void load_checkpoint(const ParamList& params, const std::filesystem::path& path);
void assign_checkpoint(const ParamList& params, const ParamList& loaded);

ADVCA_NS_END
}  // namespace advca
