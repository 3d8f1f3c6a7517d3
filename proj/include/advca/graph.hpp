#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "advca/real.hpp"
#include "advca/rng.hpp"
#include "advca/tensor.hpp"

namespace advca {
ADVCA_NS_BEGIN

using Edge = std::pair<std::size_t, std::size_t>;

enum class BaseKind { wheel, tree, ladder, star, path };
// Motif kind doubles as the class label: house -> 0, cycle -> 1, crane -> 2.
enum class MotifKind { house = 0, cycle = 1, crane = 2 };
enum class ShiftKind { base, size };

inline constexpr std::size_t kNumMotifClasses = 3;
inline constexpr std::size_t kMotifNodes = 5;

std::string to_string(BaseKind kind);
std::string to_string(MotifKind kind);
std::string to_string(ShiftKind kind);
BaseKind parse_base_kind(const std::string& name);
ShiftKind parse_shift_kind(const std::string& name);

// Undirected attributed graph. Edges are stored once with first < second.
struct Graph {
  std::int64_t id = 0;
  std::size_t num_nodes = 0;
  std::vector<Edge> edges;
  std::size_t feature_dim = 0;
  std::vector<real> features;  // num_nodes × feature_dim, row-major
  std::size_t label = 0;
  std::string env;
  // Ground truth for evaluation only; model code receives GraphInput instead.
  std::vector<bool> causal_nodes;

  bool operator==(const Graph&) const = default;
};

// Throws DataError if edges/features/flags violate the Graph invariants.
void validate(const Graph& graph);
bool is_connected(std::size_t num_nodes, const std::vector<Edge>& edges);

// The model-facing view of a graph: topology, (possibly soft) adjacency and
// node features, and the label. Environment tags and causal flags are not
// reachable from here.
struct GraphInput {
  std::size_t num_nodes = 0;
  std::vector<Edge> edges;
  Tensor adjacency;  // n×n, symmetric
  Tensor features;   // n×f
  std::size_t label = 0;
};

GraphInput make_input(const Graph& graph);
std::vector<GraphInput> make_inputs(const std::vector<Graph>& graphs);

struct Topology {
  std::size_t num_nodes = 0;
  std::vector<Edge> edges;
};

// size_param is the node count of the base graph. Minimums: wheel 4, ladder 4
// (even), everything else 2.
Topology make_base_graph(BaseKind kind, std::size_t size_param, Rng& rng);

// Five-node motifs. house: 4-cycle 0-1-2-3 with apex 4 on 0 and 1.
// cycle: 5-ring. crane: triangle 0-1-2 with pendant path 2-3-4.
Topology make_motif(MotifKind kind);

struct EnvSpec {
  std::string tag;
  std::vector<BaseKind> bases;  // base kind drawn uniformly from this list
  std::size_t min_base_nodes = 8;
  std::size_t max_base_nodes = 16;
  std::size_t graphs_per_class = 1;
};

struct MotifConfig {
  std::vector<EnvSpec> envs;
  std::size_t feature_dim = 4;
  std::uint64_t seed = 0;
};

// Desk-scale defaults: 900 train / 150 val / 150 test graphs.
MotifConfig base_shift_config(std::size_t train_per_class_per_env = 100,
                              std::size_t eval_per_class = 50, std::uint64_t seed = 0);
MotifConfig size_shift_config(std::size_t train_per_class = 300, std::size_t eval_per_class = 50,
                              std::uint64_t seed = 0);

// Each graph is a base graph and a motif joined by one uniformly drawn bridge
// edge. Base nodes come first, motif nodes last.
std::vector<Graph> generate_motif_dataset(const MotifConfig& config);

struct DatasetSplit {
  std::vector<Graph> train;
  std::vector<Graph> val;
  std::vector<Graph> test;
  ShiftKind shift_kind = ShiftKind::base;
};

// base: train = wheel/tree/ladder, val = star, test = path.
// size: train = small, val = middle, test = large.
DatasetSplit split_covariate(const std::vector<Graph>& graphs, ShiftKind shift_kind);

// DropEdge: each undirected edge removed independently with probability p,
// 0 <= p < 1. Features, label and flags are untouched.
Graph dropedge_augment(const Graph& graph, double p, Rng& rng);

void save_jsonl(const std::vector<Graph>& graphs, const std::filesystem::path& path);
std::vector<Graph> load_jsonl(const std::filesystem::path& path);
std::string to_jsonl_line(const Graph& graph);
Graph parse_jsonl_line(const std::string& line, std::size_t line_number);

ADVCA_NS_END
}  // namespace advca
