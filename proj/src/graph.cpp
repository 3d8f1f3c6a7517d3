#include "advca/graph.hpp"

#include <algorithm>
#include <numeric>
#include <set>

#include "advca/errors.hpp"

namespace advca {
ADVCA_NS_BEGIN

namespace {

Edge ordered(std::size_t a, std::size_t b) { return a < b ? Edge{a, b} : Edge{b, a}; }

void require_min(BaseKind kind, std::size_t size, std::size_t minimum) {
  if (size < minimum) {
    throw ArgumentError(to_string(kind) + " base graph needs at least " + std::to_string(minimum) +
                        " nodes, got " + std::to_string(size));
  }
}

}  // namespace

std::string to_string(BaseKind kind) {
  switch (kind) {
    case BaseKind::wheel: return "wheel";
    case BaseKind::tree: return "tree";
    case BaseKind::ladder: return "ladder";
    case BaseKind::star: return "star";
    case BaseKind::path: return "path";
  }
  return "?";
}

std::string to_string(MotifKind kind) {
  switch (kind) {
    case MotifKind::house: return "house";
    case MotifKind::cycle: return "cycle";
    case MotifKind::crane: return "crane";
  }
  return "?";
}

std::string to_string(ShiftKind kind) { return kind == ShiftKind::base ? "base" : "size"; }

BaseKind parse_base_kind(const std::string& name) {
  for (BaseKind k : {BaseKind::wheel, BaseKind::tree, BaseKind::ladder, BaseKind::star, BaseKind::path}) {
    if (to_string(k) == name) return k;
  }
  throw ArgumentError("unknown base graph kind '" + name + "'");
}

ShiftKind parse_shift_kind(const std::string& name) {
  if (name == "base") return ShiftKind::base;
  if (name == "size") return ShiftKind::size;
  throw ArgumentError("unknown shift kind '" + name + "' (expected base or size)");
}

bool is_connected(std::size_t num_nodes, const std::vector<Edge>& edges) {
  if (num_nodes == 0) return true;
  std::vector<std::size_t> parent(num_nodes);
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  std::size_t components = num_nodes;
  for (const auto& [u, v] : edges) {
    const std::size_t a = find(u);
    const std::size_t b = find(v);
    if (a != b) {
      parent[a] = b;
      --components;
    }
  }
  return components == 1;
}

void validate(const Graph& g) {
  const std::string where = "graph " + std::to_string(g.id) + ": ";
  if (g.num_nodes == 0) throw DataError(where + "no nodes");
  std::set<Edge> seen;
  for (const auto& [u, v] : g.edges) {
    if (u >= v) throw DataError(where + "edge endpoints must satisfy i < j");
    if (v >= g.num_nodes) throw DataError(where + "edge endpoint out of range");
    if (!seen.insert({u, v}).second) throw DataError(where + "duplicate edge");
  }
  if (g.feature_dim == 0 || g.features.size() != g.num_nodes * g.feature_dim) {
    throw DataError(where + "feature matrix does not match num_nodes x feature_dim");
  }
  if (g.causal_nodes.size() != g.num_nodes) throw DataError(where + "causal_nodes length mismatch");
  if (g.label >= kNumMotifClasses) throw DataError(where + "label out of range");
}

GraphInput make_input(const Graph& g) {
  GraphInput in;
  in.num_nodes = g.num_nodes;
  in.edges = g.edges;
  in.label = g.label;
  std::vector<real> adj(g.num_nodes * g.num_nodes, real{0});
  for (const auto& [u, v] : g.edges) {
    adj[u * g.num_nodes + v] = 1;
    adj[v * g.num_nodes + u] = 1;
  }
  in.adjacency = Tensor::from({g.num_nodes, g.num_nodes}, std::move(adj));
  in.features = Tensor::from({g.num_nodes, g.feature_dim}, g.features);
  return in;
}

std::vector<GraphInput> make_inputs(const std::vector<Graph>& graphs) {
  std::vector<GraphInput> out;
  out.reserve(graphs.size());
  for (const auto& g : graphs) out.push_back(make_input(g));
  return out;
}

Topology make_base_graph(BaseKind kind, std::size_t n, Rng& rng) {
  Topology t;
  t.num_nodes = n;
  switch (kind) {
    case BaseKind::wheel:
      require_min(kind, n, 4);
      // Hub 0, rim 1..n-1.
      for (std::size_t i = 1; i < n; ++i) {
        t.edges.push_back({0, i});
        t.edges.push_back(ordered(i, i + 1 < n ? i + 1 : 1));
      }
      break;
    case BaseKind::tree:
      require_min(kind, n, 2);
      for (std::size_t i = 1; i < n; ++i) t.edges.push_back({rng.index(i), i});
      break;
    case BaseKind::ladder: {
      require_min(kind, n, 4);
      if (n % 2 != 0) throw ArgumentError("ladder base graph needs an even node count");
      const std::size_t rail = n / 2;
      for (std::size_t i = 0; i < rail; ++i) {
        if (i + 1 < rail) {
          t.edges.push_back({i, i + 1});
          t.edges.push_back({rail + i, rail + i + 1});
        }
        t.edges.push_back({i, rail + i});
      }
      break;
    }
    case BaseKind::star:
      require_min(kind, n, 2);
      for (std::size_t i = 1; i < n; ++i) t.edges.push_back({0, i});
      break;
    case BaseKind::path:
      require_min(kind, n, 2);
      for (std::size_t i = 0; i + 1 < n; ++i) t.edges.push_back({i, i + 1});
      break;
  }
  std::sort(t.edges.begin(), t.edges.end());
  return t;
}

Topology make_motif(MotifKind kind) {
  Topology t;
  t.num_nodes = kMotifNodes;
  switch (kind) {
    case MotifKind::house:
      t.edges = {{0, 1}, {1, 2}, {2, 3}, {0, 3}, {0, 4}, {1, 4}};
      break;
    case MotifKind::cycle:
      t.edges = {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {0, 4}};
      break;
    case MotifKind::crane:
      t.edges = {{0, 1}, {1, 2}, {0, 2}, {2, 3}, {3, 4}};
      break;
  }
  std::sort(t.edges.begin(), t.edges.end());
  return t;
}

MotifConfig base_shift_config(std::size_t train_per_class_per_env, std::size_t eval_per_class,
                              std::uint64_t seed) {
  MotifConfig config;
  config.seed = seed;
  for (BaseKind k : {BaseKind::wheel, BaseKind::tree, BaseKind::ladder}) {
    config.envs.push_back({to_string(k), {k}, 8, 16, train_per_class_per_env});
  }
  config.envs.push_back({"star", {BaseKind::star}, 8, 16, eval_per_class});
  config.envs.push_back({"path", {BaseKind::path}, 8, 16, eval_per_class});
  return config;
}

MotifConfig size_shift_config(std::size_t train_per_class, std::size_t eval_per_class,
                              std::uint64_t seed) {
  const std::vector<BaseKind> all{BaseKind::wheel, BaseKind::tree, BaseKind::ladder, BaseKind::star,
                                  BaseKind::path};
  MotifConfig config;
  config.seed = seed;
  // Total node ladder 10-20 / 30-40 / 60-90; the motif contributes 5 nodes.
  config.envs.push_back({"small", all, 5, 15, train_per_class});
  config.envs.push_back({"middle", all, 25, 35, eval_per_class});
  config.envs.push_back({"large", all, 55, 85, eval_per_class});
  return config;
}

std::vector<Graph> generate_motif_dataset(const MotifConfig& config) {
  if (config.feature_dim == 0) throw ArgumentError("feature_dim must be at least 1");
  if (config.envs.empty()) throw ArgumentError("dataset config has no environments");
  Rng rng(config.seed);
  std::vector<Graph> out;
  std::int64_t next_id = 0;
  for (const EnvSpec& env : config.envs) {
    if (env.graphs_per_class == 0) throw ArgumentError("env '" + env.tag + "' has zero graphs per class");
    if (env.bases.empty()) throw ArgumentError("env '" + env.tag + "' lists no base graph kinds");
    if (env.min_base_nodes > env.max_base_nodes) {
      throw ArgumentError("env '" + env.tag + "' has min_base_nodes > max_base_nodes");
    }
    for (std::size_t label = 0; label < kNumMotifClasses; ++label) {
      for (std::size_t k = 0; k < env.graphs_per_class; ++k) {
        const BaseKind kind = env.bases[rng.index(env.bases.size())];
        std::size_t base_nodes = static_cast<std::size_t>(
            rng.integer(static_cast<std::int64_t>(env.min_base_nodes),
                        static_cast<std::int64_t>(env.max_base_nodes)));
        if (kind == BaseKind::ladder) base_nodes = std::max<std::size_t>(4, base_nodes - base_nodes % 2);
        if (kind == BaseKind::wheel) base_nodes = std::max<std::size_t>(4, base_nodes);
        const Topology base = make_base_graph(kind, base_nodes, rng);
        const Topology motif = make_motif(static_cast<MotifKind>(label));

        Graph g;
        g.id = next_id++;
        g.num_nodes = base.num_nodes + motif.num_nodes;
        g.edges = base.edges;
        for (const auto& [u, v] : motif.edges) {
          g.edges.push_back({u + base.num_nodes, v + base.num_nodes});
        }
        const std::size_t bridge_base = rng.index(base.num_nodes);
        const std::size_t bridge_motif = base.num_nodes + rng.index(motif.num_nodes);
        g.edges.push_back(ordered(bridge_base, bridge_motif));
        std::sort(g.edges.begin(), g.edges.end());

        g.feature_dim = config.feature_dim;
        g.features.resize(g.num_nodes * g.feature_dim);
        for (real& x : g.features) x = static_cast<real>(1.0 + rng.uniform(-0.1, 0.1));
        g.label = label;
        g.env = env.tag;
        g.causal_nodes.assign(g.num_nodes, false);
        for (std::size_t i = base.num_nodes; i < g.num_nodes; ++i) g.causal_nodes[i] = true;
        out.push_back(std::move(g));
      }
    }
  }
  return out;
}

DatasetSplit split_covariate(const std::vector<Graph>& graphs, ShiftKind shift_kind) {
  DatasetSplit split;
  split.shift_kind = shift_kind;
  std::vector<std::string> train_envs;
  std::string val_env;
  std::string test_env;
  if (shift_kind == ShiftKind::base) {
    train_envs = {"wheel", "tree", "ladder"};
    val_env = "star";
    test_env = "path";
  } else {
    train_envs = {"small"};
    val_env = "middle";
    test_env = "large";
  }
  for (const Graph& g : graphs) {
    if (std::find(train_envs.begin(), train_envs.end(), g.env) != train_envs.end()) {
      split.train.push_back(g);
    } else if (g.env == val_env) {
      split.val.push_back(g);
    } else if (g.env == test_env) {
      split.test.push_back(g);
    } else {
      throw DataError("graph " + std::to_string(g.id) + " has env '" + g.env +
                      "', not valid for a " + to_string(shift_kind) + " shift split");
    }
  }
  if (split.train.empty()) throw DataError("no graphs for the training split");
  if (split.val.empty()) throw DataError("no graphs with env '" + val_env + "' for the validation split");
  if (split.test.empty()) throw DataError("no graphs with env '" + test_env + "' for the test split");

  if (shift_kind == ShiftKind::size) {
    auto size_range = [](const std::vector<Graph>& gs) {
      auto [lo, hi] = std::minmax_element(gs.begin(), gs.end(), [](const Graph& a, const Graph& b) {
        return a.num_nodes < b.num_nodes;
      });
      return std::pair{lo->num_nodes, hi->num_nodes};
    };
    const auto train = size_range(split.train);
    const auto val = size_range(split.val);
    const auto test = size_range(split.test);
    if (!(train.second < val.first && val.first <= test.first)) {
      throw DataError("size buckets overlap: train max " + std::to_string(train.second) + ", val min " +
                      std::to_string(val.first) + ", test min " + std::to_string(test.first));
    }
  }
  return split;
}

Graph dropedge_augment(const Graph& graph, double p, Rng& rng) {
  if (p < 0.0 || p >= 1.0) throw ArgumentError("DropEdge probability must lie in [0, 1)");
  Graph out = graph;
  out.edges.clear();
  for (const Edge& e : graph.edges) {
    if (!rng.bernoulli(p)) out.edges.push_back(e);
  }
  return out;
}

ADVCA_NS_END
}  // namespace advca
