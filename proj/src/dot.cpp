#include "advca/dot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "advca/errors.hpp"

namespace advca {
ADVCA_NS_BEGIN

std::string gray_fill(double mask_value) {
  const double v = std::clamp(mask_value, 0.0, 1.0);
  const int level = static_cast<int>(std::lround(255.0 * (1.0 - v)));
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", level, level, level);
  return buf;
}

double edge_penwidth(double mask_value) { return 0.5 + 3.0 * std::clamp(mask_value, 0.0, 1.0); }

std::string to_dot(const Graph& graph, const std::vector<double>& node_mask, const std::vector<double>& edge_mask,
                   const std::string& name) {
  if (node_mask.size() != graph.num_nodes || edge_mask.size() != graph.edges.size()) {
    throw DimensionError("mask sizes do not match graph " + name);
  }
  std::ostringstream out;
  out << "graph \"" << name << "\" {\n";
  out << "  label=\"label " << graph.label << ", env " << graph.env << "\";\n";
  out << "  node [shape=circle, style=filled, fontsize=10];\n";
  char buf[64];
  for (std::size_t i = 0; i < graph.num_nodes; ++i) {
    // Light text on dark fills.
    const bool dark = node_mask[i] > 0.5;
    out << "  " << i << " [fillcolor=\"" << gray_fill(node_mask[i]) << "\", fontcolor=\""
        << (dark ? "white" : "black") << "\"";
    if (i < graph.causal_nodes.size() && graph.causal_nodes[i]) out << ", peripheries=2";
    std::snprintf(buf, sizeof buf, "%.3f", node_mask[i]);
    out << ", tooltip=\"" << buf << "\"];\n";
  }
  for (std::size_t e = 0; e < graph.edges.size(); ++e) {
    std::snprintf(buf, sizeof buf, "%.3f", edge_penwidth(edge_mask[e]));
    out << "  " << graph.edges[e].first << " -- " << graph.edges[e].second << " [penwidth=" << buf << "];\n";
  }
  out << "}\n";
  return out.str();
}

ADVCA_NS_END
}  // namespace advca
