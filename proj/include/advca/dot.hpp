#pragma once

#include <string>
#include <vector>

#include "advca/graph.hpp"

namespace advca {
ADVCA_NS_BEGIN

// Grayscale fill for a mask value: 0 -> white, 1 -> black.
std::string gray_fill(double mask_value);
double edge_penwidth(double mask_value);

// Undirected DOT graph. node_mask has one value per node, edge_mask one per
// undirected edge in graph.edges order. Ground-truth causal nodes get a
// double border.
std::string to_dot(const Graph& graph, const std::vector<double>& node_mask, const std::vector<double>& edge_mask,
                   const std::string& name);

ADVCA_NS_END
}  // namespace advca
