#include <fstream>
#include <sstream>

#include <json.hpp>

#include "advca/errors.hpp"
#include "advca/graph.hpp"
#include "advca/io.hpp"

namespace advca {
ADVCA_NS_BEGIN

using ordered_json = nlohmann::ordered_json;

std::string to_jsonl_line(const Graph& g) {
  ordered_json j;
  j["id"] = g.id;
  j["num_nodes"] = g.num_nodes;
  auto edges = ordered_json::array();
  for (const auto& [u, v] : g.edges) edges.push_back({u, v});
  j["edges"] = std::move(edges);
  auto features = ordered_json::array();
  for (std::size_t i = 0; i < g.num_nodes; ++i) {
    auto row = ordered_json::array();
    for (std::size_t k = 0; k < g.feature_dim; ++k) row.push_back(g.features[i * g.feature_dim + k]);
    features.push_back(std::move(row));
  }
  j["features"] = std::move(features);
  j["label"] = g.label;
  j["env"] = g.env;
  auto flags = ordered_json::array();
  for (bool b : g.causal_nodes) flags.push_back(b);
  j["causal_nodes"] = std::move(flags);
  return j.dump();
}

Graph parse_jsonl_line(const std::string& line, std::size_t line_number) {
  ordered_json j;
  try {
    j = ordered_json::parse(line);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(line_number, std::string("malformed JSON: ") + e.what());
  }
  Graph g;
  try {
    g.id = j.at("id").get<std::int64_t>();
    g.num_nodes = j.at("num_nodes").get<std::size_t>();
    for (const auto& e : j.at("edges")) {
      if (!e.is_array() || e.size() != 2) throw ParseError(line_number, "edge must be a pair");
      g.edges.emplace_back(e[0].get<std::size_t>(), e[1].get<std::size_t>());
    }
    const auto& rows = j.at("features");
    if (rows.size() != g.num_nodes) throw ParseError(line_number, "feature row count != num_nodes");
    g.feature_dim = rows.empty() ? 0 : rows[0].size();
    for (const auto& row : rows) {
      if (row.size() != g.feature_dim) throw ParseError(line_number, "ragged feature matrix");
      for (const auto& x : row) g.features.push_back(static_cast<real>(x.get<double>()));
    }
    g.label = j.at("label").get<std::size_t>();
    g.env = j.at("env").get<std::string>();
    for (const auto& b : j.at("causal_nodes")) g.causal_nodes.push_back(b.get<bool>());
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(line_number, std::string("bad graph record: ") + e.what());
  }
  try {
    validate(g);
  } catch (const DataError& e) {
    throw ParseError(line_number, e.what());
  }
  return g;
}

void save_jsonl(const std::vector<Graph>& graphs, const std::filesystem::path& path) {
  std::string out;
  for (const Graph& g : graphs) {
    out += to_jsonl_line(g);
    out += '\n';
  }
  write_file_atomic(path, out);
}

std::vector<Graph> load_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open dataset file " + path.string());
  std::vector<Graph> graphs;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.empty()) continue;
    graphs.push_back(parse_jsonl_line(line, number));
  }
  return graphs;
}

ADVCA_NS_END
}  // namespace advca
