#include "advca/gnn.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "advca/errors.hpp"
#include "advca/io.hpp"

namespace advca {
ADVCA_NS_BEGIN

void set_trainable(const ParamList& params, bool trainable) {
  for (const auto& p : params) {
    Tensor t = p.tensor;
    t.set_requires_grad(trainable);
  }
}

void zero_grads(const ParamList& params) {
  for (const auto& p : params) {
    Tensor t = p.tensor;
    t.zero_grad();
  }
}

std::vector<std::vector<real>> snapshot(const ParamList& params) {
  std::vector<std::vector<real>> out;
  out.reserve(params.size());
  for (const auto& p : params) out.emplace_back(p.tensor.data().begin(), p.tensor.data().end());
  return out;
}

void restore(const ParamList& params, const std::vector<std::vector<real>>& values) {
  if (values.size() != params.size()) throw DimensionError("restore: parameter count mismatch");
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor t = params[i].tensor;
    auto dst = t.mutable_data();
    if (dst.size() != values[i].size()) throw DimensionError("restore: size mismatch for " + params[i].name);
    std::copy(values[i].begin(), values[i].end(), dst.begin());
  }
}

Linear::Linear(std::size_t in, std::size_t out, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(in));
  std::vector<real> w(in * out);
  for (real& x : w) x = static_cast<real>(rng.uniform(-bound, bound));
  std::vector<real> b(out);
  for (real& x : b) x = static_cast<real>(rng.uniform(-bound, bound));
  weight_ = Tensor::from({in, out}, std::move(w), true);
  bias_ = Tensor::from({1, out}, std::move(b), true);
}

Tensor Linear::forward(const Tensor& x) const { return matmul(x, weight_) + bias_; }

void Linear::collect(ParamList& out, const std::string& prefix) const {
  out.push_back({prefix + ".weight", weight_});
  out.push_back({prefix + ".bias", bias_});
}

Mlp::Mlp(const std::vector<std::size_t>& widths, Rng& rng) {
  if (widths.size() < 2) throw ArgumentError("an MLP needs at least input and output widths");
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) layers_.emplace_back(widths[i], widths[i + 1], rng);
}

Tensor Mlp::forward(const Tensor& x) const {
  Tensor h = x;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    h = layers_[i].forward(h);
    if (i + 1 < layers_.size()) h = relu(h);
  }
  return h;
}

void Mlp::collect(ParamList& out, const std::string& prefix) const {
  for (std::size_t i = 0; i < layers_.size(); ++i) layers_[i].collect(out, prefix + "." + std::to_string(i));
}

MaskPair make_mask_pair(const GraphInput& graph, Tensor node, Tensor edge_values) {
  const std::size_t n = graph.num_nodes;
  if (node.shape() != Shape{n, 1}) {
    throw DimensionError("node mask shape " + to_string(node.shape()) + " does not match " +
                         std::to_string(n) + " nodes");
  }
  MaskPair m;
  m.node = std::move(node);
  if (graph.edges.empty()) {
    m.edge = Tensor::zeros({n, n});
    return m;
  }
  if (!edge_values.defined() || edge_values.numel() != graph.edges.size()) {
    throw DimensionError("edge mask must carry one value per undirected edge");
  }
  m.edge_values = std::move(edge_values);
  m.edge = scatter_symmetric(m.edge_values, graph.edges, n);
  return m;
}

MaskPair constant_mask(const GraphInput& graph, real value) {
  Tensor edges;
  if (!graph.edges.empty()) edges = Tensor::full({graph.edges.size(), 1}, value);
  return make_mask_pair(graph, Tensor::full({graph.num_nodes, 1}, value), edges);
}

MaskPair detach(const MaskPair& mask) {
  MaskPair out;
  out.node = mask.node.detach();
  if (mask.edge_values.defined()) out.edge_values = mask.edge_values.detach();
  out.edge = mask.edge.detach();
  return out;
}

GraphInput apply_mask(const GraphInput& graph, const MaskPair& mask) {
  NoGradGuard no_grad;
  GraphInput out = graph;
  out.adjacency = (graph.adjacency * mask.edge).detach();
  out.features = (graph.features * mask.node).detach();
  return out;
}

GinEncoder::GinEncoder(std::size_t in_dim, std::size_t hidden, std::size_t num_layers, Rng& rng)
    : in_dim_(in_dim), hidden_(hidden) {
  if (num_layers == 0) throw ArgumentError("GIN encoder needs at least one layer");
  for (std::size_t l = 0; l < num_layers; ++l) {
    layers_.emplace_back(std::vector<std::size_t>{l == 0 ? in_dim : hidden, hidden, hidden}, rng);
  }
}

Encoding GinEncoder::encode(const GraphInput& graph, const MaskPair* mask) const {
  const std::size_t n = graph.num_nodes;
  if (graph.features.shape() != Shape{n, in_dim_}) {
    throw DimensionError("encoder expects features " + to_string({n, in_dim_}) + ", got " +
                         to_string(graph.features.shape()));
  }
  Tensor adjacency = graph.adjacency;
  Tensor h = graph.features;
  if (mask != nullptr) {
    if (mask->node.shape() != Shape{n, 1} || mask->edge.shape() != Shape{n, n}) {
      throw DimensionError("mask shapes " + to_string(mask->node.shape()) + "/" +
                           to_string(mask->edge.shape()) + " do not match a graph of " +
                           std::to_string(n) + " nodes");
    }
    adjacency = adjacency * mask->edge;
    h = h * mask->node;
  }
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    h = layers_[l].forward(h + matmul(adjacency, h));
    if (l + 1 < layers_.size()) h = relu(h);
  }
  return {h, mean(h, 0)};
}

void GinEncoder::collect(ParamList& out, const std::string& prefix) const {
  for (std::size_t l = 0; l < layers_.size(); ++l) layers_[l].collect(out, prefix + ".layer" + std::to_string(l));
}

Classifier::Classifier(std::size_t hidden, std::size_t num_classes, Rng& rng)
    : linear_(hidden, num_classes, rng) {}

Tensor Classifier::logits(const Tensor& embedding) const {
  if (embedding.numel() != linear_.in_features()) {
    throw DimensionError("classifier expects an embedding of width " + std::to_string(linear_.in_features()) +
                         ", got " + to_string(embedding.shape()));
  }
  if (embedding.rank() != 2) throw DimensionError("classifier expects a 1×d embedding");
  return linear_.forward(embedding);
}

void Classifier::collect(ParamList& out, const std::string& prefix) const { linear_.collect(out, prefix); }

Tensor Backbone::logits(const GraphInput& graph, const MaskPair* mask) const {
  return classifier.logits(encoder.encode(graph, mask).embedding);
}

ParamList Backbone::parameters() const {
  ParamList out;
  encoder.collect(out, "backbone.encoder");
  classifier.collect(out, "backbone.classifier");
  return out;
}

MaskNet::MaskNet(std::size_t in_dim, std::size_t hidden, std::size_t num_layers, Rng& rng)
    : encoder_(in_dim, hidden, num_layers, rng),
      node_head_({hidden, hidden, 1}, rng),
      edge_head_({2 * hidden, hidden, 1}, rng) {}

MaskPair MaskNet::forward(const GraphInput& graph) const {
  const Tensor z = encoder_.encode(graph).nodes;
  Tensor node = sigmoid(node_head_.forward(z));
  if (graph.edges.empty()) return make_mask_pair(graph, node, Tensor{});

  // Both orientations of every edge in one batch: rows [0, m) are (i, j),
  // rows [m, 2m) are (j, i).
  const std::size_t m = graph.edges.size();
  std::vector<std::size_t> first(2 * m);
  std::vector<std::size_t> second(2 * m);
  for (std::size_t e = 0; e < m; ++e) {
    first[e] = second[m + e] = graph.edges[e].first;
    second[e] = first[m + e] = graph.edges[e].second;
  }
  const Tensor pairs = concat_cols(gather_rows(z, first), gather_rows(z, second));
  const Tensor raw = sigmoid(edge_head_.forward(pairs));
  std::vector<std::size_t> forward_rows(m);
  std::vector<std::size_t> reverse_rows(m);
  for (std::size_t e = 0; e < m; ++e) {
    forward_rows[e] = e;
    reverse_rows[e] = m + e;
  }
  Tensor edge_values = scale(gather_rows(raw, forward_rows) + gather_rows(raw, reverse_rows), real{0.5});
  return make_mask_pair(graph, std::move(node), std::move(edge_values));
}

ParamList MaskNet::parameters(const std::string& prefix) const {
  ParamList out;
  encoder_.collect(out, prefix + ".encoder");
  node_head_.collect(out, prefix + ".node_head");
  edge_head_.collect(out, prefix + ".edge_head");
  return out;
}

std::size_t argmax(const Tensor& logits) {
  const auto v = logits.data();
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v[i] > v[best]) best = i;
  }
  return best;
}

namespace {

constexpr char kMagic[] = "ADVCA1";
constexpr std::size_t kMagicLength = 6;

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f32(std::string& out, float f) {
  std::uint32_t bits = 0;
  std::memcpy(&bits, &f, sizeof bits);
  put_u32(out, bits);
}

class Reader {
 public:
  explicit Reader(const std::string& bytes) : bytes_(bytes) {}

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    pos_ += 4;
    return v;
  }

  float f32() {
    const std::uint32_t bits = u32();
    float f = 0;
    std::memcpy(&f, &bits, sizeof f);
    return f;
  }

  std::string str(std::size_t n) {
    need(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > bytes_.size()) throw DataError("checkpoint truncated");
  }

  const std::string& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string encode_checkpoint(const ParamList& params) {
  std::string out(kMagic, kMagicLength);
  put_u32(out, static_cast<std::uint32_t>(params.size()));
  for (const auto& p : params) {
    put_u32(out, static_cast<std::uint32_t>(p.name.size()));
    out += p.name;
    put_u32(out, static_cast<std::uint32_t>(p.tensor.rank()));
    for (std::size_t d : p.tensor.shape()) put_u32(out, static_cast<std::uint32_t>(d));
    for (real x : p.tensor.data()) put_f32(out, static_cast<float>(x));
  }
  return out;
}

ParamList decode_checkpoint(const std::string& bytes) {
  Reader in(bytes);
  if (in.str(kMagicLength) != std::string(kMagic, kMagicLength)) throw DataError("not an ADVCA1 checkpoint");
  const std::uint32_t count = in.u32();
  ParamList out;
  for (std::uint32_t i = 0; i < count; ++i) {
    NamedParam p;
    p.name = in.str(in.u32());
    const std::uint32_t rank = in.u32();
    Shape shape(rank);
    for (auto& d : shape) d = in.u32();
    std::vector<real> values(shape_numel(shape));
    for (real& x : values) x = static_cast<real>(in.f32());
    p.tensor = Tensor::from(std::move(shape), std::move(values));
    out.push_back(std::move(p));
  }
  if (!in.done()) throw DataError("trailing bytes after checkpoint tensors");
  return out;
}

void save_checkpoint(const ParamList& params, const std::filesystem::path& path) {
  write_file_atomic(path, encode_checkpoint(params));
}

void assign_checkpoint(const ParamList& params, const ParamList& loaded) {
  if (loaded.size() != params.size()) {
    throw DataError("checkpoint has " + std::to_string(loaded.size()) + " tensors, model expects " +
                    std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (loaded[i].name != params[i].name) {
      throw DataError("checkpoint tensor '" + loaded[i].name + "' where '" + params[i].name + "' was expected");
    }
    if (loaded[i].tensor.shape() != params[i].tensor.shape()) {
      throw DataError("checkpoint tensor '" + loaded[i].name + "' has shape " +
                      to_string(loaded[i].tensor.shape()) + ", model expects " +
                      to_string(params[i].tensor.shape()));
    }
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor dst = params[i].tensor;
    auto src = loaded[i].tensor.data();
    std::copy(src.begin(), src.end(), dst.mutable_data().begin());
  }
}

void load_checkpoint(const ParamList& params, const std::filesystem::path& path) {
  assign_checkpoint(params, decode_checkpoint(read_file(path)));
}

ADVCA_NS_END
}  // namespace advca
