#include "advca/tensor.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <sstream>
#include <unordered_set>

namespace advca {
ADVCA_NS_BEGIN

namespace {

std::atomic<std::uint64_t> g_next_seq{1};
thread_local bool g_grad_enabled = true;
thread_local std::uint64_t* g_branch_hash = nullptr;

using NodePtr = std::shared_ptr<detail::Node>;

NodePtr make_leaf(Shape shape, std::vector<real> values, bool requires_grad) {
  const std::size_t n = shape_numel(shape);
  if (shape.empty()) throw DimensionError("tensor rank must be at least 1");
  for (std::size_t extent : shape) {
    if (extent == 0) throw DimensionError("tensor extents must be positive, got " + to_string(shape));
  }
  if (values.size() != n) {
    throw DimensionError("value count " + std::to_string(values.size()) + " does not match shape " +
                         to_string(shape));
  }
  auto node = std::make_shared<detail::Node>();
  node->shape = std::move(shape);
  node->value = std::move(values);
  node->seq = g_next_seq.fetch_add(1, std::memory_order_relaxed);
  if (requires_grad) {
    node->requires_grad = true;
    node->grad.assign(n, real{0});
  }
  return node;
}

// Result node of an op. Records parents and the backward closure only when
// some input requires grad and recording is enabled.
NodePtr make_result(Shape shape, std::vector<real> values, std::initializer_list<NodePtr> inputs,
                    std::function<void(detail::Node&)> backward_fn) {
  auto node = std::make_shared<detail::Node>();
  node->shape = std::move(shape);
  node->value = std::move(values);
  node->seq = g_next_seq.fetch_add(1, std::memory_order_relaxed);
  bool needs = false;
  if (g_grad_enabled) {
    for (const auto& in : inputs) needs = needs || in->requires_grad;
  }
  if (needs) {
    node->requires_grad = true;
    node->parents.assign(inputs.begin(), inputs.end());
    node->backward_fn = std::move(backward_fn);
  }
  return node;
}

void require_defined(const Tensor& t, const char* op) {
  if (!t.defined()) throw ContractError(std::string(op) + ": undefined tensor");
}

// Broadcast plan for equal-rank shapes (or a single-element operand).
struct Broadcast {
  Shape out;
  std::vector<std::size_t> a_index;
  std::vector<std::size_t> b_index;
  bool same = false;
};

Broadcast plan_broadcast(const Shape& a, const Shape& b, const char* op) {
  Broadcast plan;
  if (a == b) {
    plan.out = a;
    plan.same = true;
    return plan;
  }
  const std::size_t na = shape_numel(a);
  const std::size_t nb = shape_numel(b);
  Shape out;
  if (a.size() == b.size()) {
    out.resize(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (a[i] == b[i] || b[i] == 1) {
        out[i] = a[i];
      } else if (a[i] == 1) {
        out[i] = b[i];
      } else {
        throw DimensionError(std::string(op) + ": cannot broadcast " + to_string(a) + " with " +
                             to_string(b));
      }
    }
  } else if (nb == 1) {
    out = a;
  } else if (na == 1) {
    out = b;
  } else {
    throw DimensionError(std::string(op) + ": cannot broadcast " + to_string(a) + " with " +
                         to_string(b));
  }
  const std::size_t n = shape_numel(out);
  plan.out = out;
  plan.a_index.resize(n);
  plan.b_index.resize(n);
  const std::size_t rank = out.size();
  // Per-axis source strides, zero on broadcast axes.
  auto strides_for = [&](const Shape& src) {
    std::vector<std::size_t> strides(rank, 0);
    if (shape_numel(src) == 1) return strides;
    std::size_t stride = 1;
    for (std::size_t d = rank; d-- > 0;) {
      strides[d] = src[d] == 1 ? 0 : stride;
      stride *= src[d];
    }
    return strides;
  };
  const auto sa = strides_for(a);
  const auto sb = strides_for(b);
  std::vector<std::size_t> coord(rank, 0);
  std::size_t ia = 0;
  std::size_t ib = 0;
  for (std::size_t i = 0; i < n; ++i) {
    plan.a_index[i] = ia;
    plan.b_index[i] = ib;
    for (std::size_t d = rank; d-- > 0;) {
      ++coord[d];
      ia += sa[d];
      ib += sb[d];
      if (coord[d] < out[d]) break;
      ia -= sa[d] * coord[d];
      ib -= sb[d] * coord[d];
      coord[d] = 0;
    }
  }
  return plan;
}

enum class BinaryOp { add, sub, mul };

Tensor binary(const Tensor& a, const Tensor& b, BinaryOp op, const char* name) {
  require_defined(a, name);
  require_defined(b, name);
  auto plan = std::make_shared<Broadcast>(plan_broadcast(a.shape(), b.shape(), name));
  const std::size_t n = shape_numel(plan->out);
  const auto& av = a.node()->value;
  const auto& bv = b.node()->value;
  std::vector<real> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const real x = plan->same ? av[i] : av[plan->a_index[i]];
    const real y = plan->same ? bv[i] : bv[plan->b_index[i]];
    switch (op) {
      case BinaryOp::add: out[i] = x + y; break;
      case BinaryOp::sub: out[i] = x - y; break;
      case BinaryOp::mul: out[i] = x * y; break;
    }
  }
  return Tensor::wrap(make_result(plan->out, std::move(out), {a.node(), b.node()},
                                  [plan, op](detail::Node& self) {
    auto& pa = *self.parents[0];
    auto& pb = *self.parents[1];
    const std::size_t n = self.value.size();
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t ia = plan->same ? i : plan->a_index[i];
      const std::size_t ib = plan->same ? i : plan->b_index[i];
      const real g = self.grad[i];
      if (pa.requires_grad) {
        pa.grad[ia] += op == BinaryOp::mul ? g * pb.value[ib] : g;
      }
      if (pb.requires_grad) {
        switch (op) {
          case BinaryOp::add: pb.grad[ib] += g; break;
          case BinaryOp::sub: pb.grad[ib] -= g; break;
          case BinaryOp::mul: pb.grad[ib] += g * pa.value[ia]; break;
        }
      }
    }
  }));
}

template <typename Forward, typename Derivative>
Tensor unary(const Tensor& a, const char* name, Forward forward, Derivative derivative) {
  require_defined(a, name);
  const auto& av = a.node()->value;
  std::vector<real> out(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = forward(av[i]);
  return Tensor::wrap(make_result(a.shape(), std::move(out), {a.node()},
                                  [derivative](detail::Node& self) {
    auto& p = *self.parents[0];
    for (std::size_t i = 0; i < self.value.size(); ++i) {
      p.grad[i] += self.grad[i] * derivative(p.value[i], self.value[i]);
    }
  }));
}

}  // namespace

std::string to_string(const Shape& shape) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out << 'x';
    out << shape[i];
  }
  out << ']';
  return out.str();
}

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t extent : shape) n *= extent;
  return n;
}

void detail::record_branch(bool taken) {
  if (g_branch_hash == nullptr) return;
  // FNV-1a over the decision stream.
  *g_branch_hash ^= taken ? 0x9e3779b97f4a7c15ULL : 0x7f4a7c159e3779b9ULL;
  *g_branch_hash *= 0x100000001b3ULL;
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  return full(std::move(shape), real{0}, requires_grad);
}

Tensor Tensor::ones(Shape shape, bool requires_grad) {
  return full(std::move(shape), real{1}, requires_grad);
}

Tensor Tensor::full(Shape shape, real value, bool requires_grad) {
  const std::size_t n = shape_numel(shape);
  return wrap(make_leaf(std::move(shape), std::vector<real>(n, value), requires_grad));
}

Tensor Tensor::from(Shape shape, std::vector<real> values, bool requires_grad) {
  return wrap(make_leaf(std::move(shape), std::move(values), requires_grad));
}

Tensor Tensor::scalar(real value, bool requires_grad) {
  return from({1}, {value}, requires_grad);
}

Tensor Tensor::wrap(std::shared_ptr<detail::Node> node) {
  Tensor t;
  t.node_ = std::move(node);
  return t;
}

const Shape& Tensor::shape() const {
  require_defined(*this, "shape");
  return node_->shape;
}

std::size_t Tensor::dim(std::size_t axis) const {
  if (axis >= rank()) {
    throw DimensionError("axis " + std::to_string(axis) + " out of range for shape " + to_string(shape()));
  }
  return node_->shape[axis];
}

std::size_t Tensor::numel() const { return shape_numel(shape()); }

std::span<const real> Tensor::data() const {
  require_defined(*this, "data");
  return node_->value;
}

std::span<real> Tensor::mutable_data() {
  require_defined(*this, "mutable_data");
  return node_->value;
}

real Tensor::item() const {
  if (numel() != 1) throw DimensionError("item() on tensor of shape " + to_string(shape()));
  return node_->value[0];
}

real Tensor::at(std::size_t i, std::size_t j) const {
  if (rank() != 2) throw DimensionError("at(i, j) needs a rank-2 tensor, got " + to_string(shape()));
  if (i >= node_->shape[0] || j >= node_->shape[1]) throw IndexError("at(i, j) index out of range");
  return node_->value[i * node_->shape[1] + j];
}

bool Tensor::requires_grad() const { return defined() && node_->requires_grad; }

void Tensor::set_requires_grad(bool value) {
  require_defined(*this, "set_requires_grad");
  if (!is_leaf()) throw ContractError("set_requires_grad is only valid on leaf tensors");
  node_->requires_grad = value;
  if (value && node_->grad.size() != node_->value.size()) {
    node_->grad.assign(node_->value.size(), real{0});
  }
}

bool Tensor::is_leaf() const { return node_->is_leaf(); }

std::span<const real> Tensor::grad() const {
  require_defined(*this, "grad");
  if (!node_->requires_grad) return {};
  return node_->grad;
}

std::span<real> Tensor::mutable_grad() {
  require_defined(*this, "mutable_grad");
  if (!node_->requires_grad) return {};
  return node_->grad;
}

void Tensor::zero_grad() {
  require_defined(*this, "zero_grad");
  std::fill(node_->grad.begin(), node_->grad.end(), real{0});
}

void Tensor::backward() const {
  require_defined(*this, "backward");
  if (numel() != 1) throw ContractError("backward() needs a scalar root, got shape " + to_string(shape()));
  if (!node_->requires_grad) return;

  std::vector<detail::Node*> order;
  std::unordered_set<detail::Node*> seen;
  std::vector<detail::Node*> stack{node_.get()};
  seen.insert(node_.get());
  while (!stack.empty()) {
    detail::Node* n = stack.back();
    stack.pop_back();
    order.push_back(n);
    for (const auto& p : n->parents) {
      if (p->requires_grad && seen.insert(p.get()).second) stack.push_back(p.get());
    }
  }
  std::sort(order.begin(), order.end(),
            [](const detail::Node* x, const detail::Node* y) { return x->seq > y->seq; });

  for (detail::Node* n : order) {
    if (!n->is_leaf()) n->grad.assign(n->value.size(), real{0});
  }
  node_->grad[0] += real{1};
  for (detail::Node* n : order) {
    if (!n->is_leaf()) n->backward_fn(*n);
  }
}

Tensor Tensor::detach() const {
  require_defined(*this, "detach");
  return from(node_->shape, node_->value, false);
}

Tensor Tensor::clone() const {
  require_defined(*this, "clone");
  Tensor t = from(node_->shape, node_->value, node_->requires_grad && is_leaf());
  return t;
}

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

bool grad_enabled() { return g_grad_enabled; }

BranchProbe::BranchProbe() : hash_(0xcbf29ce484222325ULL), previous_(g_branch_hash) {
  g_branch_hash = &hash_;
}

BranchProbe::~BranchProbe() { g_branch_hash = previous_; }

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_defined(a, "matmul");
  require_defined(b, "matmul");
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) {
    throw DimensionError("matmul: incompatible shapes " + to_string(a.shape()) + " and " +
                         to_string(b.shape()));
  }
  const std::size_t m = a.dim(0);
  const std::size_t k = a.dim(1);
  const std::size_t n = b.dim(1);
  const real* av = a.node()->value.data();
  const real* bv = b.node()->value.data();
  std::vector<real> out(m * n, real{0});
  for (std::size_t i = 0; i < m; ++i) {
    real* row = out.data() + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const real s = av[i * k + p];
      if (s == real{0}) continue;
      const real* brow = bv + p * n;
      for (std::size_t j = 0; j < n; ++j) row[j] += s * brow[j];
    }
  }
  return Tensor::wrap(make_result({m, n}, std::move(out), {a.node(), b.node()},
                                  [m, k, n](detail::Node& self) {
    auto& pa = *self.parents[0];
    auto& pb = *self.parents[1];
    const real* g = self.grad.data();
    if (pa.requires_grad) {
      // dA = G · Bᵀ
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t p = 0; p < k; ++p) {
          const real* brow = pb.value.data() + p * n;
          const real* grow = g + i * n;
          real acc = 0;
          for (std::size_t j = 0; j < n; ++j) acc += grow[j] * brow[j];
          pa.grad[i * k + p] += acc;
        }
      }
    }
    if (pb.requires_grad) {
      // dB = Aᵀ · G
      for (std::size_t i = 0; i < m; ++i) {
        const real* grow = g + i * n;
        for (std::size_t p = 0; p < k; ++p) {
          const real s = pa.value[i * k + p];
          if (s == real{0}) continue;
          real* dst = pb.grad.data() + p * n;
          for (std::size_t j = 0; j < n; ++j) dst[j] += s * grow[j];
        }
      }
    }
  }));
}

Tensor add(const Tensor& a, const Tensor& b) { return binary(a, b, BinaryOp::add, "add"); }
Tensor sub(const Tensor& a, const Tensor& b) { return binary(a, b, BinaryOp::sub, "sub"); }
Tensor mul(const Tensor& a, const Tensor& b) { return binary(a, b, BinaryOp::mul, "mul"); }

Tensor scale(const Tensor& a, real factor) {
  return unary(
      a, "scale", [factor](real x) { return x * factor; },
      [factor](real, real) { return factor; });
}

Tensor add_scalar(const Tensor& a, real value) {
  return unary(
      a, "add_scalar", [value](real x) { return x + value; }, [](real, real) { return real{1}; });
}

Tensor relu(const Tensor& a) {
  return unary(
      a, "relu",
      [](real x) {
        detail::record_branch(x > 0);
        return x > 0 ? x : real{0};
      },
      [](real x, real) { return x > 0 ? real{1} : real{0}; });
}

Tensor sigmoid(const Tensor& a) {
  return unary(
      a, "sigmoid",
      [](real x) {
        // Split by sign so exp never overflows.
        if (x >= 0) return real{1} / (real{1} + std::exp(-x));
        const real e = std::exp(x);
        return e / (real{1} + e);
      },
      [](real, real s) { return s * (real{1} - s); });
}

Tensor abs(const Tensor& a) {
  return unary(
      a, "abs",
      [](real x) {
        detail::record_branch(x >= 0);
        return std::abs(x);
      },
      [](real x, real) { return x > 0 ? real{1} : (x < 0 ? real{-1} : real{0}); });
}

Tensor sum(const Tensor& a) {
  require_defined(a, "sum");
  const auto& av = a.node()->value;
  real total = 0;
  for (real x : av) total += x;
  Shape shape(a.rank(), 1);
  return Tensor::wrap(make_result(shape, {total}, {a.node()}, [](detail::Node& self) {
    auto& p = *self.parents[0];
    const real g = self.grad[0];
    for (real& x : p.grad) x += g;
  }));
}

Tensor sum(const Tensor& a, std::size_t axis) {
  require_defined(a, "sum");
  if (axis >= a.rank()) {
    throw DimensionError("sum: axis " + std::to_string(axis) + " out of range for shape " +
                         to_string(a.shape()));
  }
  const Shape& in = a.shape();
  std::size_t outer = 1;
  for (std::size_t d = 0; d < axis; ++d) outer *= in[d];
  const std::size_t extent = in[axis];
  std::size_t inner = 1;
  for (std::size_t d = axis + 1; d < in.size(); ++d) inner *= in[d];
  Shape out_shape = in;
  out_shape[axis] = 1;
  const auto& av = a.node()->value;
  std::vector<real> out(outer * inner, real{0});
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t e = 0; e < extent; ++e) {
      const real* src = av.data() + (o * extent + e) * inner;
      real* dst = out.data() + o * inner;
      for (std::size_t i = 0; i < inner; ++i) dst[i] += src[i];
    }
  }
  return Tensor::wrap(make_result(out_shape, std::move(out), {a.node()},
                                  [outer, extent, inner](detail::Node& self) {
    auto& p = *self.parents[0];
    for (std::size_t o = 0; o < outer; ++o) {
      for (std::size_t e = 0; e < extent; ++e) {
        real* dst = p.grad.data() + (o * extent + e) * inner;
        const real* g = self.grad.data() + o * inner;
        for (std::size_t i = 0; i < inner; ++i) dst[i] += g[i];
      }
    }
  }));
}

Tensor mean(const Tensor& a) {
  require_defined(a, "mean");
  return scale(sum(a), real{1} / static_cast<real>(a.numel()));
}

Tensor mean(const Tensor& a, std::size_t axis) {
  require_defined(a, "mean");
  if (axis >= a.rank()) {
    throw DimensionError("mean: axis " + std::to_string(axis) + " out of range for shape " +
                         to_string(a.shape()));
  }
  return scale(sum(a, axis), real{1} / static_cast<real>(a.dim(axis)));
}

Tensor softmax_cross_entropy(const Tensor& logits, std::size_t label) {
  require_defined(logits, "softmax_cross_entropy");
  const auto& z = logits.node()->value;
  if (label >= z.size()) {
    throw IndexError("softmax_cross_entropy: label " + std::to_string(label) + " out of range for " +
                     std::to_string(z.size()) + " classes");
  }
  const real top = *std::max_element(z.begin(), z.end());
  auto probs = std::make_shared<std::vector<real>>(z.size());
  real denom = 0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    (*probs)[i] = std::exp(z[i] - top);
    denom += (*probs)[i];
  }
  for (real& p : *probs) p /= denom;
  const real loss = std::log(denom) - (z[label] - top);
  return Tensor::wrap(make_result({1}, {loss}, {logits.node()}, [probs, label](detail::Node& self) {
    auto& p = *self.parents[0];
    const real g = self.grad[0];
    for (std::size_t i = 0; i < probs->size(); ++i) {
      p.grad[i] += g * ((*probs)[i] - (i == label ? real{1} : real{0}));
    }
  }));
}

Tensor squared_l2_distance(const Tensor& a, const Tensor& b) {
  require_defined(a, "squared_l2_distance");
  require_defined(b, "squared_l2_distance");
  if (a.shape() != b.shape()) {
    throw DimensionError("squared_l2_distance: shape mismatch " + to_string(a.shape()) + " vs " +
                         to_string(b.shape()));
  }
  const auto& av = a.node()->value;
  const auto& bv = b.node()->value;
  real total = 0;
  for (std::size_t i = 0; i < av.size(); ++i) {
    const real d = av[i] - bv[i];
    total += d * d;
  }
  return Tensor::wrap(make_result({1}, {total}, {a.node(), b.node()}, [](detail::Node& self) {
    auto& pa = *self.parents[0];
    auto& pb = *self.parents[1];
    const real g = self.grad[0];
    for (std::size_t i = 0; i < pa.value.size(); ++i) {
      const real d = 2 * (pa.value[i] - pb.value[i]) * g;
      if (pa.requires_grad) pa.grad[i] += d;
      if (pb.requires_grad) pb.grad[i] -= d;
    }
  }));
}

Tensor gather_rows(const Tensor& a, std::span<const std::size_t> rows) {
  require_defined(a, "gather_rows");
  if (a.rank() != 2) throw DimensionError("gather_rows needs a rank-2 tensor, got " + to_string(a.shape()));
  if (rows.empty()) throw DimensionError("gather_rows: empty row selection");
  const std::size_t n = a.dim(0);
  const std::size_t cols = a.dim(1);
  auto index = std::make_shared<std::vector<std::size_t>>(rows.begin(), rows.end());
  std::vector<real> out(index->size() * cols);
  const auto& av = a.node()->value;
  for (std::size_t r = 0; r < index->size(); ++r) {
    const std::size_t src = (*index)[r];
    if (src >= n) throw IndexError("gather_rows: row " + std::to_string(src) + " out of range");
    std::copy_n(av.begin() + static_cast<std::ptrdiff_t>(src * cols), cols,
                out.begin() + static_cast<std::ptrdiff_t>(r * cols));
  }
  return Tensor::wrap(make_result({index->size(), cols}, std::move(out), {a.node()},
                                  [index, cols](detail::Node& self) {
    auto& p = *self.parents[0];
    for (std::size_t r = 0; r < index->size(); ++r) {
      real* dst = p.grad.data() + (*index)[r] * cols;
      const real* g = self.grad.data() + r * cols;
      for (std::size_t c = 0; c < cols; ++c) dst[c] += g[c];
    }
  }));
}

Tensor concat_cols(const Tensor& a, const Tensor& b) {
  require_defined(a, "concat_cols");
  require_defined(b, "concat_cols");
  if (a.rank() != 2 || b.rank() != 2 || a.dim(0) != b.dim(0)) {
    throw DimensionError("concat_cols: incompatible shapes " + to_string(a.shape()) + " and " +
                         to_string(b.shape()));
  }
  const std::size_t rows = a.dim(0);
  const std::size_t ca = a.dim(1);
  const std::size_t cb = b.dim(1);
  std::vector<real> out(rows * (ca + cb));
  const auto& av = a.node()->value;
  const auto& bv = b.node()->value;
  for (std::size_t r = 0; r < rows; ++r) {
    std::copy_n(av.begin() + static_cast<std::ptrdiff_t>(r * ca), ca,
                out.begin() + static_cast<std::ptrdiff_t>(r * (ca + cb)));
    std::copy_n(bv.begin() + static_cast<std::ptrdiff_t>(r * cb), cb,
                out.begin() + static_cast<std::ptrdiff_t>(r * (ca + cb) + ca));
  }
  return Tensor::wrap(make_result({rows, ca + cb}, std::move(out), {a.node(), b.node()},
                                  [rows, ca, cb](detail::Node& self) {
    auto& pa = *self.parents[0];
    auto& pb = *self.parents[1];
    for (std::size_t r = 0; r < rows; ++r) {
      const real* g = self.grad.data() + r * (ca + cb);
      if (pa.requires_grad) {
        for (std::size_t c = 0; c < ca; ++c) pa.grad[r * ca + c] += g[c];
      }
      if (pb.requires_grad) {
        for (std::size_t c = 0; c < cb; ++c) pb.grad[r * cb + c] += g[ca + c];
      }
    }
  }));
}

Tensor scatter_symmetric(const Tensor& values,
                         std::span<const std::pair<std::size_t, std::size_t>> pairs,
                         std::size_t n) {
  require_defined(values, "scatter_symmetric");
  if (values.numel() != pairs.size()) {
    throw DimensionError("scatter_symmetric: " + std::to_string(values.numel()) + " values for " +
                         std::to_string(pairs.size()) + " pairs");
  }
  auto index = std::make_shared<std::vector<std::pair<std::size_t, std::size_t>>>(pairs.begin(),
                                                                                  pairs.end());
  std::vector<real> out(n * n, real{0});
  const auto& v = values.node()->value;
  for (std::size_t e = 0; e < index->size(); ++e) {
    const auto [u, w] = (*index)[e];
    if (u >= n || w >= n) throw IndexError("scatter_symmetric: endpoint out of range");
    out[u * n + w] = v[e];
    out[w * n + u] = v[e];
  }
  return Tensor::wrap(make_result({n, n}, std::move(out), {values.node()},
                                  [index, n](detail::Node& self) {
    auto& p = *self.parents[0];
    for (std::size_t e = 0; e < index->size(); ++e) {
      const auto [u, w] = (*index)[e];
      p.grad[e] += self.grad[u * n + w];
      if (u != w) p.grad[e] += self.grad[w * n + u];
    }
  }));
}

ADVCA_NS_END
}  // namespace advca
