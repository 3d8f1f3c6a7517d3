#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "advca/errors.hpp"
#include "advca/real.hpp"

namespace advca {
ADVCA_NS_BEGIN

using Shape = std::vector<std::size_t>;

std::string to_string(const Shape& shape);
std::size_t shape_numel(const Shape& shape);

namespace detail {

struct Node {
  Shape shape;
  std::vector<real> value;
  std::vector<real> grad;
  bool requires_grad = false;
  // Creation order; a node is always created after the producers of its inputs,
  // so descending sequence numbers give a valid reverse topological order.
  std::uint64_t seq = 0;
  std::vector<std::shared_ptr<Node>> parents;
  // Reads this node's grad and adds contributions into parents' grads.
  std::function<void(Node&)> backward_fn;

  bool is_leaf() const { return !backward_fn; }
};

void record_branch(bool taken);

}  // namespace detail

// Dense row-major tensor handle. Copies share the underlying storage and
// autodiff node; use clone() for a deep copy.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor ones(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, real value, bool requires_grad = false);
  static Tensor from(Shape shape, std::vector<real> values, bool requires_grad = false);
  static Tensor scalar(real value, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const;
  std::size_t rank() const { return shape().size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t numel() const;

  std::span<const real> data() const;
  // Direct write access; intended for leaves (parameters, inputs).
  std::span<real> mutable_data();
  real item() const;
  real at(std::size_t i, std::size_t j) const;

  bool requires_grad() const;
  void set_requires_grad(bool value);
  bool is_leaf() const;
  // Empty span until the tensor requires grad.
  std::span<const real> grad() const;
  std::span<real> mutable_grad();
  void zero_grad();

  // Reverse-mode sweep from a scalar root. Leaf gradients accumulate across
  // calls until zero_grad().
  void backward() const;

  // Same values, no history, requires_grad = false.
  Tensor detach() const;
  Tensor clone() const;

  const std::shared_ptr<detail::Node>& node() const { return node_; }
  static Tensor wrap(std::shared_ptr<detail::Node> node);

 private:
  std::shared_ptr<detail::Node> node_;
};

// Disables tape recording on this thread for its lifetime. Results of ops
// executed under the guard never require grad.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

bool grad_enabled();

// Collects a signature of every piecewise branch decision (relu sign, abs
// sign, threshold comparisons) made on this thread while alive. Two forward
// evaluations with equal signatures lie on the same smooth piece.
class BranchProbe {
 public:
  BranchProbe();
  ~BranchProbe();
  BranchProbe(const BranchProbe&) = delete;
  BranchProbe& operator=(const BranchProbe&) = delete;

  std::uint64_t signature() const { return hash_; }

 private:
  std::uint64_t hash_;
  std::uint64_t* previous_;
};

Tensor matmul(const Tensor& a, const Tensor& b);

// Elementwise with broadcasting over extent-1 axes (equal rank), or against a
// single-element tensor.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);

Tensor scale(const Tensor& a, real factor);
Tensor add_scalar(const Tensor& a, real value);
Tensor relu(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor abs(const Tensor& a);

// Reductions keep the reduced axis with extent 1.
Tensor sum(const Tensor& a);
Tensor sum(const Tensor& a, std::size_t axis);
Tensor mean(const Tensor& a);
Tensor mean(const Tensor& a, std::size_t axis);

// -log softmax(logits)[label] over all elements of logits.
Tensor softmax_cross_entropy(const Tensor& logits, std::size_t label);
Tensor squared_l2_distance(const Tensor& a, const Tensor& b);

// Rows of a (rank 2) selected by index, in order.
Tensor gather_rows(const Tensor& a, std::span<const std::size_t> rows);
// [a | b] for rank-2 tensors with equal row counts.
Tensor concat_cols(const Tensor& a, const Tensor& b);
// n×n matrix with out[u][v] = out[v][u] = values[e] for pairs[e] = (u, v),
// zero elsewhere. values has one element per pair.
Tensor scatter_symmetric(const Tensor& values,
                         std::span<const std::pair<std::size_t, std::size_t>> pairs,
                         std::size_t n);

inline Tensor operator+(const Tensor& a, const Tensor& b) { return add(a, b); }
inline Tensor operator-(const Tensor& a, const Tensor& b) { return sub(a, b); }
inline Tensor operator*(const Tensor& a, const Tensor& b) { return mul(a, b); }
inline Tensor operator*(const Tensor& a, real s) { return scale(a, s); }
inline Tensor operator*(real s, const Tensor& a) { return scale(a, s); }
inline Tensor operator+(const Tensor& a, real s) { return add_scalar(a, s); }
inline Tensor operator-(const Tensor& a, real s) { return add_scalar(a, -s); }
inline Tensor operator-(real s, const Tensor& a) { return add_scalar(scale(a, -1), s); }

ADVCA_NS_END
}  // namespace advca
