#pragma once

#include <vector>

#include "advca/gnn.hpp"

namespace advca {
ADVCA_NS_BEGIN

// Descent on the accumulated gradients of a parameter group: plain
// p ← p − lr·g, or Adam (β1 = 0.9, β2 = 0.999, ε = 1e-8) when enabled.
// Ascent is done by back-propagating the negated objective.
class Optimizer {
 public:
  Optimizer(ParamList params, real learning_rate, bool adam = false);

  void zero_grad();
  void step();
  const ParamList& params() const { return params_; }
  real learning_rate() const { return lr_; }

 private:
  ParamList params_;
  real lr_;
  bool adam_;
  std::size_t t_ = 0;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
};

ADVCA_NS_END
}  // namespace advca
