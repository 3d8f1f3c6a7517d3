#include "advca/optim.hpp"

#include <cmath>

namespace advca {
ADVCA_NS_BEGIN

Optimizer::Optimizer(ParamList params, real learning_rate, bool adam)
    : params_(std::move(params)), lr_(learning_rate), adam_(adam) {
  if (adam_) {
    for (const auto& p : params_) {
      m_.emplace_back(p.tensor.numel(), 0.0);
      v_.emplace_back(p.tensor.numel(), 0.0);
    }
  }
}

void Optimizer::zero_grad() { zero_grads(params_); }

void Optimizer::step() {
  ++t_;
  const double b1 = 0.9;
  const double b2 = 0.999;
  const double correction1 = 1.0 - std::pow(b1, static_cast<double>(t_));
  const double correction2 = 1.0 - std::pow(b2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    Tensor t = params_[i].tensor;
    auto grad = t.grad();
    if (grad.empty()) continue;
    auto value = t.mutable_data();
    if (!adam_) {
      for (std::size_t k = 0; k < value.size(); ++k) value[k] -= lr_ * grad[k];
      continue;
    }
    auto& m = m_[i];
    auto& v = v_[i];
    for (std::size_t k = 0; k < value.size(); ++k) {
      const double g = grad[k];
      m[k] = b1 * m[k] + (1.0 - b1) * g;
      v[k] = b2 * v[k] + (1.0 - b2) * g * g;
      const double update = (m[k] / correction1) / (std::sqrt(v[k] / correction2) + 1e-8);
      value[k] -= static_cast<real>(lr_ * update);
    }
  }
}

ADVCA_NS_END
}  // namespace advca
