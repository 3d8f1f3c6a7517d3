#pragma once

// Central finite-difference oracle for reverse-mode gradients. Independent of
// the backward pass: it only perturbs leaf values and re-runs the forward.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "advca/tensor.hpp"

namespace advca::testing {

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  // Coordinates where the perturbation crossed a kink (relu/abs/threshold) at
  // every step size tried; finite differences are meaningless there.
  std::size_t skipped_kinks = 0;
  std::string worst;
};

inline double relative_error(double analytic, double numeric) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
  return std::abs(analytic - numeric) / denom;
}

// Evaluates `loss` (which must rebuild its tape from the current leaf values)
// and compares d loss / d leaf against central differences with the given
// step. If the branch signature at x ± h differs from x, the step is shrunk
// (down to min_step) so the difference stays on one smooth piece.
inline GradCheckResult check_gradients(const std::function<Tensor()>& loss,
                                       std::vector<std::pair<std::string, Tensor>> leaves,
                                       double step = 1e-3, double min_step = 1e-7) {
  for (auto& [name, leaf] : leaves) leaf.zero_grad();
  loss().backward();
  std::vector<std::vector<double>> analytic;
  for (auto& [name, leaf] : leaves) {
    analytic.emplace_back(leaf.grad().begin(), leaf.grad().end());
  }

  auto evaluate = [&](std::uint64_t& signature) {
    NoGradGuard no_grad;
    BranchProbe probe;
    const double value = loss().item();
    signature = probe.signature();
    return value;
  };

  GradCheckResult result;
  std::uint64_t base_signature = 0;
  evaluate(base_signature);
  for (std::size_t li = 0; li < leaves.size(); ++li) {
    auto values = leaves[li].second.mutable_data();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const real original = values[i];
      bool done = false;
      for (double h = step; h >= min_step && !done; h /= 10.0) {
        std::uint64_t sig_plus = 0;
        std::uint64_t sig_minus = 0;
        values[i] = static_cast<real>(original + h);
        const double plus = evaluate(sig_plus);
        values[i] = static_cast<real>(original - h);
        const double minus = evaluate(sig_minus);
        values[i] = original;
        if (sig_plus != base_signature || sig_minus != base_signature) continue;
        const double numeric = (plus - minus) / (2.0 * h);
        const double err = relative_error(analytic[li][i], numeric);
        if (err > result.max_rel_error) {
          result.max_rel_error = err;
          result.worst = leaves[li].first + "[" + std::to_string(i) + "] analytic=" +
                         std::to_string(analytic[li][i]) + " numeric=" + std::to_string(numeric);
        }
        ++result.checked;
        done = true;
      }
      if (!done) ++result.skipped_kinks;
    }
  }
  return result;
}

}  // namespace advca::testing
