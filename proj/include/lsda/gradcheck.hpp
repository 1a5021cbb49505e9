#pragma once

#include <functional>

#include "lsda/tensor.hpp"

namespace lsda {

struct GradCheckReport {
  double max_rel_err = 0.0;
  bool pass = false;
  size_t checked = 0;
  size_t excluded = 0;
};

// Central-difference check of reverse-mode gradients. `f` must build a fresh
// scalar-loss graph from the given leaf; it is evaluated twice at `point` and
// an OracleError is thrown if the two values differ (non-deterministic f).
// Relative error uses denominator max(|analytic|, |numeric|, 1e-8).
// `exclude(i)` skips coordinate i (non-differentiable points, e.g. ReLU kinks).
GradCheckReport grad_check(
    const std::function<TensorPtr(const TensorPtr&)>& f, const TensorPtr& point,
    double eps, double tol,
    const std::function<bool(size_t)>& exclude = nullptr);

}  // namespace lsda
