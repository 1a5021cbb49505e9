#include "lsda/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace lsda {
namespace {

float eval_at(const std::function<TensorPtr(const TensorPtr&)>& f,
              const Shape& shape, const std::vector<float>& vals) {
  auto leaf = make_tensor(shape, vals, /*requires_grad=*/true);
  auto loss = f(leaf);
  if (!loss->is_scalar())
    throw ContractError("grad_check: f must return a scalar");
  return loss->value[0];
}

}  // namespace

GradCheckReport grad_check(const std::function<TensorPtr(const TensorPtr&)>& f,
                           const TensorPtr& point, double eps, double tol,
                           const std::function<bool(size_t)>& exclude) {
  const float v1 = eval_at(f, point->shape, point->value);
  const float v2 = eval_at(f, point->shape, point->value);
  if (v1 != v2)
    throw OracleError("grad_check: f is not deterministic (" +
                      std::to_string(v1) + " vs " + std::to_string(v2) + ")");

  auto leaf = make_tensor(point->shape, point->value, /*requires_grad=*/true);
  auto loss = f(leaf);
  auto grads = backward(loss);
  const std::vector<float>& analytic = grads.at(leaf);

  GradCheckReport rep;
  std::vector<float> vals = point->value;
  for (size_t i = 0; i < vals.size(); ++i) {
    if (exclude && exclude(i)) {
      ++rep.excluded;
      continue;
    }
    const float orig = vals[i];
    vals[i] = orig + static_cast<float>(eps);
    const double fp = eval_at(f, point->shape, vals);
    vals[i] = orig - static_cast<float>(eps);
    const double fm = eval_at(f, point->shape, vals);
    vals[i] = orig;
    const double numeric = (fp - fm) / (2.0 * eps);
    const double a = analytic[i];
    const double denom = std::max({std::abs(a), std::abs(numeric), 1e-8});
    rep.max_rel_err = std::max(rep.max_rel_err, std::abs(a - numeric) / denom);
    ++rep.checked;
  }
  rep.pass = rep.max_rel_err <= tol;
  return rep;
}

}  // namespace lsda
