#pragma once

#include <functional>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "lsda/errors.hpp"

namespace lsda {

using Shape = std::vector<int>;

class Node;
using TensorPtr = std::shared_ptr<Node>;

// One node of the differentiation graph. Leaves hold inputs/parameters;
// interior nodes remember their parents and how to push gradients back.
class Node {
 public:
  Shape shape;
  std::vector<float> value;
  std::vector<float> grad;  // populated by the most recent backward() pass
  bool requires_grad = false;  // leaf parameter
  bool marked = false;         // interior node whose gradient is wanted
  std::string name;
  std::vector<TensorPtr> parents;
  // backprop(self_grad, parent_grad_buffers): accumulate into parents.
  std::function<void(const float* gout, const std::vector<float*>& gparents)>
      backprop;

  size_t numel() const {
    size_t n = 1;
    for (int d : shape) n *= static_cast<size_t>(d);
    return n;
  }
  bool is_scalar() const { return numel() == 1; }
};

TensorPtr make_tensor(Shape shape, float fill = 0.f, bool requires_grad = false);
TensorPtr make_tensor(Shape shape, std::vector<float> data,
                      bool requires_grad = false);

size_t shape_numel(const Shape& s);
std::string shape_str(const Shape& s);

// Throws NumericError if any value is non-finite.
void check_finite(const Node& t, const std::string& context);

// Gradients of one backward() pass, keyed by node identity.
class GradientMap {
 public:
  void insert(const Node* node, std::vector<float> g) {
    grads_[node] = std::move(g);
  }
  bool contains(const TensorPtr& t) const { return grads_.count(t.get()) > 0; }
  // Throws ContractError if the node has no entry (unreachable or unmarked).
  const std::vector<float>& at(const TensorPtr& t) const;
  size_t size() const { return grads_.size(); }
  const std::unordered_map<const Node*, std::vector<float>>& entries() const {
    return grads_;
  }

 private:
  std::unordered_map<const Node*, std::vector<float>> grads_;
};

// Reverse-mode sweep from a scalar loss. Returns gradients for every
// reachable requires_grad leaf and every reachable marked node; nodes the
// loss does not depend on get no entry. Also mirrors each entry into the
// node's `grad` field.
GradientMap backward(const TensorPtr& loss,
                     const std::vector<TensorPtr>& extra_marked = {});

}  // namespace lsda
