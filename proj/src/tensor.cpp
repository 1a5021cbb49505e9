#include "lsda/tensor.hpp"

#include <cmath>
#include <sstream>
#include <unordered_set>

namespace lsda {

size_t shape_numel(const Shape& s) {
  size_t n = 1;
  for (int d : s) n *= static_cast<size_t>(d);
  return n;
}

std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << "[";
  for (size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
  os << "]";
  return os.str();
}

TensorPtr make_tensor(Shape shape, float fill, bool requires_grad) {
  auto t = std::make_shared<Node>();
  t->shape = std::move(shape);
  t->value.assign(t->numel(), fill);
  t->requires_grad = requires_grad;
  return t;
}

TensorPtr make_tensor(Shape shape, std::vector<float> data,
                      bool requires_grad) {
  if (shape_numel(shape) != data.size())
    throw DimensionError("make_tensor: data length " +
                         std::to_string(data.size()) +
                         " does not match shape " + shape_str(shape));
  auto t = std::make_shared<Node>();
  t->shape = std::move(shape);
  t->value = std::move(data);
  t->requires_grad = requires_grad;
  return t;
}

void check_finite(const Node& t, const std::string& context) {
  for (float v : t.value)
    if (!std::isfinite(v))
      throw NumericError(context + ": non-finite value in tensor " + t.name);
}

const std::vector<float>& GradientMap::at(const TensorPtr& t) const {
  auto it = grads_.find(t.get());
  if (it == grads_.end())
    throw ContractError("GradientMap: no gradient for node '" + t->name +
                        "' (unreachable from the loss, or not marked)");
  return it->second;
}

GradientMap backward(const TensorPtr& loss,
                     const std::vector<TensorPtr>& extra_marked) {
  if (!loss || !loss->is_scalar())
    throw ContractError("backward: loss must be a scalar tensor");

  // Iterative post-order DFS; graphs are DAGs by construction.
  std::vector<Node*> topo;
  std::unordered_set<Node*> visited;
  {
    std::vector<std::pair<Node*, size_t>> stack{{loss.get(), 0}};
    visited.insert(loss.get());
    while (!stack.empty()) {
      auto& [node, idx] = stack.back();
      if (idx < node->parents.size()) {
        Node* parent = node->parents[idx++].get();
        if (visited.insert(parent).second) stack.push_back({parent, 0});
      } else {
        topo.push_back(node);
        stack.pop_back();
      }
    }
  }

  std::unordered_set<const Node*> marked_set;
  for (const auto& m : extra_marked) marked_set.insert(m.get());

  std::unordered_map<Node*, std::vector<float>> buf;
  buf.reserve(topo.size());
  for (Node* n : topo) buf.emplace(n, std::vector<float>(n->numel(), 0.f));
  buf[loss.get()][0] = 1.f;

  for (auto it = topo.rbegin(); it != topo.rend(); ++it) {
    Node* n = *it;
    if (!n->backprop) continue;
    std::vector<float*> gparents(n->parents.size());
    for (size_t i = 0; i < n->parents.size(); ++i)
      gparents[i] = buf[n->parents[i].get()].data();
    n->backprop(buf[n].data(), gparents);
  }

  GradientMap map;
  for (Node* n : topo) {
    if (n->requires_grad || n->marked || marked_set.count(n)) {
      n->grad = buf[n];
      map.insert(n, std::move(buf[n]));
    }
  }
  return map;
}

}  // namespace lsda
