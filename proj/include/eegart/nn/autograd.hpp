#pragma once

#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "eegart/nn/tensor.hpp"

namespace eegart::nn {

template <typename T>
struct Node {
  Tensor<T> value;
  Tensor<T> grad;
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  // Reads this->grad and accumulates into the parents' grads.
  std::function<void(Node&)> backward_fn;

  Tensor<T>& ensure_grad() {
    if (grad.size() != value.size() || grad.shape() != value.shape()) {
      grad = Tensor<T>(value.shape());
    }
    return grad;
  }
};

namespace detail {
bool& grad_mode_flag();
}

inline bool grad_enabled() { return detail::grad_mode_flag(); }

// Disables graph recording on the current thread for the guard's lifetime.
class NoGradGuard {
 public:
  NoGradGuard() : previous_(detail::grad_mode_flag()) { detail::grad_mode_flag() = false; }
  ~NoGradGuard() { detail::grad_mode_flag() = previous_; }
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

// Shared handle to a graph node. Parameters are leaf Vars with
// requires_grad set; every op returns a fresh Var.
template <typename T>
class Var {
 public:
  Var() = default;
  explicit Var(Tensor<T> value, bool requires_grad = false)
      : node_(std::make_shared<Node<T>>()) {
    node_->value = std::move(value);
    node_->requires_grad = requires_grad;
  }
  explicit Var(std::shared_ptr<Node<T>> node) : node_(std::move(node)) {}

  bool defined() const { return static_cast<bool>(node_); }
  const Tensor<T>& value() const { return node_->value; }
  Tensor<T>& mutable_value() { return node_->value; }
  const Shape& shape() const { return node_->value.shape(); }
  std::size_t dim(std::size_t i) const { return node_->value.dim(i); }
  bool requires_grad() const { return node_->requires_grad; }
  void set_requires_grad(bool on) { node_->requires_grad = on; }

  bool has_grad() const { return node_->grad.size() == node_->value.size() && !node_->value.empty(); }
  const Tensor<T>& grad() const { return node_->grad; }
  Tensor<T>& mutable_grad() { return node_->ensure_grad(); }
  void zero_grad() {
    if (has_grad()) node_->grad.fill(T{0});
  }

  const std::shared_ptr<Node<T>>& node() const { return node_; }

 private:
  std::shared_ptr<Node<T>> node_;
};

// Builds an op output. The backward closure is only attached when graph
// recording is on and at least one input needs a gradient.
template <typename T, typename Fn>
Var<T> make_op(Tensor<T> value, std::vector<Var<T>> inputs, Fn&& backward_fn) {
  bool needs = false;
  if (grad_enabled()) {
    for (const auto& in : inputs) needs = needs || (in.defined() && in.requires_grad());
  }
  Var<T> out(std::move(value), needs);
  if (needs) {
    auto& node = *out.node();
    node.parents.reserve(inputs.size());
    for (auto& in : inputs) node.parents.push_back(in.defined() ? in.node() : nullptr);
    node.backward_fn = std::forward<Fn>(backward_fn);
  }
  return out;
}

// Reverse-mode pass from a scalar. The recorded graph is consumed: calling
// backward twice on the same output is an error, as is calling it on a
// value that was produced without gradient recording.
template <typename T>
void backward(const Var<T>& loss) {
  if (!loss.defined()) throw std::logic_error("backward: undefined tensor");
  auto root = loss.node();
  if (root->value.size() != 1) {
    throw std::invalid_argument("backward: loss must be a scalar, got shape " +
                                shape_str(root->value.shape()));
  }
  if (!root->requires_grad) {
    throw std::logic_error(
        "backward: no recorded graph (forward pass missing, run without gradient "
        "recording, or graph already consumed)");
  }

  std::vector<Node<T>*> order;
  std::vector<std::pair<Node<T>*, std::size_t>> stack{{root.get(), 0}};
  std::unordered_set<Node<T>*> visited{root.get()};
  // Iterative post-order DFS.
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node<T>* p = node->parents[next++].get();
      if (p && p->requires_grad && visited.insert(p).second) {
        stack.push_back({p, 0});
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  root->ensure_grad().fill(T{1});
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node<T>* n = *it;
    if (n->backward_fn) {
      for (auto& p : n->parents)
        if (p && p->requires_grad) p->ensure_grad();
      n->backward_fn(*n);
    }
  }
  for (auto* n : order) {
    if (n->backward_fn) {
      n->backward_fn = nullptr;
      n->parents.clear();
      n->requires_grad = false;
    }
  }
}

}  // namespace eegart::nn
