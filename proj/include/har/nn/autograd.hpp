#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "har/nn/tensor.hpp"

namespace har::nn {

template <typename T>
struct Node {
  Tensor<T> value;
  Tensor<T> grad;  // empty until something flows into it
  bool requires_grad = false;
  const char* op = "leaf";
  std::vector<std::shared_ptr<Node>> parents;
  // Reads this->grad and accumulates into the parents that require grad.
  std::function<void(Node&)> backward_fn;

  Tensor<T>& ensure_grad() {
    if (grad.empty()) grad = Tensor<T>(value.shape());
    return grad;
  }
  void accumulate(std::span<const T> g) {
    auto& dst = ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) dst[i] += g[i];
  }
};

/// Handle to a node of the computation graph. Copies share the node.
template <typename T>
class Var {
 public:
  Var() = default;
  explicit Var(std::shared_ptr<Node<T>> node) : node_(std::move(node)) {}

  static Var constant(Tensor<T> value) {
    auto n = std::make_shared<Node<T>>();
    n->value = std::move(value);
    return Var(std::move(n));
  }
  static Var parameter(Tensor<T> value) {
    auto n = std::make_shared<Node<T>>();
    n->value = std::move(value);
    n->requires_grad = true;
    n->op = "parameter";
    return Var(std::move(n));
  }

  bool valid() const noexcept { return static_cast<bool>(node_); }
  const Tensor<T>& value() const { return node_->value; }
  Tensor<T>& value() { return node_->value; }
  const Shape& shape() const { return node_->value.shape(); }
  std::size_t size() const { return node_->value.size(); }
  bool requires_grad() const { return node_->requires_grad; }
  bool has_grad() const { return !node_->grad.empty(); }
  const Tensor<T>& grad() const { return node_->grad; }
  Tensor<T>& grad() { return node_->grad; }
  void clear_grad() { node_->grad = Tensor<T>(); }
  const char* op() const { return node_->op; }

  Node<T>* node() const noexcept { return node_.get(); }
  const std::shared_ptr<Node<T>>& ptr() const noexcept { return node_; }
  bool same_node(const Var& other) const noexcept { return node_ == other.node_; }

 private:
  std::shared_ptr<Node<T>> node_;
};

/// True unless a NoGradGuard is alive on this thread.
bool grad_enabled() noexcept;

/// Disables graph recording on the current thread for its lifetime.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

/// Wraps an op output. The backward closure is kept only when some parent
/// requires grad and recording is enabled.
template <typename T>
Var<T> make_result(Tensor<T> value, std::vector<Var<T>> parents, std::function<void(Node<T>&)> backward,
                   const char* op);

/// Reverse-mode sweep from a scalar node. Gradients accumulate into every
/// reachable node that requires grad.
template <typename T>
void backward(const Var<T>& loss);

}  // namespace har::nn
