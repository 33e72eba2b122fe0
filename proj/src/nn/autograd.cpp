#include "har/nn/autograd.hpp"

#include <unordered_set>

namespace har::nn {

namespace {
thread_local bool g_grad_enabled = true;
}

bool grad_enabled() noexcept { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

template <typename T>
Var<T> make_result(Tensor<T> value, std::vector<Var<T>> parents, std::function<void(Node<T>&)> backward,
                   const char* op) {
  auto node = std::make_shared<Node<T>>();
  node->value = std::move(value);
  node->op = op;
  bool needs = false;
  if (g_grad_enabled) {
    for (const auto& p : parents) needs = needs || p.requires_grad();
  }
  if (needs) {
    node->requires_grad = true;
    node->parents.reserve(parents.size());
    for (auto& p : parents) node->parents.push_back(p.ptr());
    node->backward_fn = std::move(backward);
  }
  return Var<T>(std::move(node));
}

template <typename T>
void backward(const Var<T>& loss) {
  if (!loss.valid()) throw std::invalid_argument("backward: empty loss handle");
  if (loss.size() != 1) {
    throw ShapeError(std::string("backward: loss must be scalar, got shape ") + shape_string(loss.shape()) +
                     " from op '" + loss.op() + "'");
  }
  if (!loss.requires_grad()) return;

  // Iterative post-order DFS; reversed it is a topological order.
  std::vector<Node<T>*> order;
  std::unordered_set<Node<T>*> seen;
  std::vector<std::pair<Node<T>*, std::size_t>> stack;
  stack.emplace_back(loss.node(), 0);
  seen.insert(loss.node());
  while (!stack.empty()) {
    auto& [n, next] = stack.back();
    if (next < n->parents.size()) {
      Node<T>* p = n->parents[next++].get();
      if (p->requires_grad && seen.insert(p).second) stack.emplace_back(p, 0);
    } else {
      order.push_back(n);
      stack.pop_back();
    }
  }

  loss.node()->ensure_grad()[0] += T{1};
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node<T>* n = *it;
    if (n->backward_fn && !n->grad.empty()) n->backward_fn(*n);
  }
  // Free intermediate gradients; leaves (parameters) keep theirs.
  for (Node<T>* n : order) {
    if (n->backward_fn) n->grad = Tensor<T>();
  }
}

template Var<float> make_result(Tensor<float>, std::vector<Var<float>>, std::function<void(Node<float>&)>,
                                const char*);
template Var<double> make_result(Tensor<double>, std::vector<Var<double>>, std::function<void(Node<double>&)>,
                                 const char*);
template void backward(const Var<float>&);
template void backward(const Var<double>&);

}  // namespace har::nn
