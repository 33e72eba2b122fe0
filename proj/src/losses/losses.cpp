#include "har/losses/losses.hpp"

#include <stdexcept>
#include <string>

namespace har::losses {

using nn::Node;
using nn::Shape;
using nn::ShapeError;

void LossWeights::validate(bool with_gamma) const {
  const double g = with_gamma ? gamma : 0.0;
  for (double v : {alpha, beta, g}) {
    if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument("loss weights must lie in [0, 1]");
  }
  if (alpha + beta + g > 1.0 + 1e-12) {
    throw std::invalid_argument(std::string("loss weights: alpha + beta") + (with_gamma ? " + gamma" : "") +
                                " = " + std::to_string(alpha + beta + g) + " exceeds 1");
  }
  if (!(margin > 0.0)) throw std::invalid_argument("contrastive margin must be > 0");
}

namespace {

template <typename T>
void require_same(const char* what, const Var<T>& a, const Var<T>& b) {
  if (a.shape() != b.shape() || a.shape().size() != 2) {
    throw ShapeError(std::string(what) + ": expected two equal [N,D] shapes, got " + nn::shape_string(a.shape()) +
                     " and " + nn::shape_string(b.shape()));
  }
}

template <typename T>
Tensor<T> label_mask(std::span<const int> labels, std::size_t n, bool positive) {
  if (labels.size() != n) {
    throw std::invalid_argument("contrastive: " + std::to_string(labels.size()) + " pair labels for " +
                                std::to_string(n) + " pairs");
  }
  Tensor<T> m(Shape{n});
  for (std::size_t i = 0; i < n; ++i) {
    if (labels[i] != 0 && labels[i] != 1) {
      throw std::invalid_argument("contrastive: pair label must be 0 or 1, got " + std::to_string(labels[i]));
    }
    m[i] = (labels[i] == 1) == positive ? T(1) : T(0);
  }
  return m;
}

}  // namespace

template <typename T>
Var<T> reconstruction_terms(const Var<T>& x, const Var<T>& recon) {
  require_same("reconstruction loss", x, recon);
  return nn::row_sum(nn::square(nn::sub(x, recon)));
}

template <typename T>
Var<T> reconstruction_loss(const Var<T>& x, const Var<T>& recon) {
  return nn::mean(reconstruction_terms(x, recon));
}

template <typename T>
Var<T> similarity_distance(const Var<T>& a, const Var<T>& b) {
  require_same("similarity distance", a, b);
  return nn::row_l2_norm(nn::sub(a, b));
}

template <typename T>
Var<T> contrastive_terms(const Var<T>& a, const Var<T>& b, std::span<const int> same, T margin) {
  require_same("contrastive loss", a, b);
  if (!(margin > T(0))) throw std::invalid_argument("contrastive margin must be > 0");
  const std::size_t n = a.shape()[0];
  auto pos = Var<T>::constant(label_mask<T>(same, n, true));
  auto neg = Var<T>::constant(label_mask<T>(same, n, false));
  auto diff = nn::sub(a, b);
  // D^2 / 2 written through the squared norm keeps the positive term smooth at D = 0.
  auto pull = nn::scale(nn::row_sum(nn::square(diff)), T(0.5));
  auto dist = nn::row_l2_norm(diff);
  auto push = nn::scale(nn::square(nn::relu(nn::add_scalar(nn::scale(dist, T(-1)), margin))), T(0.5));
  return nn::add(nn::mul(pos, pull), nn::mul(neg, push));
}

template <typename T>
Var<T> contrastive_loss(const Var<T>& a, const Var<T>& b, std::span<const int> same, T margin) {
  return nn::sum(contrastive_terms(a, b, same, margin));
}

template <typename T>
Var<T> multitask_contrastive(const Var<T>& act_a, const Var<T>& act_b, const Var<T>& pers_a, const Var<T>& pers_b,
                             std::span<const int> same_act, std::span<const int> same_pers, const LossWeights& w) {
  if (w.alpha < 0 || w.beta < 0 || !(w.margin > 0)) throw std::invalid_argument("multitask weights invalid");
  const T m = static_cast<T>(w.margin);
  return nn::add(nn::scale(contrastive_loss(act_a, act_b, same_act, m), static_cast<T>(w.alpha)),
                 nn::scale(contrastive_loss(pers_a, pers_b, same_pers, m), static_cast<T>(w.beta)));
}

template <typename T>
Var<T> consistency_terms(const Var<T>& recon, const Tensor<T>& pool, const NeighborLists& lists) {
  if (recon.shape().size() != 2 || pool.rank() != 2 || pool.dim(1) != recon.shape()[1]) {
    throw ShapeError("consistency loss: reconstruction " + nn::shape_string(recon.shape()) + " vs pool " +
                     nn::shape_string(pool.shape()));
  }
  const std::size_t n = recon.shape()[0], d = recon.shape()[1], rows = pool.dim(0);
  if (lists.size() != n) {
    throw std::invalid_argument("consistency loss: " + std::to_string(lists.size()) + " neighbour lists for " +
                                std::to_string(n) + " samples");
  }
  Tensor<T> out(Shape{n});
  // Neighbour means are all the backward pass needs: d/dr (1/|L|) sum ||x_p - r||^2 = 2 (r - mean).
  Tensor<T> means(Shape{n, d});
  for (std::size_t i = 0; i < n; ++i) {
    const auto& l = lists[i];
    if (l.empty()) throw std::invalid_argument("consistency loss: empty neighbourhood for sample " + std::to_string(i));
    double acc = 0.0;
    for (std::size_t p : l) {
      if (p >= rows) throw std::out_of_range("consistency loss: neighbour index " + std::to_string(p) + " out of range");
      for (std::size_t j = 0; j < d; ++j) {
        const double diff = static_cast<double>(pool[p * d + j]) - static_cast<double>(recon.value()[i * d + j]);
        acc += diff * diff;
        means[i * d + j] += pool[p * d + j];
      }
    }
    const T inv = T(1) / static_cast<T>(l.size());
    for (std::size_t j = 0; j < d; ++j) means[i * d + j] *= inv;
    out[i] = static_cast<T>(acc / static_cast<double>(l.size()));
  }
  return nn::make_result<T>(std::move(out), {recon},
                            [means = std::move(means), n, d](Node<T>& self) {
                              auto& p = *self.parents[0];
                              auto& g = p.ensure_grad();
                              for (std::size_t i = 0; i < n; ++i) {
                                const T gi = T(2) * self.grad[i];
                                for (std::size_t j = 0; j < d; ++j) {
                                  g[i * d + j] += gi * (p.value[i * d + j] - means[i * d + j]);
                                }
                              }
                            },
                            "consistency");
}

template <typename T>
Var<T> self_supervised_terms(const Var<T>& x, const Var<T>& recon, const Tensor<T>& pool,
                             const NeighborLists& temporal, const NeighborLists& feature, const LossWeights& w) {
  w.validate(false);
  auto total = nn::scale(reconstruction_terms(x, recon), static_cast<T>(w.reconstruction_weight(false)));
  if (w.alpha > 0) total = nn::add(total, nn::scale(consistency_terms(recon, pool, temporal), static_cast<T>(w.alpha)));
  if (w.beta > 0) total = nn::add(total, nn::scale(consistency_terms(recon, pool, feature), static_cast<T>(w.beta)));
  return total;
}

template <typename T>
Var<T> self_supervised_loss(const Var<T>& x, const Var<T>& recon, const Tensor<T>& pool,
                            const NeighborLists& temporal, const NeighborLists& feature, const LossWeights& w) {
  return nn::mean(self_supervised_terms(x, recon, pool, temporal, feature, w));
}

template <typename T>
Var<T> weakly_self_supervised_loss(const PairSide<T>& a, const PairSide<T>& b, const Tensor<T>& pool,
                                   std::span<const int> same_act, const LossWeights& w) {
  w.validate(true);
  const T rw = static_cast<T>(w.reconstruction_weight(true));
  auto side = [&](const PairSide<T>& s) {
    auto t = nn::scale(reconstruction_terms(s.x, s.recon), rw);
    if (w.alpha > 0) t = nn::add(t, nn::scale(consistency_terms(s.recon, pool, *s.temporal), static_cast<T>(w.alpha)));
    if (w.beta > 0) t = nn::add(t, nn::scale(consistency_terms(s.recon, pool, *s.feature), static_cast<T>(w.beta)));
    return t;
  };
  auto per_pair = nn::add(side(a), side(b));
  if (w.gamma > 0) {
    per_pair = nn::add(per_pair, nn::scale(contrastive_terms(a.latent, b.latent, same_act, static_cast<T>(w.margin)),
                                           static_cast<T>(w.gamma)));
  }
  return nn::sum(per_pair);
}

template <typename T>
Var<T> cross_entropy(const Var<T>& logits, std::span<const int> labels) {
  return nn::softmax_cross_entropy(logits, labels);
}

#define HAR_INSTANTIATE_LOSSES(T)                                                                                 \
  template Var<T> reconstruction_terms(const Var<T>&, const Var<T>&);                                            \
  template Var<T> reconstruction_loss(const Var<T>&, const Var<T>&);                                             \
  template Var<T> similarity_distance(const Var<T>&, const Var<T>&);                                             \
  template Var<T> contrastive_terms(const Var<T>&, const Var<T>&, std::span<const int>, T);                      \
  template Var<T> contrastive_loss(const Var<T>&, const Var<T>&, std::span<const int>, T);                       \
  template Var<T> multitask_contrastive(const Var<T>&, const Var<T>&, const Var<T>&, const Var<T>&,              \
                                        std::span<const int>, std::span<const int>, const LossWeights&);         \
  template Var<T> consistency_terms(const Var<T>&, const Tensor<T>&, const NeighborLists&);                      \
  template Var<T> self_supervised_terms(const Var<T>&, const Var<T>&, const Tensor<T>&, const NeighborLists&,    \
                                        const NeighborLists&, const LossWeights&);                               \
  template Var<T> self_supervised_loss(const Var<T>&, const Var<T>&, const Tensor<T>&, const NeighborLists&,     \
                                       const NeighborLists&, const LossWeights&);                                \
  template Var<T> weakly_self_supervised_loss(const PairSide<T>&, const PairSide<T>&, const Tensor<T>&,          \
                                              std::span<const int>, const LossWeights&);                         \
  template Var<T> cross_entropy(const Var<T>&, std::span<const int>);

HAR_INSTANTIATE_LOSSES(float)
HAR_INSTANTIATE_LOSSES(double)

#undef HAR_INSTANTIATE_LOSSES

}  // namespace har::losses
