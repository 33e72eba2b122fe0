#pragma once

#include <span>
#include <vector>

#include "har/nn/autograd.hpp"
#include "har/nn/ops.hpp"

namespace har::losses {

using nn::Tensor;
using nn::Var;

/// alpha/beta/gamma mix the loss terms, margin is the contrastive delta.
struct LossWeights {
  double alpha = 0.0;
  double beta = 0.0;
  double gamma = 0.0;
  double margin = 1.0;

  /// Throws std::invalid_argument unless weights are in [0, 1], alpha + beta
  /// (+ gamma when with_gamma) <= 1 and margin > 0.
  void validate(bool with_gamma) const;
  double reconstruction_weight(bool with_gamma) const { return 1.0 - alpha - beta - (with_gamma ? gamma : 0.0); }
};

/// Neighbour lists into the rows of a constant pool of inputs.
using NeighborLists = std::vector<std::vector<std::size_t>>;

/// ||x_i - recon_i||^2 per row, shape [N].
template <typename T> Var<T> reconstruction_terms(const Var<T>& x, const Var<T>& recon);
/// Mean over rows of reconstruction_terms.
template <typename T> Var<T> reconstruction_loss(const Var<T>& x, const Var<T>& recon);

/// Euclidean distance per row, shape [N]. Gradient is 0 where the rows coincide.
template <typename T> Var<T> similarity_distance(const Var<T>& a, const Var<T>& b);

/// Per pair: y = 1 -> D^2 / 2, y = 0 -> max(0, margin - D)^2 / 2. Shape [N].
/// Throws std::invalid_argument on labels outside {0, 1}.
template <typename T>
Var<T> contrastive_terms(const Var<T>& a, const Var<T>& b, std::span<const int> same, T margin);
/// Sum of contrastive_terms over the batch.
template <typename T>
Var<T> contrastive_loss(const Var<T>& a, const Var<T>& b, std::span<const int> same, T margin);

/// alpha * contrastive(activity heads) + beta * contrastive(person heads).
template <typename T>
Var<T> multitask_contrastive(const Var<T>& act_a, const Var<T>& act_b, const Var<T>& pers_a, const Var<T>& pers_b,
                             std::span<const int> same_act, std::span<const int> same_pers, const LossWeights& w);

/// Per row i: (1/|L_i|) sum over p in L_i of ||pool_p - recon_i||^2, shape [N].
/// lists[i] indexes rows of pool. Throws std::invalid_argument on an empty list.
template <typename T>
Var<T> consistency_terms(const Var<T>& recon, const Tensor<T>& pool, const NeighborLists& lists);

/// Per-sample (1 - a - b) ae + a tc + b fc, shape [N].
template <typename T>
Var<T> self_supervised_terms(const Var<T>& x, const Var<T>& recon, const Tensor<T>& pool,
                             const NeighborLists& temporal, const NeighborLists& feature, const LossWeights& w);
/// Batch mean of self_supervised_terms, so alpha = beta = 0 is exactly reconstruction_loss.
template <typename T>
Var<T> self_supervised_loss(const Var<T>& x, const Var<T>& recon, const Tensor<T>& pool,
                            const NeighborLists& temporal, const NeighborLists& feature, const LossWeights& w);

/// One side of a pair batch: inputs, reconstructions and neighbourhoods.
template <typename T>
struct PairSide {
  Var<T> x;
  Var<T> recon;
  Var<T> latent;
  const NeighborLists* temporal = nullptr;
  const NeighborLists* feature = nullptr;
};

/// Summed over pairs: (1-a-b-g)(ae_a + ae_b) + a(tc_a + tc_b) + b(fc_a + fc_b) + g contrastive(latent_a, latent_b).
template <typename T>
Var<T> weakly_self_supervised_loss(const PairSide<T>& a, const PairSide<T>& b, const Tensor<T>& pool,
                                   std::span<const int> same_act, const LossWeights& w);

/// Mean softmax cross-entropy.
template <typename T> Var<T> cross_entropy(const Var<T>& logits, std::span<const int> labels);

}  // namespace har::losses
