#pragma once

#include <cstddef>
#include <random>
#include <span>

#include "har/nn/autograd.hpp"

namespace har::nn {

// Elementwise, same shapes.
template <typename T> Var<T> add(const Var<T>& a, const Var<T>& b);
template <typename T> Var<T> sub(const Var<T>& a, const Var<T>& b);
template <typename T> Var<T> mul(const Var<T>& a, const Var<T>& b);
template <typename T> Var<T> scale(const Var<T>& a, T s);
template <typename T> Var<T> add_scalar(const Var<T>& a, T s);
template <typename T> Var<T> relu(const Var<T>& a);
template <typename T> Var<T> square(const Var<T>& a);

// Reductions. Accumulation is done in double.
template <typename T> Var<T> sum(const Var<T>& a);
template <typename T> Var<T> mean(const Var<T>& a);
/// [N, D] -> [N], sum over the last dim.
template <typename T> Var<T> row_sum(const Var<T>& a);
/// [N, D] -> [N], Euclidean norm of each row. Gradient at a zero row is zero.
template <typename T> Var<T> row_l2_norm(const Var<T>& a);

/// [N, K] x [K, M] -> [N, M]
template <typename T> Var<T> matmul(const Var<T>& a, const Var<T>& b);
/// [N, M] + bias[M] broadcast over rows.
template <typename T> Var<T> add_bias(const Var<T>& x, const Var<T>& bias);

template <typename T> Var<T> reshape(const Var<T>& a, Shape shape);
/// Stacks along dim 0; trailing dims must agree.
template <typename T> Var<T> concat_rows(const Var<T>& a, const Var<T>& b);
/// Rows [begin, end) along dim 0.
template <typename T> Var<T> slice_rows(const Var<T>& a, std::size_t begin, std::size_t end);

struct Conv1dGeometry {
  std::size_t dilation = 1;
  std::size_t pad_left = 0;
  std::size_t pad_right = 0;
};

/// x[N, C, L], weight[F, C, K], bias[F] -> [N, F, L + pads - dilation*(K-1)], zero padded.
template <typename T>
Var<T> conv1d(const Var<T>& x, const Var<T>& weight, const Var<T>& bias, Conv1dGeometry geom);

/// Batch statistics per feature. x is [N, D] or [N, D, L]; statistics span every axis but D.
/// Writes the biased batch mean/variance into batch_mean/batch_var for running-stat updates.
template <typename T>
Var<T> batch_norm_train(const Var<T>& x, const Var<T>& gamma, const Var<T>& beta, T eps,
                        std::vector<double>* batch_mean = nullptr, std::vector<double>* batch_var = nullptr);

/// Affine normalization with fixed statistics.
template <typename T>
Var<T> batch_norm_eval(const Var<T>& x, const Var<T>& gamma, const Var<T>& beta, const Tensor<T>& running_mean,
                       const Tensor<T>& running_var, T eps);

/// Inverted dropout; rate must lie in [0, 1).
template <typename T> Var<T> dropout(const Var<T>& x, T rate, std::mt19937_64& rng);

/// x[N, C, L] -> [N, C, (L - width) / stride + 1]; the first maximum wins ties.
template <typename T> Var<T> max_pool1d(const Var<T>& x, std::size_t width, std::size_t stride);
/// x[N, C, L] -> [N, C]
template <typename T> Var<T> global_max_pool(const Var<T>& x);

/// Mean over rows of -log softmax(logits)[label], computed with log-sum-exp.
template <typename T> Var<T> softmax_cross_entropy(const Var<T>& logits, std::span<const int> labels);

}  // namespace har::nn
