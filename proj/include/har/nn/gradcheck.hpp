#pragma once

#include <functional>
#include <string>
#include <vector>

#include "har/nn/layers.hpp"

namespace har::nn {

struct GradCheckOptions {
  double step = 1e-3;  // central difference half-width
  // Relative error is |a - n| / max(|a|, |n|, denom_floor); the floor keeps
  // near-zero gradients from turning rounding noise into large ratios.
  double denom_floor = 1e-4;
  std::size_t max_entries_per_tensor = 0;  // 0 checks every entry
};

struct GradCheckEntry {
  std::string name;
  double max_rel_error = 0.0;
  double max_abs_error = 0.0;
  double max_abs_grad = 0.0;
  std::size_t checked = 0;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> tensors;
  double max_rel_error = 0.0;
  double max_abs_error = 0.0;
  bool all_analytic_zero = true;
};

/// Compares backward() gradients with central finite differences for every
/// trainable tensor. loss_fn must rebuild the graph deterministically on
/// every call (reseed any dropout rng inside it).
template <typename T>
GradCheckReport grad_check(const TensorList<T>& tensors, const std::function<Var<T>()>& loss_fn,
                           const GradCheckOptions& opts = {});

}  // namespace har::nn
