#include "har/nn/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace har::nn {

template <typename T>
GradCheckReport grad_check(const TensorList<T>& tensors, const std::function<Var<T>()>& loss_fn,
                           const GradCheckOptions& opts) {
  GradCheckReport report;
  for (const auto& t : tensors) {
    if (t.trainable) Var<T>(t.var).clear_grad();
  }
  backward(loss_fn());

  auto eval = [&] {
    NoGradGuard guard;
    return static_cast<double>(loss_fn().value().item());
  };

  for (const auto& t : tensors) {
    if (!t.trainable) continue;
    Var<T> v = t.var;
    GradCheckEntry entry;
    entry.name = t.name;
    const std::size_t n = v.size();
    const std::size_t stride =
        (opts.max_entries_per_tensor == 0 || n <= opts.max_entries_per_tensor) ? 1 : n / opts.max_entries_per_tensor;
    for (std::size_t i = 0; i < n; i += stride) {
      const double analytic = v.has_grad() ? static_cast<double>(v.grad()[i]) : 0.0;
      const T original = v.value()[i];
      v.value()[i] = static_cast<T>(original + opts.step);
      const double up = eval();
      v.value()[i] = static_cast<T>(original - opts.step);
      const double down = eval();
      v.value()[i] = original;
      const double numeric = (up - down) / (2.0 * opts.step);

      const double abs_err = std::abs(analytic - numeric);
      const double denom = std::max({std::abs(analytic), std::abs(numeric), opts.denom_floor});
      entry.max_abs_error = std::max(entry.max_abs_error, abs_err);
      entry.max_rel_error = std::max(entry.max_rel_error, abs_err / denom);
      entry.max_abs_grad = std::max(entry.max_abs_grad, std::abs(analytic));
      if (analytic != 0.0) report.all_analytic_zero = false;
      ++entry.checked;
    }
    report.max_rel_error = std::max(report.max_rel_error, entry.max_rel_error);
    report.max_abs_error = std::max(report.max_abs_error, entry.max_abs_error);
    report.tensors.push_back(std::move(entry));
  }
  return report;
}

template GradCheckReport grad_check(const TensorList<float>&, const std::function<Var<float>()>&,
                                    const GradCheckOptions&);
template GradCheckReport grad_check(const TensorList<double>&, const std::function<Var<double>()>&,
                                    const GradCheckOptions&);

}  // namespace har::nn
