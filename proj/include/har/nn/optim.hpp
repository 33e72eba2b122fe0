#pragma once

#include <cstdint>
#include <vector>

#include "har/nn/autograd.hpp"

namespace har::nn {

enum class OptimizerKind { adam, sgd };

template <typename T>
class Optimizer {
 public:
  Optimizer(std::vector<Var<T>> params, double learning_rate);
  virtual ~Optimizer() = default;

  /// Applies one update. Throws if any parameter has no gradient.
  void step();
  void zero_grad();

  double learning_rate() const { return lr_; }
  std::uint64_t steps() const { return t_; }
  virtual OptimizerKind kind() const = 0;

 protected:
  virtual void update(std::size_t index, Tensor<T>& value, const Tensor<T>& grad) = 0;

  std::vector<Var<T>> params_;
  double lr_;
  std::uint64_t t_ = 0;
};

template <typename T>
class Sgd final : public Optimizer<T> {
 public:
  Sgd(std::vector<Var<T>> params, double learning_rate);
  OptimizerKind kind() const override { return OptimizerKind::sgd; }

 protected:
  void update(std::size_t index, Tensor<T>& value, const Tensor<T>& grad) override;
};

struct AdamOptions {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

template <typename T>
class Adam final : public Optimizer<T> {
 public:
  Adam(std::vector<Var<T>> params, AdamOptions opts = {});
  OptimizerKind kind() const override { return OptimizerKind::adam; }

 protected:
  void update(std::size_t index, Tensor<T>& value, const Tensor<T>& grad) override;

 private:
  AdamOptions opts_;
  std::vector<std::vector<double>> m_, v_;
};

}  // namespace har::nn
