#pragma once

#include <memory>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "har/nn/autograd.hpp"
#include "har/nn/ops.hpp"

namespace har::nn {

using Rng = std::mt19937_64;

enum class Mode { train, eval };

/// Per-forward state. Dropout draws from rng in train mode.
struct Context {
  Mode mode = Mode::eval;
  Rng* rng = nullptr;

  bool training() const noexcept { return mode == Mode::train; }
};

enum class LayerKind { dense, conv1d, batchnorm1d, relu, maxpool1d, dropout, globalmaxpool };

std::string_view to_string(LayerKind kind);

/// A tensor owned by a model. Parameters are trainable; buffers (BN running
/// statistics) are not, but are still checkpointed.
template <typename T>
struct NamedTensor {
  std::string name;
  Var<T> var;
  bool trainable = true;
};

template <typename T>
using TensorList = std::vector<NamedTensor<T>>;

template <typename T>
std::vector<Var<T>> trainable(const TensorList<T>& tensors) {
  std::vector<Var<T>> out;
  for (const auto& t : tensors) {
    if (t.trainable) out.push_back(t.var);
  }
  return out;
}

template <typename T>
std::size_t parameter_count(const TensorList<T>& tensors) {
  std::size_t n = 0;
  for (const auto& t : tensors) {
    if (t.trainable) n += t.var.size();
  }
  return n;
}

template <typename T>
class Layer {
 public:
  virtual ~Layer() = default;
  virtual LayerKind kind() const = 0;
  virtual Var<T> forward(const Var<T>& x, Context& ctx) = 0;
  virtual void collect(TensorList<T>& /*out*/, const std::string& /*prefix*/) const {}
};

/// x[N, in] -> [N, out]. Weight stored as [in, out].
template <typename T>
class Dense final : public Layer<T> {
 public:
  Dense(std::size_t in, std::size_t out, Rng& rng);
  LayerKind kind() const override { return LayerKind::dense; }
  Var<T> forward(const Var<T>& x, Context& ctx) override;
  void collect(TensorList<T>& out, const std::string& prefix) const override;

  std::size_t in_features() const { return in_; }
  std::size_t out_features() const { return out_; }
  Var<T>& weight() { return weight_; }
  Var<T>& bias() { return bias_; }

 private:
  std::size_t in_, out_;
  Var<T> weight_, bias_;
};

enum class Padding { same, valid };

/// x[N, C, L] -> [N, F, L'] with L' = L for same padding.
template <typename T>
class Conv1d final : public Layer<T> {
 public:
  Conv1d(std::size_t in_channels, std::size_t out_channels, std::size_t kernel, std::size_t dilation,
         Padding padding, Rng& rng);
  LayerKind kind() const override { return LayerKind::conv1d; }
  Var<T> forward(const Var<T>& x, Context& ctx) override;
  void collect(TensorList<T>& out, const std::string& prefix) const override;

  Var<T>& weight() { return weight_; }
  Var<T>& bias() { return bias_; }
  std::size_t kernel() const { return kernel_; }
  std::size_t dilation() const { return dilation_; }

 private:
  std::size_t in_, out_, kernel_, dilation_;
  Padding padding_;
  Var<T> weight_, bias_;
};

/// Normalizes [N, D] or [N, D, L] per feature D. Running statistics move only in train mode.
template <typename T>
class BatchNorm1d final : public Layer<T> {
 public:
  explicit BatchNorm1d(std::size_t features, T momentum = T(0.1), T eps = T(1e-5));
  LayerKind kind() const override { return LayerKind::batchnorm1d; }
  Var<T> forward(const Var<T>& x, Context& ctx) override;
  void collect(TensorList<T>& out, const std::string& prefix) const override;

  Var<T>& gamma() { return gamma_; }
  Var<T>& beta() { return beta_; }
  const Tensor<T>& running_mean() const { return running_mean_.value(); }
  const Tensor<T>& running_var() const { return running_var_.value(); }

 private:
  std::size_t features_;
  T momentum_, eps_;
  Var<T> gamma_, beta_;
  Var<T> running_mean_, running_var_;
};

template <typename T>
class ReLU final : public Layer<T> {
 public:
  LayerKind kind() const override { return LayerKind::relu; }
  Var<T> forward(const Var<T>& x, Context&) override { return relu(x); }
};

template <typename T>
class MaxPool1d final : public Layer<T> {
 public:
  explicit MaxPool1d(std::size_t width, std::size_t stride = 0);
  LayerKind kind() const override { return LayerKind::maxpool1d; }
  Var<T> forward(const Var<T>& x, Context&) override { return max_pool1d(x, width_, stride_); }

 private:
  std::size_t width_, stride_;
};

template <typename T>
class Dropout final : public Layer<T> {
 public:
  explicit Dropout(T rate);
  LayerKind kind() const override { return LayerKind::dropout; }
  Var<T> forward(const Var<T>& x, Context& ctx) override;

 private:
  T rate_;
};

template <typename T>
class GlobalMaxPool final : public Layer<T> {
 public:
  LayerKind kind() const override { return LayerKind::globalmaxpool; }
  Var<T> forward(const Var<T>& x, Context&) override { return global_max_pool(x); }
};

template <typename T>
class Sequential {
 public:
  template <typename L, typename... Args>
  L& emplace(Args&&... args) {
    auto layer = std::make_unique<L>(std::forward<Args>(args)...);
    L& ref = *layer;
    layers_.push_back(std::move(layer));
    return ref;
  }

  Var<T> forward(Var<T> x, Context& ctx) {
    for (auto& l : layers_) x = l->forward(x, ctx);
    return x;
  }

  void collect(TensorList<T>& out, const std::string& prefix) const {
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      layers_[i]->collect(out, prefix + std::to_string(i) + ".");
    }
  }

  std::size_t size() const { return layers_.size(); }
  Layer<T>& operator[](std::size_t i) { return *layers_[i]; }

 private:
  std::vector<std::unique_ptr<Layer<T>>> layers_;
};

}  // namespace har::nn
