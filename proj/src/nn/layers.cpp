#include "har/nn/layers.hpp"

#include <cmath>

namespace har::nn {

std::string_view to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::dense: return "dense";
    case LayerKind::conv1d: return "conv1d";
    case LayerKind::batchnorm1d: return "batchnorm1d";
    case LayerKind::relu: return "relu";
    case LayerKind::maxpool1d: return "maxpool1d";
    case LayerKind::dropout: return "dropout";
    case LayerKind::globalmaxpool: return "globalmaxpool";
  }
  return "unknown";
}

namespace {

// Glorot/Xavier uniform.
template <typename T>
Tensor<T> glorot(Shape shape, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> dist(-limit, limit);
  Tensor<T> t(std::move(shape));
  for (auto& v : t.values()) v = static_cast<T>(dist(rng));
  return t;
}

[[noreturn]] void shape_error(LayerKind kind, const Shape& expected, const Shape& got) {
  throw ShapeError(std::string(to_string(kind)) + ": expected input shape " + shape_string(expected) + ", got " +
                   shape_string(got));
}

}  // namespace

template <typename T>
Dense<T>::Dense(std::size_t in, std::size_t out, Rng& rng)
    : in_(in),
      out_(out),
      weight_(Var<T>::parameter(glorot<T>(Shape{in, out}, in, out, rng))),
      bias_(Var<T>::parameter(Tensor<T>(Shape{out}))) {}

template <typename T>
Var<T> Dense<T>::forward(const Var<T>& x, Context&) {
  if (x.shape().size() != 2 || x.shape()[1] != in_) shape_error(kind(), Shape{0, in_}, x.shape());
  return add_bias(matmul(x, weight_), bias_);
}

template <typename T>
void Dense<T>::collect(TensorList<T>& out, const std::string& prefix) const {
  out.push_back({prefix + "weight", weight_, true});
  out.push_back({prefix + "bias", bias_, true});
}

template <typename T>
Conv1d<T>::Conv1d(std::size_t in_channels, std::size_t out_channels, std::size_t kernel, std::size_t dilation,
                  Padding padding, Rng& rng)
    : in_(in_channels), out_(out_channels), kernel_(kernel), dilation_(dilation), padding_(padding) {
  if (kernel_ < 1) throw std::invalid_argument("conv1d: kernel size must be >= 1");
  if (dilation_ < 1) throw std::invalid_argument("conv1d: dilation must be >= 1");
  weight_ = Var<T>::parameter(glorot<T>(Shape{out_, in_, kernel_}, in_ * kernel_, out_ * kernel_, rng));
  bias_ = Var<T>::parameter(Tensor<T>(Shape{out_}));
}

template <typename T>
Var<T> Conv1d<T>::forward(const Var<T>& x, Context&) {
  if (x.shape().size() != 3 || x.shape()[1] != in_) shape_error(kind(), Shape{0, in_, 0}, x.shape());
  Conv1dGeometry geom;
  geom.dilation = dilation_;
  if (padding_ == Padding::same) {
    const std::size_t total = dilation_ * (kernel_ - 1);
    geom.pad_left = total / 2;
    geom.pad_right = total - geom.pad_left;
  }
  return conv1d(x, weight_, bias_, geom);
}

template <typename T>
void Conv1d<T>::collect(TensorList<T>& out, const std::string& prefix) const {
  out.push_back({prefix + "weight", weight_, true});
  out.push_back({prefix + "bias", bias_, true});
}

template <typename T>
BatchNorm1d<T>::BatchNorm1d(std::size_t features, T momentum, T eps)
    : features_(features),
      momentum_(momentum),
      eps_(eps),
      gamma_(Var<T>::parameter(Tensor<T>(Shape{features}, T{1}))),
      beta_(Var<T>::parameter(Tensor<T>(Shape{features}))),
      running_mean_(Var<T>::constant(Tensor<T>(Shape{features}))),
      running_var_(Var<T>::constant(Tensor<T>(Shape{features}, T{1}))) {
  if (!(eps > T{0})) throw std::invalid_argument("batchnorm1d: epsilon must be > 0");
}

template <typename T>
Var<T> BatchNorm1d<T>::forward(const Var<T>& x, Context& ctx) {
  const auto& s = x.shape();
  if ((s.size() != 2 && s.size() != 3) || s[1] != features_) shape_error(kind(), Shape{0, features_}, s);
  if (!ctx.training()) {
    return batch_norm_eval(x, gamma_, beta_, running_mean_.value(), running_var_.value(), eps_);
  }
  std::vector<double> mu, var;
  Var<T> y = batch_norm_train(x, gamma_, beta_, eps_, &mu, &var);
  const double count = static_cast<double>(s[0] * (s.size() == 3 ? s[2] : 1));
  const double unbias = count > 1 ? count / (count - 1) : 1.0;
  auto& rm = running_mean_.value();
  auto& rv = running_var_.value();
  const double m = momentum_;
  for (std::size_t j = 0; j < features_; ++j) {
    rm[j] = static_cast<T>((1.0 - m) * rm[j] + m * mu[j]);
    rv[j] = static_cast<T>((1.0 - m) * rv[j] + m * var[j] * unbias);
  }
  return y;
}

template <typename T>
void BatchNorm1d<T>::collect(TensorList<T>& out, const std::string& prefix) const {
  out.push_back({prefix + "gamma", gamma_, true});
  out.push_back({prefix + "beta", beta_, true});
  out.push_back({prefix + "running_mean", running_mean_, false});
  out.push_back({prefix + "running_var", running_var_, false});
}

template <typename T>
MaxPool1d<T>::MaxPool1d(std::size_t width, std::size_t stride) : width_(width), stride_(stride ? stride : width) {
  if (width_ < 1) throw std::invalid_argument("maxpool1d: width must be >= 1");
}

template <typename T>
Dropout<T>::Dropout(T rate) : rate_(rate) {
  if (!(rate >= T{0} && rate < T{1})) throw std::invalid_argument("dropout: rate must lie in [0, 1)");
}

template <typename T>
Var<T> Dropout<T>::forward(const Var<T>& x, Context& ctx) {
  if (!ctx.training() || rate_ == T{0}) return x;
  if (!ctx.rng) throw std::logic_error("dropout: train mode requires an rng in the context");
  return dropout(x, rate_, *ctx.rng);
}

template class Dense<float>;
template class Dense<double>;
template class Conv1d<float>;
template class Conv1d<double>;
template class BatchNorm1d<float>;
template class BatchNorm1d<double>;
template class MaxPool1d<float>;
template class MaxPool1d<double>;
template class Dropout<float>;
template class Dropout<double>;

}  // namespace har::nn
