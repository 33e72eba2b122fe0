#include "har/nn/optim.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace har::nn {

template <typename T>
Optimizer<T>::Optimizer(std::vector<Var<T>> params, double learning_rate) : params_(std::move(params)), lr_(learning_rate) {
  if (!(learning_rate > 0.0)) throw std::invalid_argument("optimizer: learning rate must be > 0");
}

template <typename T>
void Optimizer<T>::step() {
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (!params_[i].has_grad()) {
      throw std::logic_error("optimizer: parameter " + std::to_string(i) + " of shape " +
                             shape_string(params_[i].shape()) + " has no gradient; call backward first");
    }
  }
  ++t_;
  for (std::size_t i = 0; i < params_.size(); ++i) update(i, params_[i].value(), params_[i].grad());
}

template <typename T>
void Optimizer<T>::zero_grad() {
  for (auto& p : params_) p.clear_grad();
}

template <typename T>
Sgd<T>::Sgd(std::vector<Var<T>> params, double learning_rate) : Optimizer<T>(std::move(params), learning_rate) {}

template <typename T>
void Sgd<T>::update(std::size_t, Tensor<T>& value, const Tensor<T>& grad) {
  const T lr = static_cast<T>(this->lr_);
  for (std::size_t j = 0; j < value.size(); ++j) value[j] -= lr * grad[j];
}

template <typename T>
Adam<T>::Adam(std::vector<Var<T>> params, AdamOptions opts) : Optimizer<T>(std::move(params), opts.learning_rate), opts_(opts) {
  m_.reserve(this->params_.size());
  v_.reserve(this->params_.size());
  for (const auto& p : this->params_) {
    m_.emplace_back(p.size(), 0.0);
    v_.emplace_back(p.size(), 0.0);
  }
}

template <typename T>
void Adam<T>::update(std::size_t index, Tensor<T>& value, const Tensor<T>& grad) {
  const double t = static_cast<double>(this->t_);
  const double c1 = 1.0 - std::pow(opts_.beta1, t);
  const double c2 = 1.0 - std::pow(opts_.beta2, t);
  auto& m = m_[index];
  auto& v = v_[index];
  for (std::size_t j = 0; j < value.size(); ++j) {
    const double g = grad[j];
    m[j] = opts_.beta1 * m[j] + (1.0 - opts_.beta1) * g;
    v[j] = opts_.beta2 * v[j] + (1.0 - opts_.beta2) * g * g;
    const double mhat = m[j] / c1;
    const double vhat = v[j] / c2;
    value[j] = static_cast<T>(value[j] - this->lr_ * mhat / (std::sqrt(vhat) + opts_.eps));
  }
}

template class Optimizer<float>;
template class Optimizer<double>;
template class Sgd<float>;
template class Sgd<double>;
template class Adam<float>;
template class Adam<double>;

}  // namespace har::nn
