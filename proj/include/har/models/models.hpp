#pragma once

#include <memory>
#include <optional>

#include <json.hpp>

#include "har/nn/layers.hpp"

namespace har::models {

using nn::Context;
using nn::Rng;
using nn::TensorList;
using nn::Var;

inline constexpr std::size_t kEmbeddingDim = 96;

struct TcnConfig {
  std::size_t in_channels = 3;
  std::size_t filters = 128;
  std::size_t kernel = 3;
  std::size_t blocks = 3;
  std::size_t convs_per_block = 3;
  double dropout = 0.1;
  std::size_t embedding = kEmbeddingDim;
  /// Max-pool (width 2) after every n-th block; 0 pools only globally at the end.
  std::size_t pool_every = 0;
  /// Dilation of each conv inside a block; empty means 1, 2, 4, ...
  std::vector<std::size_t> dilations;

  /// dilations, or the doubling default. Throws std::invalid_argument when
  /// the list size differs from convs_per_block or holds a 0.
  std::vector<std::size_t> dilation_schedule() const;

  nlohmann::json to_json() const;
  static TcnConfig from_json(const nlohmann::json& j);
};

struct AutoencoderConfig {
  std::size_t input_dim = 0;
  std::vector<std::size_t> encoder_hidden = {256, 256, 128};
  std::size_t latent = kEmbeddingDim;
  std::vector<std::size_t> decoder_hidden = {128, 256, 256};
  /// BN + ReLU on the last encoder layer too (before the skip is added).
  bool latent_bn_relu = true;

  nlohmann::json to_json() const;
  static AutoencoderConfig from_json(const nlohmann::json& j);
};

/// (conv -> BN -> ReLU -> dropout), one per dilation, plus a skip path
/// (1x1 conv when the channel count changes).
template <typename T>
class TcnBlock {
 public:
  TcnBlock(std::size_t in, std::size_t out, std::size_t kernel, const std::vector<std::size_t>& dilations,
           double dropout, Rng& rng);
  Var<T> forward(const Var<T>& x, Context& ctx);
  void collect(TensorList<T>& out, const std::string& prefix) const;

 private:
  nn::Sequential<T> body_;
  std::unique_ptr<nn::Conv1d<T>> projection_;
};

/// x[N, C, W] -> [N, embedding]: TCN blocks, global max pool over time,
/// dense projection.
template <typename T>
class TcnEncoder {
 public:
  TcnEncoder(const TcnConfig& cfg, Rng& rng);
  Var<T> forward(const Var<T>& x, Context& ctx);
  void collect(TensorList<T>& out, const std::string& prefix) const;
  const TcnConfig& config() const { return cfg_; }

 private:
  TcnConfig cfg_;
  std::vector<std::unique_ptr<TcnBlock<T>>> blocks_;
  std::unique_ptr<nn::Dense<T>> head_;
};

/// TCN encoder followed by a dense layer to class logits.
template <typename T>
class SupervisedTcn {
 public:
  SupervisedTcn(const TcnConfig& cfg, std::size_t classes, Rng& rng);
  Var<T> forward(const Var<T>& x, Context& ctx);
  Var<T> embed(const Var<T>& x, Context& ctx) { return encoder_.forward(x, ctx); }
  TensorList<T> tensors() const;
  std::size_t classes() const { return classes_; }

 private:
  TcnEncoder<T> encoder_;
  nn::Dense<T> classifier_;
  std::size_t classes_;
};

template <typename T>
struct BranchOutput {
  Var<T> act;
  Var<T> pers;  // empty unless multi-task
};

/// One shared TCN encoder with an activity head and, for multi-task, a person head.
template <typename T>
class SiameseTcn {
 public:
  SiameseTcn(const TcnConfig& cfg, bool multitask, Rng& rng);
  BranchOutput<T> forward(const Var<T>& x, Context& ctx);
  /// Both sides go through the shared weights as one batch.
  std::pair<BranchOutput<T>, BranchOutput<T>> forward_pair(const Var<T>& xa, const Var<T>& xb, Context& ctx);
  Var<T> embed(const Var<T>& x, Context& ctx) { return forward(x, ctx).act; }
  TensorList<T> tensors() const;
  bool multitask() const { return static_cast<bool>(pers_head_); }

 private:
  TcnEncoder<T> encoder_;
  nn::Dense<T> act_head_;
  std::unique_ptr<nn::Dense<T>> pers_head_;
};

/// MLP autoencoder on feature vectors. Encoder layers use BN + ReLU (the
/// latent one only with latent_bn_relu) and a dense projection of the input
/// is added to the latent code.
template <typename T>
class ResidualAutoencoder {
 public:
  ResidualAutoencoder(const AutoencoderConfig& cfg, Rng& rng);
  Var<T> encode(const Var<T>& x, Context& ctx);
  Var<T> decode(const Var<T>& z, Context& ctx);
  struct Output {
    Var<T> latent, recon;
  };
  Output forward(const Var<T>& x, Context& ctx);
  Var<T> embed(const Var<T>& x, Context& ctx) { return encode(x, ctx); }
  TensorList<T> tensors() const;
  const AutoencoderConfig& config() const { return cfg_; }

  nn::Sequential<T>& encoder_body() { return encoder_; }
  nn::Sequential<T>& decoder() { return decoder_; }
  nn::Dense<T>& skip() { return *skip_; }

 private:
  AutoencoderConfig cfg_;
  nn::Sequential<T> encoder_, decoder_;
  std::unique_ptr<nn::Dense<T>> skip_;
};

/// Two weight-shared autoencoder branches, evaluated as one batch.
template <typename T>
class SiameseResidualAutoencoder {
 public:
  SiameseResidualAutoencoder(const AutoencoderConfig& cfg, Rng& rng) : ae_(cfg, rng) {}
  std::pair<typename ResidualAutoencoder<T>::Output, typename ResidualAutoencoder<T>::Output> forward_pair(
      const Var<T>& xa, const Var<T>& xb, Context& ctx);
  ResidualAutoencoder<T>& autoencoder() { return ae_; }
  Var<T> embed(const Var<T>& x, Context& ctx) { return ae_.encode(x, ctx); }
  TensorList<T> tensors() const { return ae_.tensors(); }

 private:
  ResidualAutoencoder<T> ae_;
};

/// Trainable parameter counts in closed form.
std::size_t tcn_encoder_parameter_count(const TcnConfig& cfg);
std::size_t autoencoder_parameter_count(const AutoencoderConfig& cfg);

}  // namespace har::models
