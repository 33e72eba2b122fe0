#include "har/models/models.hpp"

#include <stdexcept>

namespace har::models {

nlohmann::json TcnConfig::to_json() const {
  return {{"in_channels", in_channels}, {"filters", filters},   {"kernel", kernel},
          {"blocks", blocks},           {"convs_per_block", convs_per_block},
          {"dropout", dropout},         {"embedding", embedding}, {"pool_every", pool_every},
          {"dilations", dilations}};
}

std::vector<std::size_t> TcnConfig::dilation_schedule() const {
  if (dilations.empty()) {
    std::vector<std::size_t> d;
    for (std::size_t k = 0, r = 1; k < convs_per_block; ++k, r *= 2) d.push_back(r);
    return d;
  }
  if (dilations.size() != convs_per_block) {
    throw std::invalid_argument("tcn: " + std::to_string(dilations.size()) + " dilations for " +
                                std::to_string(convs_per_block) + " convs per block");
  }
  for (auto r : dilations) {
    if (r == 0) throw std::invalid_argument("tcn: dilation must be >= 1");
  }
  return dilations;
}

TcnConfig TcnConfig::from_json(const nlohmann::json& j) {
  TcnConfig c;
  c.in_channels = j.value("in_channels", c.in_channels);
  c.filters = j.value("filters", c.filters);
  c.kernel = j.value("kernel", c.kernel);
  c.blocks = j.value("blocks", c.blocks);
  c.convs_per_block = j.value("convs_per_block", c.convs_per_block);
  c.dropout = j.value("dropout", c.dropout);
  c.embedding = j.value("embedding", c.embedding);
  c.pool_every = j.value("pool_every", c.pool_every);
  c.dilations = j.value("dilations", c.dilations);
  return c;
}

nlohmann::json AutoencoderConfig::to_json() const {
  return {{"input_dim", input_dim},
          {"encoder_hidden", encoder_hidden},
          {"latent", latent},
          {"decoder_hidden", decoder_hidden},
          {"latent_bn_relu", latent_bn_relu}};
}

AutoencoderConfig AutoencoderConfig::from_json(const nlohmann::json& j) {
  AutoencoderConfig c;
  c.input_dim = j.value("input_dim", c.input_dim);
  c.encoder_hidden = j.value("encoder_hidden", c.encoder_hidden);
  c.latent = j.value("latent", c.latent);
  c.decoder_hidden = j.value("decoder_hidden", c.decoder_hidden);
  c.latent_bn_relu = j.value("latent_bn_relu", c.latent_bn_relu);
  return c;
}

// ---------------------------------------------------------------- TCN

template <typename T>
TcnBlock<T>::TcnBlock(std::size_t in, std::size_t out, std::size_t kernel, const std::vector<std::size_t>& dilations,
                      double dropout, Rng& rng) {
  if (dilations.empty()) throw std::invalid_argument("tcn block needs at least one convolution");
  for (std::size_t k = 0; k < dilations.size(); ++k) {
    body_.template emplace<nn::Conv1d<T>>(k == 0 ? in : out, out, kernel, dilations[k], nn::Padding::same, rng);
    body_.template emplace<nn::BatchNorm1d<T>>(out);
    body_.template emplace<nn::ReLU<T>>();
    if (dropout > 0.0) body_.template emplace<nn::Dropout<T>>(static_cast<T>(dropout));
  }
  if (in != out) projection_ = std::make_unique<nn::Conv1d<T>>(in, out, 1, 1, nn::Padding::same, rng);
}

template <typename T>
Var<T> TcnBlock<T>::forward(const Var<T>& x, Context& ctx) {
  auto y = body_.forward(x, ctx);
  return nn::add(y, projection_ ? projection_->forward(x, ctx) : x);
}

template <typename T>
void TcnBlock<T>::collect(TensorList<T>& out, const std::string& prefix) const {
  body_.collect(out, prefix + "body.");
  if (projection_) projection_->collect(out, prefix + "skip.");
}

template <typename T>
TcnEncoder<T>::TcnEncoder(const TcnConfig& cfg, Rng& rng) : cfg_(cfg) {
  if (cfg.in_channels == 0 || cfg.filters == 0 || cfg.blocks == 0 || cfg.embedding == 0) {
    throw std::invalid_argument("tcn encoder: channels, filters, blocks and embedding must be positive");
  }
  const auto dilations = cfg.dilation_schedule();
  for (std::size_t b = 0; b < cfg.blocks; ++b) {
    blocks_.push_back(std::make_unique<TcnBlock<T>>(b == 0 ? cfg.in_channels : cfg.filters, cfg.filters, cfg.kernel,
                                                    dilations, cfg.dropout, rng));
  }
  head_ = std::make_unique<nn::Dense<T>>(cfg.filters, cfg.embedding, rng);
}

template <typename T>
Var<T> TcnEncoder<T>::forward(const Var<T>& x, Context& ctx) {
  if (x.shape().size() != 3 || x.shape()[1] != cfg_.in_channels) {
    throw nn::ShapeError("tcn encoder: expected input shape [0," + std::to_string(cfg_.in_channels) + ",0], got " +
                         nn::shape_string(x.shape()));
  }
  Var<T> h = x;
  for (std::size_t b = 0; b < blocks_.size(); ++b) {
    h = blocks_[b]->forward(h, ctx);
    if (cfg_.pool_every && (b + 1) % cfg_.pool_every == 0 && b + 1 < blocks_.size() && h.shape()[2] >= 2) {
      h = nn::max_pool1d(h, 2, 2);
    }
  }
  return head_->forward(nn::global_max_pool(h), ctx);
}

template <typename T>
void TcnEncoder<T>::collect(TensorList<T>& out, const std::string& prefix) const {
  for (std::size_t b = 0; b < blocks_.size(); ++b) blocks_[b]->collect(out, prefix + "block" + std::to_string(b) + ".");
  head_->collect(out, prefix + "head.");
}

template <typename T>
SupervisedTcn<T>::SupervisedTcn(const TcnConfig& cfg, std::size_t classes, Rng& rng)
    : encoder_(cfg, rng), classifier_(cfg.embedding, classes, rng), classes_(classes) {
  if (classes < 2) throw std::invalid_argument("supervised tcn needs at least 2 classes");
}

template <typename T>
Var<T> SupervisedTcn<T>::forward(const Var<T>& x, Context& ctx) {
  return classifier_.forward(encoder_.forward(x, ctx), ctx);
}

template <typename T>
TensorList<T> SupervisedTcn<T>::tensors() const {
  TensorList<T> out;
  encoder_.collect(out, "encoder.");
  classifier_.collect(out, "classifier.");
  return out;
}

template <typename T>
SiameseTcn<T>::SiameseTcn(const TcnConfig& cfg, bool multitask, Rng& rng)
    : encoder_(cfg, rng), act_head_(cfg.embedding, kEmbeddingDim, rng) {
  if (multitask) pers_head_ = std::make_unique<nn::Dense<T>>(cfg.embedding, kEmbeddingDim, rng);
}

template <typename T>
BranchOutput<T> SiameseTcn<T>::forward(const Var<T>& x, Context& ctx) {
  auto h = encoder_.forward(x, ctx);
  BranchOutput<T> out;
  out.act = act_head_.forward(h, ctx);
  if (pers_head_) out.pers = pers_head_->forward(h, ctx);
  return out;
}

template <typename T>
std::pair<BranchOutput<T>, BranchOutput<T>> SiameseTcn<T>::forward_pair(const Var<T>& xa, const Var<T>& xb,
                                                                        Context& ctx) {
  const std::size_t n = xa.shape().at(0);
  auto both = forward(nn::concat_rows(xa, xb), ctx);
  const std::size_t total = both.act.shape()[0];
  BranchOutput<T> a{nn::slice_rows(both.act, 0, n), {}}, b{nn::slice_rows(both.act, n, total), {}};
  if (pers_head_) {
    a.pers = nn::slice_rows(both.pers, 0, n);
    b.pers = nn::slice_rows(both.pers, n, total);
  }
  return {a, b};
}

template <typename T>
TensorList<T> SiameseTcn<T>::tensors() const {
  TensorList<T> out;
  encoder_.collect(out, "encoder.");
  act_head_.collect(out, "act_head.");
  if (pers_head_) pers_head_->collect(out, "pers_head.");
  return out;
}

// ---------------------------------------------------------------- autoencoder

template <typename T>
ResidualAutoencoder<T>::ResidualAutoencoder(const AutoencoderConfig& cfg, Rng& rng) : cfg_(cfg) {
  if (cfg.input_dim == 0 || cfg.latent == 0) throw std::invalid_argument("autoencoder: input and latent dims must be > 0");
  std::size_t width = cfg.input_dim;
  for (std::size_t h : cfg.encoder_hidden) {
    encoder_.template emplace<nn::Dense<T>>(width, h, rng);
    encoder_.template emplace<nn::BatchNorm1d<T>>(h);
    encoder_.template emplace<nn::ReLU<T>>();
    width = h;
  }
  encoder_.template emplace<nn::Dense<T>>(width, cfg.latent, rng);
  if (cfg.latent_bn_relu) {
    encoder_.template emplace<nn::BatchNorm1d<T>>(cfg.latent);
    encoder_.template emplace<nn::ReLU<T>>();
  }
  skip_ = std::make_unique<nn::Dense<T>>(cfg.input_dim, cfg.latent, rng);

  width = cfg.latent;
  for (std::size_t h : cfg.decoder_hidden) {
    decoder_.template emplace<nn::Dense<T>>(width, h, rng);
    decoder_.template emplace<nn::BatchNorm1d<T>>(h);
    decoder_.template emplace<nn::ReLU<T>>();
    width = h;
  }
  decoder_.template emplace<nn::Dense<T>>(width, cfg.input_dim, rng);
}

template <typename T>
Var<T> ResidualAutoencoder<T>::encode(const Var<T>& x, Context& ctx) {
  return nn::add(encoder_.forward(x, ctx), skip_->forward(x, ctx));
}

template <typename T>
Var<T> ResidualAutoencoder<T>::decode(const Var<T>& z, Context& ctx) {
  return decoder_.forward(z, ctx);
}

template <typename T>
typename ResidualAutoencoder<T>::Output ResidualAutoencoder<T>::forward(const Var<T>& x, Context& ctx) {
  auto z = encode(x, ctx);
  return {z, decode(z, ctx)};
}

template <typename T>
TensorList<T> ResidualAutoencoder<T>::tensors() const {
  TensorList<T> out;
  encoder_.collect(out, "encoder.");
  skip_->collect(out, "skip.");
  decoder_.collect(out, "decoder.");
  return out;
}

template <typename T>
std::pair<typename ResidualAutoencoder<T>::Output, typename ResidualAutoencoder<T>::Output>
SiameseResidualAutoencoder<T>::forward_pair(const Var<T>& xa, const Var<T>& xb, Context& ctx) {
  const std::size_t n = xa.shape().at(0);
  auto both = ae_.forward(nn::concat_rows(xa, xb), ctx);
  const std::size_t total = both.latent.shape()[0];
  typename ResidualAutoencoder<T>::Output a{nn::slice_rows(both.latent, 0, n), nn::slice_rows(both.recon, 0, n)};
  typename ResidualAutoencoder<T>::Output b{nn::slice_rows(both.latent, n, total), nn::slice_rows(both.recon, n, total)};
  return {a, b};
}

// ---------------------------------------------------------------- counts

std::size_t tcn_encoder_parameter_count(const TcnConfig& cfg) {
  const std::size_t F = cfg.filters, k = cfg.kernel;
  std::size_t n = 0;
  for (std::size_t b = 0; b < cfg.blocks; ++b) {
    const std::size_t in = b == 0 ? cfg.in_channels : F;
    n += in * F * k + F + 2 * F;  // first conv + BN
    n += (cfg.convs_per_block - 1) * (F * F * k + F + 2 * F);
    if (in != F) n += in * F + F;
  }
  return n + F * cfg.embedding + cfg.embedding;
}

std::size_t autoencoder_parameter_count(const AutoencoderConfig& cfg) {
  auto chain = [](std::size_t in, const std::vector<std::size_t>& hidden, std::size_t out) {
    std::size_t n = 0, w = in;
    for (std::size_t h : hidden) {
      n += w * h + h + 2 * h;
      w = h;
    }
    return n + w * out + out;
  };
  return chain(cfg.input_dim, cfg.encoder_hidden, cfg.latent) + (cfg.latent_bn_relu ? 2 * cfg.latent : 0) +
         cfg.input_dim * cfg.latent + cfg.latent +
         chain(cfg.latent, cfg.decoder_hidden, cfg.input_dim);
}

template class TcnBlock<float>;
template class TcnBlock<double>;
template class TcnEncoder<float>;
template class TcnEncoder<double>;
template class SupervisedTcn<float>;
template class SupervisedTcn<double>;
template class SiameseTcn<float>;
template class SiameseTcn<double>;
template class ResidualAutoencoder<float>;
template class ResidualAutoencoder<double>;
template class SiameseResidualAutoencoder<float>;
template class SiameseResidualAutoencoder<double>;

}  // namespace har::models
