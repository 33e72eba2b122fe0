#include <doctest.h>

#include <random>
#include <set>

#include "har/losses/losses.hpp"
#include "har/models/models.hpp"
#include "har/nn/optim.hpp"

using namespace har::models;
using har::nn::Mode;
using har::nn::Shape;
using har::nn::Tensor;

namespace {

Tensor<float> random(Shape s, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> g;
  Tensor<float> t(std::move(s));
  for (auto& v : t.values()) v = g(rng);
  return t;
}

TcnConfig small_tcn() {
  TcnConfig c;
  c.in_channels = 3;
  c.filters = 8;
  return c;
}

}  // namespace

TEST_CASE("closed-form parameter counts") {
  Rng rng(1);
  TcnConfig tcn;  // 3 channels, 128 filters, kernel 3, 3 blocks of 3 convs, 96-d output
  // block 0: 3*128*3+128 conv, 256 BN, two 128*128*3+128 convs with BN, 3*128+128 projection
  const std::size_t block0 = (1152 + 128 + 256) + 2 * (49152 + 128 + 256) + 512;
  const std::size_t later = 3 * (49152 + 128 + 256);
  CHECK(tcn_encoder_parameter_count(tcn) == block0 + 2 * later + 128 * 96 + 96);
  CHECK(tcn_encoder_parameter_count(tcn) == 410720);
  TcnEncoder<float> enc(tcn, rng);
  har::nn::TensorList<float> list;
  enc.collect(list, "");
  CHECK(har::nn::parameter_count(list) == 410720);

  SupervisedTcn<float> sup(tcn, 6, rng);
  CHECK(har::nn::parameter_count(sup.tensors()) == 410720 + 96 * 6 + 6);
  SiameseTcn<float> single(tcn, false, rng), multi(tcn, true, rng);
  CHECK(har::nn::parameter_count(single.tensors()) == 410720 + 96 * 96 + 96);
  CHECK(har::nn::parameter_count(multi.tensors()) == 410720 + 2 * (96 * 96 + 96));

  AutoencoderConfig ae;
  ae.input_dim = 21;
  // Layer by layer: 6144 + 66304 + 33152 + 12384 (+192 latent BN) + 2112 skip
  // + 12672 + 33536 + 66304 + 5397.
  CHECK(autoencoder_parameter_count(ae) == 238197);
  ResidualAutoencoder<float> model(ae, rng);
  CHECK(har::nn::parameter_count(model.tensors()) == 238197);
  ae.latent_bn_relu = false;
  CHECK(autoencoder_parameter_count(ae) == 238005);
  ResidualAutoencoder<float> linear(ae, rng);
  CHECK(har::nn::parameter_count(linear.tensors()) == 238005);
}

TEST_CASE("encoders emit 96-d embeddings and are deterministic in eval mode") {
  Rng rng(2);
  TcnEncoder<float> enc(small_tcn(), rng);
  har::nn::Context eval;
  for (std::size_t len : {16u, 43u, 64u}) {
    auto x = Var<float>::constant(random(Shape{2, 3, len}, len));
    auto a = enc.forward(x, eval), b = enc.forward(x, eval);
    CHECK(a.shape() == Shape{2, 96});
    CHECK(a.value().storage() == b.value().storage());
  }
  CHECK_THROWS_AS(enc.forward(Var<float>::constant(random(Shape{2, 4, 16}, 1)), eval), har::nn::ShapeError);

  AutoencoderConfig cfg;
  cfg.input_dim = 14;
  ResidualAutoencoder<float> ae(cfg, rng);
  auto x = Var<float>::constant(random(Shape{5, 14}, 3));
  auto out = ae.forward(x, eval);
  CHECK(out.latent.shape() == Shape{5, 96});
  CHECK(out.recon.shape() == Shape{5, 14});
  CHECK_THROWS_AS(ae.forward(Var<float>::constant(random(Shape{5, 13}, 3)), eval), har::nn::ShapeError);
  const float l = har::losses::reconstruction_loss(x, out.recon).value().item();
  CHECK(std::isfinite(l));
  CHECK(l > 0.0f);
}

TEST_CASE("pooling between blocks is optional") {
  Rng rng(3);
  auto cfg = small_tcn();
  cfg.pool_every = 1;
  TcnEncoder<float> enc(cfg, rng);
  har::nn::Context eval;
  CHECK(enc.forward(Var<float>::constant(random(Shape{2, 3, 32}, 1)), eval).shape() == Shape{2, 96});
}

TEST_CASE("siamese branches share weights") {
  Rng rng(4);
  SiameseTcn<float> net(small_tcn(), true, rng);
  har::nn::Context eval;
  auto xa = Var<float>::constant(random(Shape{3, 3, 20}, 5));
  auto xb = Var<float>::constant(random(Shape{3, 3, 20}, 6));

  auto [a, b] = net.forward_pair(xa, xa, eval);
  CHECK(a.act.value().storage() == b.act.value().storage());
  CHECK(a.pers.shape() == Shape{3, 96});
  auto d = har::losses::similarity_distance(a.act, b.act);
  for (float v : d.value().values()) CHECK(v == 0.0f);

  auto [p, q] = net.forward_pair(xa, xb, eval);
  auto [q2, p2] = net.forward_pair(xb, xa, eval);
  CHECK(p.act.value().storage() == p2.act.value().storage());
  CHECK(q.pers.value().storage() == q2.pers.value().storage());

  // Every parameter appears once, so one optimizer step updates both branches alike.
  auto tensors = net.tensors();
  std::set<const void*> nodes;
  for (const auto& t : tensors) nodes.insert(t.var.node());
  CHECK(nodes.size() == tensors.size());

  Rng drop(1);
  har::nn::Context train{Mode::train, &drop};
  auto [ta, tb] = net.forward_pair(xa, xb, train);
  const std::vector<int> y{1, 0, 1};
  har::nn::Adam<float> opt(har::nn::trainable(tensors));
  har::nn::backward(har::losses::contrastive_loss(ta.act, tb.act, std::span<const int>(y), 1.0f));
  for (auto& v : har::nn::trainable(tensors)) {
    if (!v.has_grad()) v.grad() = Tensor<float>(v.shape());
  }
  opt.step();
  auto [s1, s2] = net.forward_pair(xa, xa, eval);
  CHECK(s1.act.value().storage() == s2.act.value().storage());

  SiameseResidualAutoencoder<float> sae([] {
    AutoencoderConfig c;
    c.input_dim = 10;
    return c;
  }(), rng);
  auto fa = Var<float>::constant(random(Shape{4, 10}, 7));
  auto [ra, rb] = sae.forward_pair(fa, fa, eval);
  CHECK(ra.latent.value().storage() == rb.latent.value().storage());
  CHECK(ra.recon.value().storage() == rb.recon.value().storage());
}

TEST_CASE("input skip projection keeps a linear path") {
  Rng rng(5);
  AutoencoderConfig cfg;
  cfg.input_dim = 12;
  ResidualAutoencoder<float> ae(cfg, rng);
  for (auto& t : [&] {
         har::nn::TensorList<float> l;
         ae.encoder_body().collect(l, "");
         return l;
       }()) {
    if (t.trainable) t.var.value().fill(0.0f);
  }
  har::nn::Context eval;
  auto x1 = Var<float>::constant(random(Shape{1, 12}, 1));
  auto x2 = Var<float>::constant(random(Shape{1, 12}, 2));
  auto z1 = ae.encode(x1, eval), z2 = ae.encode(x2, eval);
  CHECK(z1.value().storage() != z2.value().storage());
  float mag = 0;
  for (float v : ae.forward(x1, eval).recon.value().values()) mag += std::abs(v);
  CHECK(mag > 0.0f);
}

TEST_CASE("autoencoder fits 64 fixed vectors") {
  Rng rng(11);
  AutoencoderConfig cfg;
  cfg.input_dim = 21;
  ResidualAutoencoder<float> ae(cfg, rng);
  auto x = Var<float>::constant(random(Shape{64, 21}, 12));
  auto params = har::nn::trainable(ae.tensors());
  har::nn::Adam<float> opt(params);
  har::nn::Context train{Mode::train, &rng};
  har::nn::Context eval;
  const float initial = har::losses::reconstruction_loss(x, ae.forward(x, eval).recon).value().item();
  for (int step = 0; step < 200; ++step) {
    opt.zero_grad();
    auto loss = har::losses::reconstruction_loss(x, ae.forward(x, train).recon);
    har::nn::backward(loss);
    opt.step();
  }
  const float final_loss = har::losses::reconstruction_loss(x, ae.forward(x, eval).recon).value().item();
  MESSAGE("reconstruction " << initial << " -> " << final_loss);
  CHECK(final_loss <= 0.5f * initial);
}

TEST_CASE("convolutions inside a block dilate 1, 2, 4") {
  // Kernel 3 at dilations 1, 2, 4 reaches 1 + 2 + 4 = 7 steps each way.
  Rng rng(21);
  TcnBlock<double> block(1, 4, 3, TcnConfig{}.dilation_schedule(), 0.0, rng);
  har::nn::Context eval;
  const std::size_t W = 41, p = 20;
  Tensor<double> base(Shape{1, 1, W}), bumped(Shape{1, 1, W});
  std::mt19937_64 g(3);
  std::normal_distribution<double> n;
  for (std::size_t t = 0; t < W; ++t) base[t] = bumped[t] = n(g);
  bumped[p] += 5.0;
  const auto a = block.forward(har::nn::Var<double>::constant(base), eval).value();
  const auto b = block.forward(har::nn::Var<double>::constant(bumped), eval).value();
  std::size_t lo = W, hi = 0;
  for (std::size_t c = 0; c < 4; ++c) {
    for (std::size_t t = 0; t < W; ++t) {
      if (a[c * W + t] != b[c * W + t]) {
        lo = std::min(lo, t);
        hi = std::max(hi, t);
      }
    }
  }
  CHECK(lo == p - 7);
  CHECK(hi == p + 7);
}

TEST_CASE("eval embeddings do not depend on batch neighbours") {
  Rng rng(9);
  TcnEncoder<float> enc(small_tcn(), rng);
  har::nn::Context eval;
  const auto big = random(Shape{13, 3, 24}, 4);
  const auto all = enc.forward(Var<float>::constant(big), eval).value();
  for (std::size_t i : {0u, 5u, 12u}) {
    Tensor<float> one(Shape{1, 3, 24});
    std::copy(big.data() + i * 72, big.data() + (i + 1) * 72, one.data());
    const auto row = enc.forward(Var<float>::constant(one), eval).value();
    for (std::size_t j = 0; j < 96; ++j) CHECK(row[j] == all[i * 96 + j]);
  }
}

TEST_CASE("dilation schedule") {
  TcnConfig c;
  CHECK(c.dilation_schedule() == std::vector<std::size_t>{1, 2, 4});
  c.convs_per_block = 2;
  CHECK(c.dilation_schedule() == std::vector<std::size_t>{1, 2});
  c.dilations = {1, 1};
  CHECK(c.dilation_schedule() == std::vector<std::size_t>{1, 1});
  CHECK(TcnConfig::from_json(c.to_json()).dilations == c.dilations);
  c.dilations = {1, 2, 4};
  CHECK_THROWS_AS(c.dilation_schedule(), std::invalid_argument);
  c.dilations = {0, 1};
  CHECK_THROWS_AS(c.dilation_schedule(), std::invalid_argument);
}
