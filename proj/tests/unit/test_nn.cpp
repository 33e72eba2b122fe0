#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "har/nn/checkpoint.hpp"
#include "har/nn/gradcheck.hpp"
#include "har/nn/layers.hpp"
#include "har/nn/optim.hpp"

using namespace har::nn;

namespace {

template <typename T>
Tensor<T> random_tensor(Shape shape, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> d(lo, hi);
  Tensor<T> t(std::move(shape));
  for (auto& v : t.values()) v = static_cast<T>(d(rng));
  return t;
}

// Values bounded away from zero so that relu kinks never sit inside +-h.
Tensor<double> away_from_zero(Shape shape, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> mag(0.05, 1.0);
  std::bernoulli_distribution sign(0.5);
  Tensor<double> t(std::move(shape));
  for (auto& v : t.values()) v = sign(rng) ? mag(rng) : -mag(rng);
  return t;
}

// Projects a layer output onto fixed random weights so the loss is scalar and
// every output entry carries a distinct gradient.
Var<double> project(const Var<double>& out, const Tensor<double>& w) { return sum(mul(out, Var<double>::constant(w))); }

GradCheckReport check_layer(Layer<double>& layer, const Var<double>& input, std::uint64_t seed, Mode mode = Mode::train) {
  std::mt19937_64 rng(seed);
  TensorList<double> tensors;
  layer.collect(tensors, "layer.");
  tensors.push_back({"input", input, true});
  Rng probe(seed);
  Context ctx{mode, &probe};
  const Tensor<double> w = random_tensor<double>(layer.forward(input, ctx).shape(), rng);
  return grad_check<double>(tensors, [&] {
    Rng dropout_rng(seed + 7);
    Context c{mode, &dropout_rng};
    return project(layer.forward(input, c), w);
  });
}

}  // namespace

TEST_CASE("relu clamps negatives") {
  auto x = Var<float>::constant(Tensor<float>(Shape{3}, {-1.f, 0.f, 2.f}));
  auto y = relu(x);
  CHECK(y.value().storage() == std::vector<float>{0.f, 0.f, 2.f});
}

TEST_CASE("conv1d center identity kernel with same padding") {
  Rng rng(1);
  Conv1d<float> conv(1, 1, 3, 1, Padding::same, rng);
  conv.weight().value() = Tensor<float>(Shape{1, 1, 3}, {0.f, 1.f, 0.f});
  conv.bias().value().fill(0.f);
  auto x = Var<float>::constant(Tensor<float>(Shape{1, 1, 5}, {1, 2, 3, 4, 5}));
  Context ctx;
  auto y = conv.forward(x, ctx);
  CHECK(y.shape() == Shape{1, 1, 5});
  CHECK(y.value().storage() == std::vector<float>{1, 2, 3, 4, 5});
}

TEST_CASE("conv1d dilated valid positions") {
  Rng rng(1);
  Conv1d<float> conv(1, 1, 2, 2, Padding::valid, rng);
  conv.weight().value() = Tensor<float>(Shape{1, 1, 2}, {1.f, 1.f});
  conv.bias().value().fill(0.f);
  auto x = Var<float>::constant(Tensor<float>(Shape{1, 1, 4}, {1, 2, 3, 4}));
  Context ctx;
  auto y = conv.forward(x, ctx);
  CHECK(y.value().storage() == std::vector<float>{4, 6});
}

TEST_CASE("shape mismatch names the layer kind and both shapes") {
  Rng rng(1);
  Dense<float> dense(4, 2, rng);
  auto x = Var<float>::constant(Tensor<float>(Shape{3, 5}));
  Context ctx;
  try {
    dense.forward(x, ctx);
    FAIL("expected ShapeError");
  } catch (const ShapeError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("dense") != std::string::npos);
    CHECK(msg.find("[0,4]") != std::string::npos);
    CHECK(msg.find("[3,5]") != std::string::npos);
  }
}

TEST_CASE("layer hyperparameter invariants") {
  Rng rng(1);
  CHECK_THROWS_AS(Conv1d<float>(1, 1, 0, 1, Padding::same, rng), std::invalid_argument);
  CHECK_THROWS_AS(Dropout<float>(1.0f), std::invalid_argument);
  CHECK_THROWS_AS(Dropout<float>(-0.1f), std::invalid_argument);
  CHECK_THROWS_AS(BatchNorm1d<float>(3, 0.1f, 0.0f), std::invalid_argument);
}

TEST_CASE("backward on linear and quadratic losses") {
  SUBCASE("sum(w * x) gives x") {
    auto w = Var<float>::parameter(Tensor<float>(Shape{3}, {0.5f, -1.f, 2.f}));
    auto x = Var<float>::constant(Tensor<float>(Shape{3}, {1.f, 2.f, 3.f}));
    backward(sum(mul(w, x)));
    CHECK(w.grad().storage() == std::vector<float>{1.f, 2.f, 3.f});
  }
  SUBCASE("half squared norm gives w") {
    auto w = Var<float>::parameter(Tensor<float>(Shape{2}, {3.f, 4.f}));
    backward(scale(sum(square(w)), 0.5f));
    CHECK(w.grad().storage() == std::vector<float>{3.f, 4.f});
  }
  SUBCASE("non-scalar loss is rejected") {
    auto w = Var<float>::parameter(Tensor<float>(Shape{2}, {3.f, 4.f}));
    CHECK_THROWS_AS(backward(square(w)), ShapeError);
  }
  SUBCASE("unreachable parameters keep no gradient") {
    auto w = Var<float>::parameter(Tensor<float>(Shape{2}, {3.f, 4.f}));
    auto unused = Var<float>::parameter(Tensor<float>(Shape{2}, {1.f, 1.f}));
    backward(sum(w));
    CHECK(w.has_grad());
    CHECK_FALSE(unused.has_grad());
  }
}

TEST_CASE("optimizer updates") {
  SUBCASE("sgd") {
    auto w = Var<float>::parameter(Tensor<float>::scalar(1.0f));
    Sgd<float> opt({w}, 0.1);
    w.grad() = Tensor<float>::scalar(2.0f);
    opt.step();
    CHECK(w.value().item() == doctest::Approx(0.8f));
  }
  SUBCASE("sgd with zero gradient leaves parameters unchanged") {
    auto w = Var<float>::parameter(Tensor<float>(Shape{2}, {1.5f, -2.f}));
    Sgd<float> opt({w}, 0.1);
    w.grad() = Tensor<float>(Shape{2});
    opt.step();
    CHECK(w.value().storage() == std::vector<float>{1.5f, -2.f});
  }
  SUBCASE("adam first step moves by about the learning rate") {
    auto w = Var<double>::parameter(Tensor<double>::scalar(0.0));
    Adam<double> opt({w});
    w.grad() = Tensor<double>::scalar(1.0);
    opt.step();
    // m_hat = v_hat = 1 at t = 1, so the step is lr / (1 + eps).
    CHECK(w.value().item() == doctest::Approx(-1e-3 / (1.0 + 1e-8)).epsilon(1e-12));
    CHECK(opt.steps() == 1);
  }
  SUBCASE("missing gradient is an error") {
    auto w = Var<float>::parameter(Tensor<float>::scalar(1.0f));
    Adam<float> opt({w});
    CHECK_THROWS_AS(opt.step(), std::logic_error);
  }
  SUBCASE("learning rate must be positive") {
    auto w = Var<float>::parameter(Tensor<float>::scalar(1.0f));
    CHECK_THROWS_AS(Sgd<float>({w}, 0.0), std::invalid_argument);
  }
}

TEST_CASE("every layer kind passes the finite-difference check over 20 seeds") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    CAPTURE(seed);
    std::mt19937_64 rng(seed);
    Rng init(seed);
    {
      Dense<double> dense(5, 4, init);
      auto x = Var<double>::parameter(random_tensor<double>(Shape{3, 5}, rng));
      CHECK(check_layer(dense, x, seed).max_rel_error < 1e-3);
    }
    {
      Conv1d<double> conv(3, 4, 3, 1 + seed % 3, Padding::same, init);
      auto x = Var<double>::parameter(random_tensor<double>(Shape{2, 3, 9}, rng));
      CHECK(check_layer(conv, x, seed).max_rel_error < 1e-3);
    }
    {
      Conv1d<double> conv(2, 3, 2, 2, Padding::valid, init);
      auto x = Var<double>::parameter(random_tensor<double>(Shape{2, 2, 7}, rng));
      CHECK(check_layer(conv, x, seed).max_rel_error < 1e-3);
    }
    {
      BatchNorm1d<double> bn(4);
      bn.gamma().value() = random_tensor<double>(Shape{4}, rng, 0.5, 1.5);
      bn.beta().value() = random_tensor<double>(Shape{4}, rng);
      auto x2 = Var<double>::parameter(random_tensor<double>(Shape{6, 4}, rng));
      CHECK(check_layer(bn, x2, seed).max_rel_error < 1e-3);
      auto x3 = Var<double>::parameter(random_tensor<double>(Shape{3, 4, 5}, rng));
      CHECK(check_layer(bn, x3, seed).max_rel_error < 1e-3);
      CHECK(check_layer(bn, x3, seed, Mode::eval).max_rel_error < 1e-3);
    }
    {
      ReLU<double> r;
      auto x = Var<double>::parameter(away_from_zero(Shape{4, 6}, rng));
      CHECK(check_layer(r, x, seed).max_rel_error < 1e-3);
    }
    {
      // Distinct values spaced well beyond 2h so the argmax never flips.
      std::vector<double> vals(2 * 3 * 8);
      for (std::size_t i = 0; i < vals.size(); ++i) vals[i] = 0.01 * static_cast<double>(i);
      std::shuffle(vals.begin(), vals.end(), rng);
      auto x = Var<double>::parameter(Tensor<double>(Shape{2, 3, 8}, vals));
      MaxPool1d<double> pool(3, 2);
      CHECK(check_layer(pool, x, seed).max_rel_error < 1e-3);
      GlobalMaxPool<double> gpool;
      CHECK(check_layer(gpool, x, seed).max_rel_error < 1e-3);
    }
    {
      Dropout<double> drop(0.3);
      auto x = Var<double>::parameter(random_tensor<double>(Shape{4, 5}, rng));
      CHECK(check_layer(drop, x, seed).max_rel_error < 1e-3);
    }
    {
      auto logits = Var<double>::parameter(random_tensor<double>(Shape{5, 4}, rng, -2, 2));
      std::vector<int> labels(5);
      for (auto& l : labels) l = static_cast<int>(rng() % 4);
      TensorList<double> t{{"logits", logits, true}};
      auto rep = grad_check<double>(t, [&] { return softmax_cross_entropy(logits, std::span<const int>(labels)); });
      CHECK(rep.max_rel_error < 1e-3);
    }
  }
}

TEST_CASE("constant-output model has exactly zero gradients") {
  Rng init(3);
  Dense<double> dense(3, 2, init);
  auto x = Var<double>::constant(Tensor<double>(Shape{4, 3}, 1.0));
  TensorList<double> tensors;
  dense.collect(tensors, "");
  Context ctx;
  // relu(-|.|-1) is identically zero, so nothing flows back.
  auto rep = grad_check<double>(tensors, [&] { return sum(relu(add_scalar(scale(square(dense.forward(x, ctx)), -1.0), -1.0))); });
  CHECK(rep.all_analytic_zero);
  CHECK(rep.max_abs_error == 0.0);
}

TEST_CASE("eval mode forward is a pure function") {
  Rng init(5);
  Sequential<float> net;
  net.emplace<Conv1d<float>>(2, 4, 3, 2, Padding::same, init);
  net.emplace<BatchNorm1d<float>>(4);
  net.emplace<ReLU<float>>();
  net.emplace<Dropout<float>>(0.5f);
  net.emplace<GlobalMaxPool<float>>();
  std::mt19937_64 rng(9);
  auto x = Var<float>::constant(random_tensor<float>(Shape{3, 2, 10}, rng));
  Rng drop(1);
  Context train{Mode::train, &drop};
  net.forward(x, train);  // moves running stats
  Context eval{Mode::eval, nullptr};
  auto a = net.forward(x, eval).value().storage();
  auto b = net.forward(x, eval).value().storage();
  CHECK(a == b);
}

TEST_CASE("batchnorm train output is standardized per feature") {
  std::mt19937_64 rng(11);
  BatchNorm1d<float> bn(3);
  auto x = Var<float>::constant(random_tensor<float>(Shape{64, 3}, rng, -5, 20));
  Rng r(1);
  Context ctx{Mode::train, &r};
  auto y = bn.forward(x, ctx).value();
  for (std::size_t j = 0; j < 3; ++j) {
    double m = 0, v = 0;
    for (std::size_t i = 0; i < 64; ++i) m += y[i * 3 + j];
    m /= 64;
    for (std::size_t i = 0; i < 64; ++i) v += (y[i * 3 + j] - m) * (y[i * 3 + j] - m);
    v /= 64;
    CHECK(std::abs(m) < 1e-4);
    CHECK(std::abs(v - 1.0) < 1e-4);
  }
  // running stats moved toward the batch statistics only in train mode
  auto before = bn.running_mean().storage();
  Context eval;
  bn.forward(x, eval);
  CHECK(bn.running_mean().storage() == before);
}

TEST_CASE("max pool equals brute-force window maxima") {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t len = 5 + rng() % 10, width = 1 + rng() % 4, stride = 1 + rng() % 3;
    if (len < width) continue;
    auto x = Var<float>::constant(random_tensor<float>(Shape{2, 3, len}, rng));
    auto y = max_pool1d(x, width, stride);
    const std::size_t lout = (len - width) / stride + 1;
    REQUIRE(y.shape() == Shape{2, 3, lout});
    for (std::size_t row = 0; row < 6; ++row) {
      for (std::size_t t = 0; t < lout; ++t) {
        float best = -1e30f;
        for (std::size_t w = 0; w < width; ++w) best = std::max(best, x.value()[row * len + t * stride + w]);
        CHECK(y.value()[row * lout + t] == best);
      }
    }
  }
}

TEST_CASE("checkpoint round trip is exact and validates shapes") {
  Rng init(21);
  Sequential<float> net;
  net.emplace<Dense<float>>(4, 3, init);
  net.emplace<BatchNorm1d<float>>(3);
  TensorList<float> tensors;
  net.collect(tensors, "net.");
  const auto path = std::filesystem::temp_directory_path() / "har_nn_ckpt_test.ckpt";
  save_checkpoint(path, {{"architecture", "toy"}, {"seed", 21}}, tensors);

  Rng other(99);
  Sequential<float> copy;
  copy.emplace<Dense<float>>(4, 3, other);
  copy.emplace<BatchNorm1d<float>>(3);
  TensorList<float> dst;
  copy.collect(dst, "net.");
  auto header = load_checkpoint(path, dst);
  CHECK(header["architecture"] == "toy");
  CHECK(header["payload_bytes"] == (12 + 3 + 4 * 3) * 4);
  for (std::size_t i = 0; i < tensors.size(); ++i) CHECK(tensors[i].var.value().storage() == dst[i].var.value().storage());

  Sequential<float> wrong;
  wrong.emplace<Dense<float>>(5, 3, other);
  wrong.emplace<BatchNorm1d<float>>(3);
  TensorList<float> bad;
  wrong.collect(bad, "net.");
  CHECK_THROWS(load_checkpoint(path, bad));
  std::filesystem::remove(path);
}
