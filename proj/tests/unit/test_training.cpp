#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "har/data/synth.hpp"
#include "har/nn/checkpoint.hpp"
#include "har/training/suite.hpp"

using namespace har;
using namespace har::training;

namespace {

data::WindowSet small_synth(std::size_t samples = 480) {
  data::SynthSpec spec;  // M=6, S=8, noise 0.1
  spec.samples_per_class = samples;
  return data::synthesize_windows(spec);
}

TrainConfig small_config(Regime r) {
  auto cfg = TrainConfig::defaults_for(r);
  cfg.tcn.filters = 8;
  cfg.tcn.blocks = 2;
  cfg.tcn.convs_per_block = 1;
  cfg.tcn.embedding = 16;
  cfg.autoencoder.encoder_hidden = {32, 16};
  cfg.autoencoder.latent = 8;
  cfg.autoencoder.decoder_hidden = {16, 32};
  cfg.epochs = 3;
  cfg.stage1_epochs = 2;
  cfg.stage2_epochs = 2;
  cfg.batch_size = 64;
  cfg.kmeans_restarts = 2;
  cfg.seed = 5;
  return cfg;
}

}  // namespace

TEST_CASE("config json round trip and defaults") {
  const auto cfg = TrainConfig::defaults_for(Regime::weakly_self_supervised);
  CHECK(cfg.weights.alpha == 0.3);
  CHECK(cfg.weights.beta == 0.5);
  CHECK(cfg.stage2_weights.gamma == 0.8);
  CHECK(cfg.stage2_weights.alpha == 0.05);
  CHECK(cfg.stage2_weights.beta == 0.1);
  CHECK(cfg.resolved_epochs() == 100);
  const auto back = TrainConfig::from_json(cfg.to_json());
  CHECK(back.to_json() == cfg.to_json());
  CHECK(back.hash() == cfg.hash());

  CHECK(TrainConfig::defaults_for(Regime::weak_multi).weights.alpha == 0.6);
  CHECK(TrainConfig::defaults_for(Regime::weak_multi).weights.beta == 0.4);
  CHECK(TrainConfig::defaults_for(Regime::supervised).resolved_epochs() == 50);
  CHECK(TrainConfig::defaults_for(Regime::autoencoder).resolved_epochs() == 100);
}

TEST_CASE("config errors are reported together") {
  nlohmann::json j = {{"regime", "self_supervised"}, {"batch_size", 0}, {"label_fraction", 0.0}, {"bogus", 1},
                      {"alpha", 0.9}, {"beta", 0.9}};
  try {
    TrainConfig::from_json(j);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("batch_size") != std::string::npos);
    CHECK(msg.find("label_fraction") != std::string::npos);
    CHECK(msg.find("bogus") != std::string::npos);
    CHECK(msg.find("alpha") != std::string::npos);
    CHECK(e.errors().size() >= 4);
  }
  CHECK_THROWS_AS(TrainConfig::from_json({{"regime", "nope"}}), ConfigError);
}

TEST_CASE("prepared data is standardized on train and indexes neighbours") {
  const auto ws = small_synth();
  const auto cfg = small_config(Regime::self_supervised);
  const auto d = prepare_data(ws, cfg);
  CHECK(d.train.size() + d.val.size() + d.test.size() == ws.size());
  CHECK(d.train_temporal.size() == d.train.size());
  CHECK(d.train_feature.size() == d.train.size());
  CHECK(d.classes == 6);
  CHECK(d.subjects == 8);
  // Every train feature column has mean ~0 after standardization.
  for (std::size_t c = 0; c < d.train_features.cols; ++c) {
    double m = 0;
    for (std::size_t r = 0; r < d.train_features.rows; ++r) m += d.train_features.at(r, c);
    CHECK(std::abs(m / double(d.train_features.rows)) < 1e-4);
  }
}

TEST_CASE("supervised training loss decreases over 30 epochs") {
  const auto ws = small_synth(320);
  auto cfg = small_config(Regime::supervised);
  cfg.epochs = 30;
  const auto d = prepare_data(ws, cfg);
  TrainOptions opts;
  opts.validation = false;
  const auto res = train(cfg, d, opts);
  REQUIRE(res.log.size() == 30);
  CHECK(res.log.back().loss < res.log.front().loss);
  for (const auto& r : res.log) CHECK(std::isfinite(r.loss));
}

TEST_CASE("self-supervised components are logged every epoch") {
  const auto ws = small_synth();
  const auto cfg = small_config(Regime::self_supervised);
  const auto d = prepare_data(ws, cfg);
  const auto res = train(cfg, d);
  REQUIRE(res.log.size() == 3);
  for (const auto& r : res.log) {
    CHECK(r.components.count("ae"));
    CHECK(r.components.count("tc"));
    CHECK(r.components.count("fc"));
    CHECK(r.val_loss.has_value());
    const double mixed = 0.2 * r.components.at("ae") + 0.3 * r.components.at("tc") + 0.5 * r.components.at("fc");
    CHECK(r.loss == doctest::Approx(mixed).epsilon(1e-4));
  }
}

TEST_CASE("identical config and seed give bit-identical parameters") {
  const auto ws = small_synth();
  for (Regime r : {Regime::self_supervised, Regime::weak_multi}) {
    const auto cfg = small_config(r);
    const auto d = prepare_data(ws, cfg);
    const auto a = train(cfg, d), b = train(cfg, d);
    CHECK(parameter_digest(a.model.tensors()) == parameter_digest(b.model.tensors()));
    CHECK(a.manifest.dump() == b.manifest.dump());
    CHECK(evaluate(a.model, a.config, d).to_json().dump() == evaluate(b.model, b.config, d).to_json().dump());
  }
}

TEST_CASE("two-stage regime starts stage 2 from the stage-1 parameters") {
  const auto ws = small_synth();
  auto cfg = small_config(Regime::weakly_self_supervised);
  cfg.label_fraction = 0.1;
  const auto d = prepare_data(ws, cfg);
  const auto res = train(cfg, d);
  CHECK(!res.stage1_final_digest.empty());
  CHECK(res.stage1_final_digest == res.stage2_initial_digest);
  CHECK(res.log.size() == 4);
  CHECK(res.log[1].stage == 1);
  CHECK(res.log[2].stage == 2);
  CHECK(res.log[2].components.count("contrastive"));
  CHECK(res.labeled.size() == static_cast<std::size_t>(std::llround(0.1 * double(d.train.size()))));

  // Stage 1 is exactly the self-supervised regime at the stage-1 budget.
  auto ss = cfg;
  ss.regime = Regime::self_supervised;
  ss.epochs = cfg.stage1_epochs;
  CHECK(parameter_digest(train(ss, d).model.tensors()) == res.stage1_final_digest);

  // A cached stage 1 is reused and the outcome does not change.
  const auto cache = std::filesystem::temp_directory_path() / "har_stage1_cache_test";
  std::filesystem::remove_all(cache);
  TrainOptions opts;
  opts.stage1_cache = cache;
  const auto first = train(cfg, d, opts);
  auto other = cfg;
  other.label_fraction = 0.05;
  const auto reused = train(other, d, opts);
  CHECK_FALSE(first.stage1_reused);
  CHECK(reused.stage1_reused);
  CHECK(reused.stage2_initial_digest == res.stage1_final_digest);
  CHECK(parameter_digest(first.model.tensors()) == parameter_digest(res.model.tensors()));
  std::filesystem::remove_all(cache);
}

TEST_CASE("every regime trains and evaluates") {
  const auto ws = small_synth();
  for (Regime r : all_regimes()) {
    CAPTURE(std::string(to_string(r)));
    auto cfg = small_config(r);
    cfg.epochs = 1;
    cfg.label_fraction = 0.2;
    const auto d = prepare_data(ws, cfg);
    const auto res = train(cfg, d);
    const auto rep = evaluate(res.model, res.config, d);
    CHECK(rep.accuracy >= 0.0);
    CHECK(rep.accuracy <= 1.0);
    CHECK(rep.samples == d.test.size());
    CHECK(rep.regime == std::string(to_string(r)));
    CHECK(rep.person_accuracy.has_value() == (r == Regime::weak_multi));
    CHECK(rep.method == std::string(r == Regime::supervised ? "classifier" : "kmeans"));
  }
}

TEST_CASE("regime and data mismatch names the missing step") {
  const auto ws = small_synth();
  const auto cfg = small_config(Regime::self_supervised);
  auto d = prepare_data(ws, cfg);
  d.train_temporal = {};
  CHECK_THROWS_WITH_AS(train(cfg, d), doctest::Contains("neighbour"), std::invalid_argument);
  d.train_features = {};
  CHECK_THROWS_WITH_AS(train(cfg, d), doctest::Contains("feature"), std::invalid_argument);
}

TEST_CASE("non-finite loss aborts with diagnostics") {
  auto ws = small_synth();
  auto cfg = small_config(Regime::autoencoder);
  auto d = prepare_data(ws, cfg);
  d.train_features.values[3] = std::nanf("");
  CHECK_THROWS_WITH_AS(train(cfg, d), doctest::Contains("non-finite loss"), std::runtime_error);
}

TEST_CASE("model checkpoint round trip") {
  const auto ws = small_synth();
  const auto cfg = small_config(Regime::weak_single);
  const auto d = prepare_data(ws, cfg);
  const auto res = train(cfg, d);
  const auto path = std::filesystem::temp_directory_path() / "har_model_roundtrip.ckpt";
  save_model(path, res, d);
  const auto loaded = load_model(path);
  CHECK(loaded.config.to_json() == res.config.to_json());
  const auto x = window_tensor(d.test);
  CHECK(loaded.model.embed(x) == res.model.embed(x));
  std::filesystem::remove(path);
  CHECK_THROWS_AS(load_model(path), std::runtime_error);
}

TEST_CASE("suite matrices") {
  auto base = small_config(Regime::self_supervised);
  base.weights.alpha = 0.25;
  base.weights.beta = 0.45;
  const auto abl = ablation_matrix(base);
  REQUIRE(abl.size() == 4);
  const char* names[] = {"ae", "tc+ae", "fc+ae", "tc+fc+ae"};
  const double alphas[] = {0, 0.25, 0, 0.25}, betas[] = {0, 0, 0.45, 0.45};
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(abl[i].name == names[i]);
    CHECK(abl[i].regime == Regime::self_supervised);
    CHECK(abl[i].weights.alpha == alphas[i]);
    CHECK(abl[i].weights.beta == betas[i]);
  }
  // Non self-supervised bases fall back to the regime's default weights.
  CHECK(ablation_matrix(small_config(Regime::autoencoder))[3].weights.alpha == 0.3);

  const auto lf = label_fraction_matrix(small_config(Regime::autoencoder), {0.01, 0.05, 0.1});
  REQUIRE(lf.size() == 3);
  CHECK(lf[0].regime == Regime::weakly_self_supervised);
  CHECK(lf[1].label_fraction == 0.05);
  CHECK(lf[2].stage2_weights.gamma == 0.8);
  CHECK(lf[0].hash() != lf[1].hash());
  CHECK(label_fraction_matrix(base, {}).empty());
}

TEST_CASE("suite runs rows, isolates failures and is deterministic") {
  const auto ws = small_synth();
  CHECK(run_experiment_suite({}, ws).empty());
  CHECK(suite_csv({}) == "name,regime,label_fraction,seed,accuracy,macro_f1,person_accuracy,config_hash,error\n");

  auto configs = ablation_matrix(small_config(Regime::self_supervised));
  configs.resize(2);
  auto bad = small_config(Regime::weakly_self_supervised);
  bad.knn_k = 100000;  // more neighbours than training windows
  bad.name = "bad";
  configs.push_back(bad);
  auto two = small_config(Regime::weakly_self_supervised);
  two.label_fraction = 0.1;
  configs.push_back(two);
  configs.push_back(two);

  std::size_t seen = 0;
  SuiteOptions opts;
  opts.on_row = [&](const SuiteRow&, std::size_t i) { CHECK(i == seen++); };
  const auto rows = run_experiment_suite(configs, ws, opts);
  REQUIRE(rows.size() == 5);
  CHECK(seen == 5);
  CHECK(rows[0].report.has_value());
  CHECK(rows[1].report.has_value());
  CHECK_FALSE(rows[2].report.has_value());
  CHECK_FALSE(rows[2].error.empty());
  REQUIRE(rows[3].report.has_value());
  // The second identical two-stage row reuses the cached first stage.
  CHECK_FALSE(rows[3].stage1_reused);
  CHECK(rows[4].stage1_reused);
  CHECK(rows[3].manifest == rows[4].manifest);
  CHECK(rows[3].report->to_json() == rows[4].report->to_json());

  const auto again = run_experiment_suite(configs, ws);
  CHECK(suite_csv(again) == suite_csv(rows));
  CHECK(suite_json(again) == suite_json(rows));
  CHECK(suite_json(rows)[2]["report"].is_null());
}
