#include "har/training/config.hpp"

#include <cmath>
#include <cstdio>
#include <set>

#include "har/io.hpp"

namespace har::training {

namespace {

struct RegimeName {
  Regime regime;
  std::string_view name;
};

constexpr RegimeName kRegimeNames[] = {
    {Regime::supervised, "supervised"},
    {Regime::autoencoder, "autoencoder"},
    {Regime::weak_single, "weak_single"},
    {Regime::weak_multi, "weak_multi"},
    {Regime::self_supervised, "self_supervised"},
    {Regime::weakly_self_supervised, "weakly_self_supervised"},
};

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

const std::vector<std::string> kKeys = {
    "regime",        "name",           "epochs",          "stage1_epochs",   "stage2_epochs",
    "batch_size",    "learning_rate",  "alpha",           "beta",            "margin",
    "stage2_alpha",  "stage2_beta",    "stage2_gamma",    "label_fraction",  "pos_ratio",
    "pairs_per_label", "temporal_radius", "knn_k",        "include_self",    "tcn",
    "autoencoder",   "split",          "split_mode",      "kmeans_restarts", "cluster_train_and_test",
    "seed",
};

}  // namespace

std::string_view to_string(Regime r) {
  for (const auto& rn : kRegimeNames) {
    if (rn.regime == r) return rn.name;
  }
  return "unknown";
}

Regime regime_from_string(std::string_view name) {
  std::vector<std::string> names;
  for (const auto& rn : kRegimeNames) {
    if (rn.name == name) return rn.regime;
    names.emplace_back(rn.name);
  }
  throw std::invalid_argument("unknown regime '" + std::string(name) + "' (expected one of " + join(names, ", ") + ")");
}

const std::vector<Regime>& all_regimes() {
  static const std::vector<Regime> v = {Regime::supervised,  Regime::autoencoder,     Regime::weak_single,
                                        Regime::weak_multi,  Regime::self_supervised, Regime::weakly_self_supervised};
  return v;
}

bool uses_features(Regime r) {
  return r == Regime::autoencoder || r == Regime::self_supervised || r == Regime::weakly_self_supervised;
}

ConfigError::ConfigError(const std::vector<std::string>& errors)
    : std::invalid_argument("invalid config:\n  " + join(errors, "\n  ")), errors_(errors) {}

std::vector<std::string> config_keys() { return kKeys; }

TrainConfig TrainConfig::defaults_for(Regime r) {
  TrainConfig c;
  c.regime = r;
  c.name = std::string(to_string(r));
  switch (r) {
    case Regime::weak_multi:
      c.weights.alpha = 0.6;
      c.weights.beta = 0.4;
      break;
    case Regime::self_supervised:
      c.weights.alpha = 0.3;
      c.weights.beta = 0.5;
      break;
    case Regime::weakly_self_supervised:
      c.weights.alpha = 0.3;
      c.weights.beta = 0.5;
      c.stage2_weights.alpha = 0.05;
      c.stage2_weights.beta = 0.1;
      c.stage2_weights.gamma = 0.8;
      break;
    default:
      break;
  }
  return c;
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j) {
  std::vector<std::string> errors;
  if (!j.is_object()) throw ConfigError({"config must be a JSON object"});

  Regime regime = Regime::self_supervised;
  if (j.contains("regime")) {
    try {
      regime = regime_from_string(j.at("regime").get<std::string>());
    } catch (const std::exception& e) {
      errors.push_back(std::string("regime: ") + e.what());
    }
  }
  TrainConfig c = defaults_for(regime);
  for (const auto& [key, _] : j.items()) {
    if (std::find(kKeys.begin(), kKeys.end(), key) == kKeys.end()) errors.push_back(key + ": unknown key");
  }

  auto read = [&](const char* key, auto& dst) {
    if (!j.contains(key)) return;
    try {
      j.at(key).get_to(dst);
    } catch (const std::exception& e) {
      errors.push_back(std::string(key) + ": " + e.what());
    }
  };
  read("name", c.name);
  read("epochs", c.epochs);
  read("stage1_epochs", c.stage1_epochs);
  read("stage2_epochs", c.stage2_epochs);
  read("batch_size", c.batch_size);
  read("learning_rate", c.learning_rate);
  read("alpha", c.weights.alpha);
  read("beta", c.weights.beta);
  read("margin", c.weights.margin);
  c.stage2_weights.margin = c.weights.margin;
  read("stage2_alpha", c.stage2_weights.alpha);
  read("stage2_beta", c.stage2_weights.beta);
  read("stage2_gamma", c.stage2_weights.gamma);
  read("label_fraction", c.label_fraction);
  read("pos_ratio", c.pos_ratio);
  read("pairs_per_label", c.pairs_per_label);
  read("temporal_radius", c.temporal_radius);
  read("knn_k", c.knn_k);
  read("include_self", c.include_self);
  read("kmeans_restarts", c.kmeans_restarts);
  read("cluster_train_and_test", c.cluster_train_and_test);
  read("seed", c.seed);
  read("split", c.split);
  if (j.contains("split_mode")) {
    const auto& m = j.at("split_mode");
    if (m == "window") c.split_mode = data::SplitMode::window;
    else if (m == "subject") c.split_mode = data::SplitMode::subject;
    else errors.push_back("split_mode: expected \"window\" or \"subject\"");
  }
  if (j.contains("tcn")) {
    try {
      c.tcn = models::TcnConfig::from_json(j.at("tcn"));
    } catch (const std::exception& e) {
      errors.push_back(std::string("tcn: ") + e.what());
    }
  }
  if (j.contains("autoencoder")) {
    try {
      c.autoencoder = models::AutoencoderConfig::from_json(j.at("autoencoder"));
    } catch (const std::exception& e) {
      errors.push_back(std::string("autoencoder: ") + e.what());
    }
  }
  for (auto& e : c.validation_errors()) errors.push_back(std::move(e));
  if (!errors.empty()) throw ConfigError(errors);
  return c;
}

nlohmann::json TrainConfig::to_json() const {
  return {{"regime", std::string(to_string(regime))},
          {"name", name},
          {"epochs", epochs},
          {"stage1_epochs", stage1_epochs},
          {"stage2_epochs", stage2_epochs},
          {"batch_size", batch_size},
          {"learning_rate", learning_rate},
          {"alpha", weights.alpha},
          {"beta", weights.beta},
          {"margin", weights.margin},
          {"stage2_alpha", stage2_weights.alpha},
          {"stage2_beta", stage2_weights.beta},
          {"stage2_gamma", stage2_weights.gamma},
          {"label_fraction", label_fraction},
          {"pos_ratio", pos_ratio},
          {"pairs_per_label", pairs_per_label},
          {"temporal_radius", temporal_radius},
          {"knn_k", knn_k},
          {"include_self", include_self},
          {"tcn", tcn.to_json()},
          {"autoencoder", autoencoder.to_json()},
          {"split", split},
          {"split_mode", split_mode == data::SplitMode::window ? "window" : "subject"},
          {"kmeans_restarts", kmeans_restarts},
          {"cluster_train_and_test", cluster_train_and_test},
          {"seed", seed}};
}

std::vector<std::string> TrainConfig::validation_errors() const {
  std::vector<std::string> errors;
  auto check_weights = [&](const char* prefix, const losses::LossWeights& w, bool with_gamma) {
    try {
      w.validate(with_gamma);
    } catch (const std::exception& e) {
      errors.push_back(std::string(prefix) + e.what());
    }
  };
  if (batch_size < 1) errors.emplace_back("batch_size: must be >= 1");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) errors.emplace_back("learning_rate: must be > 0");
  if (regime == Regime::weakly_self_supervised) {
    if (stage1_epochs < 1) errors.emplace_back("stage1_epochs: must be >= 1");
    if (stage2_epochs < 1) errors.emplace_back("stage2_epochs: must be >= 1");
    check_weights("alpha/beta/margin: ", weights, false);
    check_weights("stage2_alpha/stage2_beta/stage2_gamma: ", stage2_weights, true);
  } else {
    check_weights("alpha/beta/margin: ", weights, false);
  }
  if (!(label_fraction > 0.0 && label_fraction <= 1.0)) errors.emplace_back("label_fraction: must be in (0, 1]");
  if (!(pos_ratio >= 0.0 && pos_ratio <= 1.0)) errors.emplace_back("pos_ratio: must be in [0, 1]");
  if (pairs_per_label < 1) errors.emplace_back("pairs_per_label: must be >= 1");
  if (knn_k < 1) errors.emplace_back("knn_k: must be >= 1");
  if (kmeans_restarts < 1) errors.emplace_back("kmeans_restarts: must be >= 1");
  double total = 0.0;
  for (double f : split) {
    if (!(f >= 0.0)) errors.emplace_back("split: fractions must be non-negative");
    total += f;
  }
  if (std::abs(total - 1.0) > 1e-6) errors.emplace_back("split: fractions must sum to 1");
  if (!(split[0] > 0.0) || !(split[2] > 0.0)) errors.emplace_back("split: train and test fractions must be > 0");
  if (tcn.filters < 1 || tcn.kernel < 1 || tcn.blocks < 1 || tcn.convs_per_block < 1 || tcn.embedding < 1) {
    errors.emplace_back("tcn: filters, kernel, blocks, convs_per_block and embedding must be >= 1");
  }
  if (!(tcn.dropout >= 0.0 && tcn.dropout < 1.0)) errors.emplace_back("tcn.dropout: must be in [0, 1)");
  try {
    tcn.dilation_schedule();
  } catch (const std::invalid_argument& e) {
    errors.emplace_back(std::string("tcn.dilations: ") + e.what());
  }
  if (autoencoder.latent < 1) errors.emplace_back("autoencoder.latent: must be >= 1");
  return errors;
}

void TrainConfig::validate() const {
  const auto errors = validation_errors();
  if (!errors.empty()) throw ConfigError(errors);
}

std::size_t TrainConfig::resolved_epochs() const {
  if (regime == Regime::weakly_self_supervised) return stage1_epochs + stage2_epochs;
  if (epochs > 0) return epochs;
  return uses_features(regime) ? 100 : 50;
}

std::string TrainConfig::hash() const { return hex64(io::fnv1a64(to_json().dump())); }

std::string TrainConfig::stage1_hash() const {
  auto j = to_json();
  for (const char* k : {"name", "regime", "epochs", "stage2_epochs", "stage2_alpha", "stage2_beta", "stage2_gamma",
                        "label_fraction", "pos_ratio", "pairs_per_label", "kmeans_restarts", "cluster_train_and_test",
                        "tcn", "margin"}) {
    j.erase(k);
  }
  return hex64(io::fnv1a64(j.dump()));
}

std::uint64_t TrainConfig::derive_seed(std::string_view tag) const { return seed + io::fnv1a64(tag); }

}  // namespace har::training
