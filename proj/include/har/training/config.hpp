#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "har/data/split.hpp"
#include "har/losses/losses.hpp"
#include "har/models/models.hpp"

namespace har::training {

enum class Regime { supervised, autoencoder, weak_single, weak_multi, self_supervised, weakly_self_supervised };

std::string_view to_string(Regime r);
/// Throws std::invalid_argument listing the accepted names.
Regime regime_from_string(std::string_view name);
const std::vector<Regime>& all_regimes();

/// Autoencoder family regimes train on standardized feature vectors, the
/// rest on channel-standardized raw windows.
bool uses_features(Regime r);

/// Lists every problem found, one per line.
class ConfigError : public std::invalid_argument {
 public:
  explicit ConfigError(const std::vector<std::string>& errors);
  const std::vector<std::string>& errors() const { return errors_; }

 private:
  std::vector<std::string> errors_;
};

struct TrainConfig {
  Regime regime = Regime::self_supervised;
  std::string name;  // row label in suite tables

  std::size_t epochs = 0;  // 0: 100 for the autoencoder family, 50 for TCN regimes
  std::size_t stage1_epochs = 70;
  std::size_t stage2_epochs = 30;
  std::size_t batch_size = 128;
  double learning_rate = 1e-3;

  /// Main loss weights (stage 1 for the two-stage regime).
  losses::LossWeights weights;
  /// Stage-2 weights of the two-stage regime.
  losses::LossWeights stage2_weights;

  double label_fraction = 1.0;
  double pos_ratio = 0.5;
  std::size_t pairs_per_label = 4;  // pairs per epoch = pairs_per_label * labelled windows

  std::size_t temporal_radius = 2;
  std::size_t knn_k = 5;
  bool include_self = false;

  models::TcnConfig tcn;
  models::AutoencoderConfig autoencoder;

  std::array<double, 3> split = {0.6, 0.2, 0.2};
  data::SplitMode split_mode = data::SplitMode::window;
  std::size_t kmeans_restarts = 10;
  bool cluster_train_and_test = false;
  std::uint64_t seed = 0;

  /// Defaults of a regime, including its loss weights.
  static TrainConfig defaults_for(Regime r);

  /// Starts from defaults_for(j["regime"]) and applies every present key.
  /// Throws ConfigError naming all unknown, mistyped and out-of-range keys.
  static TrainConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;

  std::vector<std::string> validation_errors() const;
  void validate() const;

  std::size_t resolved_epochs() const;
  /// Hex FNV-1a of the canonical JSON.
  std::string hash() const;
  /// Hash of the settings that determine stage 1 of the two-stage regime.
  std::string stage1_hash() const;

  /// seed + fnv1a64(tag); every random stream is derived this way.
  std::uint64_t derive_seed(std::string_view tag) const;
};

std::vector<std::string> config_keys();

}  // namespace har::training
