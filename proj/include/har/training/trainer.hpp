#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "har/data/split.hpp"
#include "har/eval/metrics.hpp"
#include "har/features/features.hpp"
#include "har/neighbors/neighbors.hpp"
#include "har/training/config.hpp"

namespace har::training {

/// Splits, standardization and neighbour indexes shared by every regime.
/// Windows are channel-standardized; features are extracted from the raw
/// windows and standardized per column. All statistics come from train.
struct PreparedData {
  data::Split split;
  data::WindowSet train, val, test;
  data::ChannelStandardizer channel_std;
  features::FeatureSet train_features, val_features, test_features;
  features::FeatureStandardizer feature_std;
  neighbors::NeighborIndex train_temporal, train_feature;
  neighbors::NeighborIndex val_temporal, val_feature;  // empty when val is too small
  std::size_t classes = 0;
  std::size_t subjects = 0;
  std::vector<std::string> activity_names;
};

PreparedData prepare_data(const data::WindowSet& ws, const TrainConfig& cfg);

/// Holds the network of a regime.
class Model {
 public:
  /// cfg.tcn.in_channels / cfg.autoencoder.input_dim must already be resolved.
  static Model create(const TrainConfig& cfg, std::size_t classes);

  Regime regime() const { return regime_; }
  nn::TensorList<float> tensors() const;

  /// Eval-mode activity embeddings, one row per input.
  eval::Matrix embed(const nn::Tensor<float>& inputs) const;
  /// Person-head embeddings (weak_multi only).
  eval::Matrix embed_person(const nn::Tensor<float>& inputs) const;
  /// Argmax of the classifier (supervised only).
  std::vector<int> predict(const nn::Tensor<float>& inputs) const;

  models::SupervisedTcn<float>& supervised() const { return *supervised_; }
  models::SiameseTcn<float>& siamese() const { return *siamese_; }
  models::SiameseResidualAutoencoder<float>& autoencoder() const { return *autoencoder_; }

 private:
  Regime regime_ = Regime::supervised;
  std::shared_ptr<models::SupervisedTcn<float>> supervised_;
  std::shared_ptr<models::SiameseTcn<float>> siamese_;
  std::shared_ptr<models::SiameseResidualAutoencoder<float>> autoencoder_;
};

/// FNV-1a over the bytes of every tensor, as hex.
std::string parameter_digest(const nn::TensorList<float>& tensors);

/// Model inputs of a window or feature set: [N, C, W] or [N, D].
nn::Tensor<float> window_tensor(const data::WindowSet& ws, const std::vector<std::size_t>& idx);
nn::Tensor<float> window_tensor(const data::WindowSet& ws);
nn::Tensor<float> feature_tensor(const features::FeatureSet& fs, const std::vector<std::size_t>& idx);
nn::Tensor<float> feature_tensor(const features::FeatureSet& fs);

struct EpochRecord {
  int stage = 1;
  std::size_t epoch = 0;  // 1-based within the stage
  double loss = 0.0;      // per sample (or per pair) average
  std::map<std::string, double> components;
  std::optional<double> val_loss;

  nlohmann::json to_json() const;
};

struct TrainOptions {
  /// Directory for the stage-1 checkpoint of the two-stage regime; a
  /// temporary directory is used (and removed) when empty.
  std::filesystem::path work_dir;
  /// When set, stage-1 checkpoints are looked up here by TrainConfig::stage1_hash
  /// and reused instead of retraining.
  std::filesystem::path stage1_cache;
  bool validation = true;
  std::function<void(const EpochRecord&)> on_epoch;
};

struct TrainResult {
  Model model;
  TrainConfig config;  // with resolved input dimensions
  std::vector<EpochRecord> log;
  std::vector<std::size_t> labeled;  // positions into the train split
  std::vector<std::string> deviations;
  std::string stage1_final_digest;
  std::string stage2_initial_digest;
  bool stage1_reused = false;
  nlohmann::json manifest;
};

/// Resolves input dimensions of cfg against prepared data.
TrainConfig resolve_dimensions(TrainConfig cfg, const PreparedData& data);

/// Throws std::invalid_argument on a regime/data mismatch, naming the missing preparation step.
void check_prepared(const TrainConfig& cfg, const PreparedData& data);

TrainResult train(const TrainConfig& cfg, const PreparedData& data, const TrainOptions& opts = {});

/// Test-split evaluation: classifier argmax for supervised, k-means with
/// k = classes for every other regime, plus person accuracy for weak_multi.
eval::EvalReport evaluate(const Model& model, const TrainConfig& cfg, const PreparedData& data);

/// Checkpoint with the resolved config and standardizers in the header.
void save_model(const std::filesystem::path& path, const TrainResult& result, const PreparedData& data);

struct LoadedModel {
  Model model;
  TrainConfig config;
  nlohmann::json header;
};

/// Throws std::runtime_error when the file is missing or is not a model checkpoint.
LoadedModel load_model(const std::filesystem::path& path);

}  // namespace har::training
