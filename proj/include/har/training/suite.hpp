#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "har/training/trainer.hpp"

namespace har::training {

struct SuiteRow {
  TrainConfig config;
  std::optional<eval::EvalReport> report;  // absent when the run failed
  std::string error;
  nlohmann::json manifest;
  bool stage1_reused = false;
};

struct SuiteOptions {
  /// Stage-1 checkpoints are shared between two-stage rows through
  /// work_dir/stage1 (a temporary directory when empty).
  std::filesystem::path work_dir;
  bool validation = false;
  std::function<void(const SuiteRow&, std::size_t index)> on_row;
};

/// Trains and evaluates every config in order. A failing row records its
/// error and the suite carries on.
std::vector<SuiteRow> run_experiment_suite(const std::vector<TrainConfig>& configs, const data::WindowSet& ws,
                                           const SuiteOptions& opts = {});

/// Loss ablation rows, in order: ae, tc+ae, fc+ae, tc+fc+ae. Rows use the
/// self-supervised regime with the base weights switched on or off.
std::vector<TrainConfig> ablation_matrix(const TrainConfig& base);

/// One two-stage row per label fraction.
std::vector<TrainConfig> label_fraction_matrix(const TrainConfig& base, const std::vector<double>& fractions);

/// name,regime,label_fraction,seed,accuracy,macro_f1,person_accuracy,config_hash,error
std::string suite_csv(const std::vector<SuiteRow>& rows);
nlohmann::json suite_json(const std::vector<SuiteRow>& rows);

}  // namespace har::training
