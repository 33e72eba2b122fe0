#pragma once

#include <array>
#include <filesystem>
#include <span>
#include <string_view>

#include "har/data/types.hpp"

namespace har::features {

inline constexpr std::size_t kStatsPerChannel = 7;
inline constexpr std::array<std::string_view, kStatsPerChannel> kStatNames = {"mean", "var", "std", "median",
                                                                             "max",  "min", "iqr"};

/// Statistics of one channel, in kStatNames order. Variance uses 1/W,
/// quantiles interpolate linearly between order statistics (type 7).
/// Throws std::invalid_argument when fewer than 2 samples are given.
std::array<double, kStatsPerChannel> channel_stats(std::span<const float> samples);

/// Type-7 quantile of already sorted data, q in [0, 1].
double quantile_sorted(std::span<const double> sorted, double q);

struct FeatureVector {
  std::vector<float> values;  // C * 7, channel-major
  std::size_t window_index = 0;
};

FeatureVector extract_features(const data::Window& w, std::size_t channels, std::size_t window_len,
                               std::size_t window_index = 0);

/// N x D row-major matrix whose rows follow the source WindowSet order.
struct FeatureSet {
  std::size_t rows = 0, cols = 0;
  std::vector<float> values;
  std::vector<std::string> column_names;

  std::span<const float> row(std::size_t i) const { return {values.data() + i * cols, cols}; }
  float at(std::size_t i, std::size_t j) const { return values[i * cols + j]; }
  FeatureSet subset(const std::vector<std::size_t>& indices) const;
};

FeatureSet extract_feature_set(const data::WindowSet& ws);

/// Per-column z-score fitted on training features.
struct FeatureStandardizer {
  std::vector<double> mean, stddev;

  static FeatureStandardizer fit(const FeatureSet& train);
  /// Zero-std columns pass through unchanged. Throws on a column count mismatch.
  FeatureSet apply(const FeatureSet& fs) const;
  nlohmann::json to_json() const;
  static FeatureStandardizer from_json(const nlohmann::json& j);
};

/// Header row of "<channel>_<stat>" names, then one line per window.
void write_feature_csv(const std::filesystem::path& path, const FeatureSet& fs);

}  // namespace har::features
