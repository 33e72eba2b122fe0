#pragma once

#include <array>
#include <cstdint>

#include "har/data/types.hpp"

namespace har::data {

/// Ascending window indices of each part.
struct Split {
  std::vector<std::size_t> train, val, test;
};

enum class SplitMode { window, subject };

/// Window mode: per activity, shuffle and cut round(f0 n) / round(f1 n) / rest.
/// Subject mode: whole subjects are assigned to parts, so per-class balance is
/// only approximate. Throws std::invalid_argument naming the offending class
/// (or the subject count) when there are too few items for the non-empty parts.
Split stratified_split(const WindowSet& ws, std::array<double, 3> fractions, std::uint64_t seed,
                       SplitMode mode = SplitMode::window);

struct LabelSubset {
  std::vector<std::size_t> indices;  // ascending positions into the input labels
  std::vector<std::string> deviations;
};

/// Stratified subset of size round(fraction N) by largest remainder. A class
/// that would get 0 windows keeps 1 and the deviation is recorded.
LabelSubset subsample_labels(const std::vector<int>& activities, double fraction, std::uint64_t seed);

/// Per-channel z-score over all timesteps of the fitted windows.
struct ChannelStandardizer {
  std::vector<double> mean, stddev;

  static ChannelStandardizer fit(const WindowSet& train);
  /// Channels with zero spread are only centred.
  void apply(WindowSet& ws) const;
  nlohmann::json to_json() const;
  static ChannelStandardizer from_json(const nlohmann::json& j);
};

}  // namespace har::data
