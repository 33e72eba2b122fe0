#pragma once

#include <optional>

#include "har/data/types.hpp"

namespace har::data {

/// Majority vote over per-timestep labels. A window is kept when its most
/// frequent label covers at least min_share of the window and is not
/// kUnlabeled; ties go to the label that occurs first.
struct LabelRule {
  double min_share = 0.5;
};

struct SegmentResult {
  std::vector<Window> windows;
  std::size_t discarded_mixed = 0;
  std::optional<std::string> warning;
};

/// Windows start at 0, step, 2*step, ...; a trailing partial window is dropped.
SegmentResult segment(const SensorStream& stream, int stream_id, std::size_t window_len, std::size_t step,
                      LabelRule rule = {});

/// Keeps every factor-th sample of channels and labels.
SensorStream downsample(const SensorStream& stream, int factor);

/// Segments every stream (stream_id = position in `streams`) into one ordered set.
WindowSet make_window_set(const std::vector<SensorStream>& streams, std::size_t window_len, std::size_t step,
                          WindowSetMeta meta, IngestReport* report = nullptr, LabelRule rule = {});

/// Window length and step in samples for a duration at a sample rate.
std::size_t seconds_to_samples(double seconds, double sample_rate_hz);

}  // namespace har::data
