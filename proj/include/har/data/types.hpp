#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

namespace har::data {

/// Label value for timesteps outside any annotated activity.
inline constexpr int kUnlabeled = -1;

/// One subject's continuous recording. channels[c][t], labels[t].
struct SensorStream {
  int subject_id = 0;
  double sample_rate_hz = 50.0;
  std::vector<std::string> channel_names;
  std::vector<std::vector<float>> channels;
  std::vector<int> labels;

  std::size_t length() const { return labels.size(); }
  std::size_t num_channels() const { return channels.size(); }
  /// Throws if series lengths disagree or the sample rate is not positive.
  void validate() const;
};

/// Fixed-length segment, values laid out channel-major (C x W).
struct Window {
  std::vector<float> values;
  int activity = 0;
  int person = 0;
  std::size_t stream_pos = 0;
  int stream_id = 0;
};

struct WindowSetMeta {
  std::string dataset;
  std::vector<std::string> channel_names;
  std::vector<std::string> activity_names;
  std::size_t num_activities = 0;
  std::size_t window_len = 0;
  std::size_t step = 0;
  double sample_rate_hz = 0.0;
  nlohmann::json extra = nlohmann::json::object();
};

/// Windows ordered by (stream_id, stream_pos). Temporal neighbourhoods rely on it.
struct WindowSet {
  WindowSetMeta meta;
  std::vector<Window> windows;

  std::size_t size() const { return windows.size(); }
  std::size_t num_channels() const { return meta.channel_names.size(); }
  std::size_t window_len() const { return meta.window_len; }

  std::vector<int> activities() const;
  std::vector<int> persons() const;
  /// Windows at the given (ascending) indices, metadata copied.
  WindowSet subset(const std::vector<std::size_t>& indices) const;
  /// Throws unless ordering, shapes and label ranges hold.
  void validate() const;
};

/// Counts and drops recorded while ingesting or windowing.
struct IngestReport {
  std::string dataset;
  std::size_t streams = 0;
  std::size_t rows_read = 0;
  std::size_t rows_dropped_invalid = 0;
  std::size_t rows_unknown_activity = 0;
  std::size_t windows = 0;
  std::size_t windows_discarded_mixed = 0;
  std::map<int, std::size_t> windows_per_class;
  std::map<int, std::size_t> windows_per_subject;
  std::vector<std::string> warnings;

  nlohmann::json to_json() const;
};

}  // namespace har::data
