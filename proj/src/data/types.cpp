#include "har/data/types.hpp"

#include <stdexcept>

namespace har::data {

void SensorStream::validate() const {
  if (!(sample_rate_hz > 0.0)) throw std::invalid_argument("sensor stream: sample rate must be > 0");
  if (channel_names.size() != channels.size()) {
    throw std::invalid_argument("sensor stream: " + std::to_string(channel_names.size()) + " channel names for " +
                                std::to_string(channels.size()) + " channels");
  }
  for (std::size_t c = 0; c < channels.size(); ++c) {
    if (channels[c].size() != labels.size()) {
      throw std::invalid_argument("sensor stream: channel '" + channel_names[c] + "' has " +
                                  std::to_string(channels[c].size()) + " samples, labels have " +
                                  std::to_string(labels.size()));
    }
  }
}

std::vector<int> WindowSet::activities() const {
  std::vector<int> out;
  out.reserve(windows.size());
  for (const auto& w : windows) out.push_back(w.activity);
  return out;
}

std::vector<int> WindowSet::persons() const {
  std::vector<int> out;
  out.reserve(windows.size());
  for (const auto& w : windows) out.push_back(w.person);
  return out;
}

WindowSet WindowSet::subset(const std::vector<std::size_t>& indices) const {
  WindowSet out;
  out.meta = meta;
  out.windows.reserve(indices.size());
  for (std::size_t i : indices) {
    if (i >= windows.size()) throw std::out_of_range("window subset index " + std::to_string(i) + " out of range");
    out.windows.push_back(windows[i]);
  }
  return out;
}

void WindowSet::validate() const {
  const std::size_t expected = num_channels() * meta.window_len;
  for (std::size_t i = 0; i < windows.size(); ++i) {
    const auto& w = windows[i];
    if (w.values.size() != expected) {
      throw std::invalid_argument("window " + std::to_string(i) + " has " + std::to_string(w.values.size()) +
                                  " values, expected " + std::to_string(expected));
    }
    if (w.activity < 0 || (meta.num_activities && static_cast<std::size_t>(w.activity) >= meta.num_activities)) {
      throw std::invalid_argument("window " + std::to_string(i) + " activity " + std::to_string(w.activity) +
                                  " outside [0, " + std::to_string(meta.num_activities) + ")");
    }
    if (i > 0) {
      const auto& p = windows[i - 1];
      if (p.stream_id > w.stream_id || (p.stream_id == w.stream_id && p.stream_pos >= w.stream_pos)) {
        throw std::invalid_argument("windows not ordered by (stream_id, stream_pos) at index " + std::to_string(i));
      }
    }
  }
}

nlohmann::json IngestReport::to_json() const {
  nlohmann::json per_class = nlohmann::json::object();
  for (const auto& [k, v] : windows_per_class) per_class[std::to_string(k)] = v;
  nlohmann::json per_subject = nlohmann::json::object();
  for (const auto& [k, v] : windows_per_subject) per_subject[std::to_string(k)] = v;
  return {{"dataset", dataset},
          {"streams", streams},
          {"rows_read", rows_read},
          {"rows_dropped_invalid", rows_dropped_invalid},
          {"rows_unknown_activity", rows_unknown_activity},
          {"windows", windows},
          {"windows_discarded_mixed", windows_discarded_mixed},
          {"windows_per_class", per_class},
          {"windows_per_subject", per_subject},
          {"warnings", warnings}};
}

}  // namespace har::data
