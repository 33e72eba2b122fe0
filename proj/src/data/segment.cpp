#include "har/data/segment.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_map>

namespace har::data {

SegmentResult segment(const SensorStream& stream, int stream_id, std::size_t window_len, std::size_t step,
                      LabelRule rule) {
  stream.validate();
  if (window_len == 0) throw std::invalid_argument("segment: window length must be >= 1");
  if (step == 0) throw std::invalid_argument("segment: step must be >= 1");
  SegmentResult result;
  const std::size_t len = stream.length();
  if (window_len > len) {
    result.warning = "stream " + std::to_string(stream_id) + " (subject " + std::to_string(stream.subject_id) +
                     ") has " + std::to_string(len) + " samples, shorter than window length " +
                     std::to_string(window_len);
    return result;
  }
  const std::size_t channels = stream.num_channels();
  const double need = rule.min_share * static_cast<double>(window_len);
  for (std::size_t start = 0; start + window_len <= len; start += step) {
    std::unordered_map<int, std::size_t> counts;
    std::size_t best_count = 0;
    for (std::size_t t = start; t < start + window_len; ++t) {
      best_count = std::max(best_count, ++counts[stream.labels[t]]);
    }
    int best = kUnlabeled;
    for (std::size_t t = start; t < start + window_len; ++t) {
      if (counts[stream.labels[t]] == best_count) {
        best = stream.labels[t];
        break;
      }
    }
    if (best == kUnlabeled || static_cast<double>(best_count) < need) {
      ++result.discarded_mixed;
      continue;
    }
    Window w;
    w.values.resize(channels * window_len);
    for (std::size_t c = 0; c < channels; ++c) {
      std::copy(stream.channels[c].begin() + static_cast<std::ptrdiff_t>(start),
                stream.channels[c].begin() + static_cast<std::ptrdiff_t>(start + window_len),
                w.values.begin() + static_cast<std::ptrdiff_t>(c * window_len));
    }
    w.activity = best;
    w.person = stream.subject_id;
    w.stream_pos = start;
    w.stream_id = stream_id;
    result.windows.push_back(std::move(w));
  }
  return result;
}

SensorStream downsample(const SensorStream& stream, int factor) {
  if (factor <= 0) throw std::invalid_argument("downsample: factor must be >= 1, got " + std::to_string(factor));
  stream.validate();
  SensorStream out;
  out.subject_id = stream.subject_id;
  out.sample_rate_hz = stream.sample_rate_hz / factor;
  out.channel_names = stream.channel_names;
  out.channels.resize(stream.num_channels());
  const auto f = static_cast<std::size_t>(factor);
  for (std::size_t t = 0; t < stream.length(); t += f) {
    for (std::size_t c = 0; c < stream.num_channels(); ++c) out.channels[c].push_back(stream.channels[c][t]);
    out.labels.push_back(stream.labels[t]);
  }
  return out;
}

WindowSet make_window_set(const std::vector<SensorStream>& streams, std::size_t window_len, std::size_t step,
                          WindowSetMeta meta, IngestReport* report, LabelRule rule) {
  WindowSet ws;
  meta.window_len = window_len;
  meta.step = step;
  ws.meta = std::move(meta);
  for (std::size_t s = 0; s < streams.size(); ++s) {
    auto seg = segment(streams[s], static_cast<int>(s), window_len, step, rule);
    if (report) {
      report->windows_discarded_mixed += seg.discarded_mixed;
      if (seg.warning) report->warnings.push_back(*seg.warning);
    }
    for (auto& w : seg.windows) {
      if (report) {
        ++report->windows_per_class[w.activity];
        ++report->windows_per_subject[w.person];
      }
      ws.windows.push_back(std::move(w));
    }
  }
  if (report) {
    report->streams = streams.size();
    report->windows = ws.windows.size();
  }
  return ws;
}

std::size_t seconds_to_samples(double seconds, double sample_rate_hz) {
  return static_cast<std::size_t>(std::llround(seconds * sample_rate_hz));
}

}  // namespace har::data
