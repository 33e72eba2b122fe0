#include "har/features/features.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "har/io.hpp"

namespace har::features {

double quantile_sorted(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw std::invalid_argument("quantile of empty data");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

std::array<double, kStatsPerChannel> channel_stats(std::span<const float> samples) {
  const std::size_t w = samples.size();
  if (w < 2) throw std::invalid_argument("feature extraction needs windows of length >= 2, got " + std::to_string(w));
  std::vector<double> x(samples.begin(), samples.end());
  double sum = 0.0;
  for (double v : x) sum += v;
  const double mean = sum / static_cast<double>(w);
  double ss = 0.0;
  for (double v : x) ss += (v - mean) * (v - mean);
  const double var = ss / static_cast<double>(w);
  std::sort(x.begin(), x.end());
  const double median = quantile_sorted(x, 0.5);
  const double iqr = quantile_sorted(x, 0.75) - quantile_sorted(x, 0.25);
  return {mean, var, std::sqrt(var), median, x.back(), x.front(), iqr};
}

FeatureVector extract_features(const data::Window& w, std::size_t channels, std::size_t window_len,
                               std::size_t window_index) {
  if (w.values.size() != channels * window_len) {
    throw std::invalid_argument("extract_features: window has " + std::to_string(w.values.size()) +
                                " values, expected " + std::to_string(channels * window_len));
  }
  FeatureVector fv;
  fv.window_index = window_index;
  fv.values.reserve(channels * kStatsPerChannel);
  for (std::size_t c = 0; c < channels; ++c) {
    const auto st = channel_stats(std::span<const float>(w.values).subspan(c * window_len, window_len));
    for (double v : st) fv.values.push_back(static_cast<float>(v));
  }
  return fv;
}

FeatureSet FeatureSet::subset(const std::vector<std::size_t>& indices) const {
  FeatureSet out;
  out.rows = indices.size();
  out.cols = cols;
  out.column_names = column_names;
  out.values.reserve(out.rows * cols);
  for (std::size_t i : indices) {
    if (i >= rows) throw std::out_of_range("feature subset index " + std::to_string(i) + " out of range");
    const auto r = row(i);
    out.values.insert(out.values.end(), r.begin(), r.end());
  }
  return out;
}

FeatureSet extract_feature_set(const data::WindowSet& ws) {
  FeatureSet fs;
  const std::size_t C = ws.num_channels();
  fs.rows = ws.size();
  fs.cols = C * kStatsPerChannel;
  for (const auto& ch : ws.meta.channel_names) {
    for (auto stat : kStatNames) fs.column_names.push_back(ch + "_" + std::string(stat));
  }
  fs.values.reserve(fs.rows * fs.cols);
  for (std::size_t i = 0; i < ws.size(); ++i) {
    const auto fv = extract_features(ws.windows[i], C, ws.window_len(), i);
    fs.values.insert(fs.values.end(), fv.values.begin(), fv.values.end());
  }
  return fs;
}

FeatureStandardizer FeatureStandardizer::fit(const FeatureSet& train) {
  if (train.rows == 0) throw std::invalid_argument("feature standardizer: empty training set");
  FeatureStandardizer s;
  s.mean.assign(train.cols, 0.0);
  s.stddev.assign(train.cols, 0.0);
  for (std::size_t i = 0; i < train.rows; ++i) {
    for (std::size_t j = 0; j < train.cols; ++j) s.mean[j] += train.at(i, j);
  }
  for (auto& m : s.mean) m /= static_cast<double>(train.rows);
  for (std::size_t i = 0; i < train.rows; ++i) {
    for (std::size_t j = 0; j < train.cols; ++j) {
      const double d = train.at(i, j) - s.mean[j];
      s.stddev[j] += d * d;
    }
  }
  for (auto& v : s.stddev) v = std::sqrt(v / static_cast<double>(train.rows));
  return s;
}

FeatureSet FeatureStandardizer::apply(const FeatureSet& fs) const {
  if (fs.cols != mean.size()) {
    throw std::invalid_argument("feature standardizer fitted on " + std::to_string(mean.size()) +
                                " columns, data has " + std::to_string(fs.cols));
  }
  FeatureSet out = fs;
  for (std::size_t i = 0; i < fs.rows; ++i) {
    for (std::size_t j = 0; j < fs.cols; ++j) {
      if (stddev[j] > 0.0) out.values[i * fs.cols + j] = static_cast<float>((fs.at(i, j) - mean[j]) / stddev[j]);
    }
  }
  return out;
}

nlohmann::json FeatureStandardizer::to_json() const { return {{"mean", mean}, {"stddev", stddev}}; }

FeatureStandardizer FeatureStandardizer::from_json(const nlohmann::json& j) {
  FeatureStandardizer s;
  s.mean = j.at("mean").get<std::vector<double>>();
  s.stddev = j.at("stddev").get<std::vector<double>>();
  return s;
}

void write_feature_csv(const std::filesystem::path& path, const FeatureSet& fs) {
  std::ostringstream os;
  os.precision(9);
  for (std::size_t j = 0; j < fs.cols; ++j) os << (j ? "," : "") << fs.column_names[j];
  os << '\n';
  for (std::size_t i = 0; i < fs.rows; ++i) {
    for (std::size_t j = 0; j < fs.cols; ++j) os << (j ? "," : "") << fs.at(i, j);
    os << '\n';
  }
  io::write_text_file(path, os.str());
}

}  // namespace har::features
