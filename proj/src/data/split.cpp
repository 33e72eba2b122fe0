#include "har/data/split.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <stdexcept>

namespace har::data {

namespace {

void check_fractions(const std::array<double, 3>& f) {
  for (double x : f) {
    if (!(x >= 0.0)) throw std::invalid_argument("split fractions must be non-negative");
  }
  if (std::abs(f[0] + f[1] + f[2] - 1.0) > 1e-6) throw std::invalid_argument("split fractions must sum to 1");
}

// Sizes of the three parts for n items: rounded train and val, test takes the rest.
std::array<std::size_t, 3> part_sizes(std::size_t n, const std::array<double, 3>& f) {
  auto tr = static_cast<std::size_t>(std::llround(f[0] * static_cast<double>(n)));
  auto va = static_cast<std::size_t>(std::llround(f[1] * static_cast<double>(n)));
  tr = std::min(tr, n);
  va = std::min(va, n - tr);
  std::array<std::size_t, 3> s{tr, va, n - tr - va};
  // Every non-empty part receives at least one item when there are enough.
  for (std::size_t p = 0; p < 3; ++p) {
    if (f[p] > 0.0 && s[p] == 0) {
      const auto donor = static_cast<std::size_t>(std::max_element(s.begin(), s.end()) - s.begin());
      --s[donor];
      ++s[p];
    }
  }
  return s;
}

std::size_t nonempty_parts(const std::array<double, 3>& f) {
  return static_cast<std::size_t>(std::count_if(f.begin(), f.end(), [](double x) { return x > 0.0; }));
}

}  // namespace

Split stratified_split(const WindowSet& ws, std::array<double, 3> fractions, std::uint64_t seed, SplitMode mode) {
  check_fractions(fractions);
  const std::size_t parts = nonempty_parts(fractions);
  std::mt19937_64 rng(seed);
  std::array<std::vector<std::size_t>, 3> out;

  if (mode == SplitMode::window) {
    std::map<int, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < ws.size(); ++i) by_class[ws.windows[i].activity].push_back(i);
    for (auto& [cls, idx] : by_class) {
      if (idx.size() < parts) {
        std::string name = std::to_string(cls);
        if (cls >= 0 && static_cast<std::size_t>(cls) < ws.meta.activity_names.size()) {
          name += " (" + ws.meta.activity_names[static_cast<std::size_t>(cls)] + ")";
        }
        throw std::invalid_argument("stratified split: class " + name + " has " + std::to_string(idx.size()) +
                                    " windows, fewer than the " + std::to_string(parts) + " requested splits");
      }
      std::shuffle(idx.begin(), idx.end(), rng);
      const auto sizes = part_sizes(idx.size(), fractions);
      std::size_t pos = 0;
      for (std::size_t p = 0; p < 3; ++p) {
        out[p].insert(out[p].end(), idx.begin() + static_cast<std::ptrdiff_t>(pos),
                      idx.begin() + static_cast<std::ptrdiff_t>(pos + sizes[p]));
        pos += sizes[p];
      }
    }
  } else {
    std::vector<int> subjects;
    for (const auto& w : ws.windows) subjects.push_back(w.person);
    std::sort(subjects.begin(), subjects.end());
    subjects.erase(std::unique(subjects.begin(), subjects.end()), subjects.end());
    if (subjects.size() < parts) {
      throw std::invalid_argument("subject split: " + std::to_string(subjects.size()) + " subjects, fewer than the " +
                                  std::to_string(parts) + " requested splits");
    }
    std::shuffle(subjects.begin(), subjects.end(), rng);
    const auto sizes = part_sizes(subjects.size(), fractions);
    std::map<int, std::size_t> part_of;
    std::size_t pos = 0;
    for (std::size_t p = 0; p < 3; ++p) {
      for (std::size_t k = 0; k < sizes[p]; ++k) part_of[subjects[pos++]] = p;
    }
    for (std::size_t i = 0; i < ws.size(); ++i) out[part_of[ws.windows[i].person]].push_back(i);
  }
  for (auto& v : out) std::sort(v.begin(), v.end());
  return {std::move(out[0]), std::move(out[1]), std::move(out[2])};
}

LabelSubset subsample_labels(const std::vector<int>& activities, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw std::invalid_argument("subsample_labels: fraction must be in (0, 1], got " + std::to_string(fraction));
  }
  LabelSubset result;
  const std::size_t n = activities.size();
  if (fraction == 1.0) {
    result.indices.resize(n);
    std::iota(result.indices.begin(), result.indices.end(), std::size_t{0});
    return result;
  }
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < n; ++i) by_class[activities[i]].push_back(i);

  const auto target = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
  struct Quota {
    int cls;
    std::size_t take;
    double remainder;
  };
  std::vector<Quota> quotas;
  std::size_t assigned = 0;
  for (const auto& [cls, idx] : by_class) {
    const double ideal = fraction * static_cast<double>(idx.size());
    const auto base = static_cast<std::size_t>(std::floor(ideal));
    quotas.push_back({cls, base, ideal - static_cast<double>(base)});
    assigned += base;
  }
  std::vector<std::size_t> order(quotas.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return quotas[a].remainder > quotas[b].remainder; });
  for (std::size_t k = 0; assigned < target && k < order.size(); ++k, ++assigned) ++quotas[order[k]].take;
  for (auto& q : quotas) {
    if (q.take == 0) {
      q.take = 1;
      result.deviations.push_back("class " + std::to_string(q.cls) + " would receive 0 labeled windows at fraction " +
                                  std::to_string(fraction) + "; kept 1");
    }
  }

  std::mt19937_64 rng(seed);
  for (const auto& q : quotas) {
    auto idx = by_class[q.cls];
    std::shuffle(idx.begin(), idx.end(), rng);
    result.indices.insert(result.indices.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(q.take));
  }
  std::sort(result.indices.begin(), result.indices.end());
  return result;
}

ChannelStandardizer ChannelStandardizer::fit(const WindowSet& train) {
  const std::size_t C = train.num_channels(), W = train.window_len();
  if (train.size() == 0) throw std::invalid_argument("standardizer: empty training set");
  std::vector<double> sum(C, 0.0), sq(C, 0.0);
  for (const auto& w : train.windows) {
    for (std::size_t c = 0; c < C; ++c) {
      for (std::size_t t = 0; t < W; ++t) {
        const double v = w.values[c * W + t];
        sum[c] += v;
        sq[c] += v * v;
      }
    }
  }
  const double n = static_cast<double>(train.size() * W);
  ChannelStandardizer s;
  s.mean.resize(C);
  s.stddev.resize(C);
  for (std::size_t c = 0; c < C; ++c) {
    s.mean[c] = sum[c] / n;
    s.stddev[c] = std::sqrt(std::max(0.0, sq[c] / n - s.mean[c] * s.mean[c]));
  }
  return s;
}

void ChannelStandardizer::apply(WindowSet& ws) const {
  const std::size_t C = ws.num_channels(), W = ws.window_len();
  if (C != mean.size()) {
    throw std::invalid_argument("standardizer fitted on " + std::to_string(mean.size()) + " channels, data has " +
                                std::to_string(C));
  }
  for (auto& w : ws.windows) {
    for (std::size_t c = 0; c < C; ++c) {
      const double inv = stddev[c] > 0.0 ? 1.0 / stddev[c] : 1.0;
      for (std::size_t t = 0; t < W; ++t) {
        auto& v = w.values[c * W + t];
        v = static_cast<float>((v - mean[c]) * inv);
      }
    }
  }
}

nlohmann::json ChannelStandardizer::to_json() const { return {{"mean", mean}, {"stddev", stddev}}; }

ChannelStandardizer ChannelStandardizer::from_json(const nlohmann::json& j) {
  ChannelStandardizer s;
  s.mean = j.at("mean").get<std::vector<double>>();
  s.stddev = j.at("stddev").get<std::vector<double>>();
  return s;
}

}  // namespace har::data
