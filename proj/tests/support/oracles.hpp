#pragma once

// Brute-force reference implementations shared by unit and acceptance tests.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "har/features/features.hpp"

namespace oracle {

// Full sort by (squared distance, index), self excluded.
inline std::vector<std::size_t> knn(const har::features::FeatureSet& fs, std::size_t i, std::size_t k) {
  std::vector<std::pair<double, std::size_t>> all;
  for (std::size_t j = 0; j < fs.rows; ++j) {
    if (j == i) continue;
    double d = 0;
    for (std::size_t c = 0; c < fs.cols; ++c) {
      const double diff = double(fs.at(i, c)) - double(fs.at(j, c));
      d += diff * diff;
    }
    all.emplace_back(d, j);
  }
  std::sort(all.begin(), all.end());
  std::vector<std::size_t> out;
  for (std::size_t r = 0; r < k; ++r) out.push_back(all[r].second);
  return out;
}

// Best matched count over every permutation of m cluster ids onto m labels.
inline std::size_t best_permutation_matches(const std::vector<int>& clusters, const std::vector<int>& labels, int m) {
  std::vector<int> perm(static_cast<std::size_t>(m));
  std::iota(perm.begin(), perm.end(), 0);
  std::size_t best = 0;
  do {
    std::size_t hit = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) hit += perm[static_cast<std::size_t>(clusters[i])] == labels[i];
    best = std::max(best, hit);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

// Linear interpolation between closest ranks (R type 7), by definition.
inline double quantile_type7(std::vector<double> v, double p) {
  std::sort(v.begin(), v.end());
  const double h = (static_cast<double>(v.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

}  // namespace oracle
