#include "har/neighbors/neighbors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace har::neighbors {

nlohmann::json NeighborIndex::to_json() const {
  return {{"kind", kind == NeighborKind::temporal ? "temporal" : "feature"},
          {"param", param},
          {"lists", lists},
          {"distances", distances}};
}

NeighborIndex temporal_neighbors(const data::WindowSet& ws, std::size_t radius) {
  NeighborIndex idx;
  idx.kind = NeighborKind::temporal;
  idx.param = radius;
  const std::size_t n = ws.size();
  idx.lists.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const int sid = ws.windows[i].stream_id;
    std::size_t lo = i;
    while (lo > 0 && i - lo < radius && ws.windows[lo - 1].stream_id == sid) --lo;
    std::size_t hi = i;
    while (hi + 1 < n && hi - i < radius && ws.windows[hi + 1].stream_id == sid) ++hi;
    for (std::size_t j = lo; j <= hi; ++j) idx.lists[i].push_back(j);
  }
  return idx;
}

NeighborIndex feature_knn(const features::FeatureSet& fs, std::size_t k, bool include_self) {
  const std::size_t n = fs.rows, d = fs.cols;
  const std::size_t candidates = include_self ? n : n - std::min<std::size_t>(n, 1);
  if (k == 0 || k > candidates) {
    throw std::invalid_argument("feature_knn: k=" + std::to_string(k) + " needs k < N (N=" + std::to_string(n) + ")");
  }
  NeighborIndex idx;
  idx.kind = NeighborKind::feature;
  idx.param = k;
  idx.lists.resize(n);
  idx.distances.resize(n);
  std::vector<double> dist(n);
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto a = fs.row(i);
    for (std::size_t j = 0; j < n; ++j) {
      const auto b = fs.row(j);
      double s = 0.0;
      for (std::size_t c = 0; c < d; ++c) {
        const double diff = static_cast<double>(a[c]) - static_cast<double>(b[c]);
        s += diff * diff;
      }
      dist[j] = s;
    }
    order.resize(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    if (!include_self) order.erase(order.begin() + static_cast<std::ptrdiff_t>(i));
    auto closer = [&](std::size_t x, std::size_t y) { return dist[x] < dist[y] || (dist[x] == dist[y] && x < y); };
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(), closer);
    for (std::size_t r = 0; r < k; ++r) {
      idx.lists[i].push_back(order[r]);
      idx.distances[i].push_back(std::sqrt(dist[order[r]]));
    }
  }
  return idx;
}

}  // namespace har::neighbors
