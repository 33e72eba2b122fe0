#pragma once

#include <cstddef>
#include <vector>

#include <json.hpp>

#include "har/data/types.hpp"
#include "har/features/features.hpp"

namespace har::neighbors {

enum class NeighborKind { temporal, feature };

struct NeighborIndex {
  NeighborKind kind = NeighborKind::temporal;
  std::size_t param = 0;  // radius or k
  std::vector<std::vector<std::size_t>> lists;
  std::vector<std::vector<double>> distances;  // feature kind only

  std::size_t size() const { return lists.size(); }
  const std::vector<std::size_t>& operator[](std::size_t i) const { return lists[i]; }
  nlohmann::json to_json() const;
};

/// P_i: positions i-radius .. i+radius of the set that share i's stream,
/// including i itself. Relies on (stream_id, stream_pos) ordering.
NeighborIndex temporal_neighbors(const data::WindowSet& ws, std::size_t radius);

/// Exact Euclidean k nearest rows, ties to the lower index. Self is excluded
/// unless include_self is set, in which case it competes as a candidate at
/// distance 0. Throws std::invalid_argument when k >= N (k > N with self).
NeighborIndex feature_knn(const features::FeatureSet& fs, std::size_t k, bool include_self = false);

}  // namespace har::neighbors
