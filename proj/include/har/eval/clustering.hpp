#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include <Eigen/Dense>

namespace har::eval {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct KMeansOptions {
  std::size_t k = 2;
  std::size_t restarts = 10;
  std::size_t max_iter = 300;
  std::uint64_t seed = 0;  // restart r uses seed + r
};

struct KMeansResult {
  std::vector<int> assignments;
  Matrix centroids;
  double inertia = 0.0;
  std::vector<double> restart_inertia;
  std::vector<double> inertia_trace;  // after each assignment step of the winning restart
  std::size_t iterations = 0;
};

/// Lloyd iterations from k-means++ seeds, best restart by inertia. Ties in
/// the nearest-centroid search go to the lower cluster id. An emptied cluster
/// takes the point farthest from its centroid. Throws std::invalid_argument
/// unless 1 <= k <= N.
KMeansResult kmeans(const Matrix& points, const KMeansOptions& opts);

/// Maximum-weight matching of rows to columns for a rectangular matrix;
/// result[r] is the column of row r, or -1 when rows outnumber columns.
std::vector<int> max_weight_assignment(const std::vector<std::vector<double>>& weights);

struct ClusterMapping {
  double accuracy = 0.0;
  std::size_t matched = 0;
  std::map<int, int> cluster_to_label;  // unmatched clusters are absent
  std::vector<int> mapped;              // per sample, -1 when its cluster is unmatched
};

/// One-to-one cluster -> label mapping maximising the matched count.
/// Throws std::invalid_argument on empty or mismatched input.
ClusterMapping cluster_accuracy(const std::vector<int>& clusters, const std::vector<int>& labels);

/// Each cluster to its most frequent unused label, largest clusters first.
ClusterMapping greedy_cluster_accuracy(const std::vector<int>& clusters, const std::vector<int>& labels);

}  // namespace har::eval
