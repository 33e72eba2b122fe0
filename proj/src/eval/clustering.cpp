#include "har/eval/clustering.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>

namespace har::eval {

namespace {

struct Run {
  std::vector<int> assign;
  Matrix centroids;
  double inertia;
  std::vector<double> trace;
  std::size_t iterations;
};

Matrix plus_plus_seeds(const Matrix& x, std::size_t k, std::mt19937_64& rng) {
  const auto n = static_cast<std::size_t>(x.rows());
  Matrix c(static_cast<Eigen::Index>(k), x.cols());
  std::uniform_int_distribution<std::size_t> first(0, n - 1);
  c.row(0) = x.row(static_cast<Eigen::Index>(first(rng)));
  std::vector<double> d2(n, std::numeric_limits<double>::infinity());
  for (std::size_t j = 1; j < k; ++j) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i], (x.row(static_cast<Eigen::Index>(i)) - c.row(static_cast<Eigen::Index>(j - 1))).squaredNorm());
      total += d2[i];
    }
    std::size_t pick = 0;
    if (total > 0.0) {
      std::uniform_real_distribution<double> u(0.0, total);
      double r = u(rng), acc = 0.0;
      pick = n - 1;
      for (std::size_t i = 0; i < n; ++i) {
        acc += d2[i];
        if (r < acc) {
          pick = i;
          break;
        }
      }
    } else {
      pick = first(rng);
    }
    c.row(static_cast<Eigen::Index>(j)) = x.row(static_cast<Eigen::Index>(pick));
  }
  return c;
}

Run lloyd(const Matrix& x, Matrix c, std::size_t max_iter) {
  const auto n = static_cast<std::size_t>(x.rows());
  const auto k = static_cast<std::size_t>(c.rows());
  Run run{std::vector<int>(n, -1), std::move(c), 0.0, {}, 0};
  std::vector<double> dist(n);
  for (std::size_t it = 0; it < max_iter; ++it) {
    bool changed = false;
    double inertia = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      int best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < k; ++j) {
        const double d = (x.row(static_cast<Eigen::Index>(i)) - run.centroids.row(static_cast<Eigen::Index>(j))).squaredNorm();
        if (d < best_d) {
          best_d = d;
          best = static_cast<int>(j);
        }
      }
      changed = changed || run.assign[i] != best;
      run.assign[i] = best;
      dist[i] = best_d;
      inertia += best_d;
    }
    run.trace.push_back(inertia);
    run.inertia = inertia;
    run.iterations = it + 1;
    if (!changed && it > 0) break;

    Matrix sums = Matrix::Zero(static_cast<Eigen::Index>(k), x.cols());
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      sums.row(run.assign[i]) += x.row(static_cast<Eigen::Index>(i));
      ++counts[static_cast<std::size_t>(run.assign[i])];
    }
    for (std::size_t j = 0; j < k; ++j) {
      if (counts[j] > 0) {
        run.centroids.row(static_cast<Eigen::Index>(j)) = sums.row(static_cast<Eigen::Index>(j)) / static_cast<double>(counts[j]);
        continue;
      }
      const auto far = static_cast<std::size_t>(std::max_element(dist.begin(), dist.end()) - dist.begin());
      run.centroids.row(static_cast<Eigen::Index>(j)) = x.row(static_cast<Eigen::Index>(far));
      dist[far] = 0.0;
    }
  }
  return run;
}

void check_pair(const std::vector<int>& clusters, const std::vector<int>& labels) {
  if (clusters.empty()) throw std::invalid_argument("cluster accuracy: empty input");
  if (clusters.size() != labels.size()) {
    throw std::invalid_argument("cluster accuracy: " + std::to_string(clusters.size()) + " assignments for " +
                                std::to_string(labels.size()) + " labels");
  }
}

// Dense ids for the distinct values of v.
std::vector<int> distinct(const std::vector<int>& v) {
  std::vector<int> d(v);
  std::sort(d.begin(), d.end());
  d.erase(std::unique(d.begin(), d.end()), d.end());
  return d;
}

std::size_t index_of(const std::vector<int>& sorted, int v) {
  return static_cast<std::size_t>(std::lower_bound(sorted.begin(), sorted.end(), v) - sorted.begin());
}

ClusterMapping finish(const std::vector<int>& clusters, const std::vector<int>& labels, std::map<int, int> mapping) {
  ClusterMapping m;
  m.cluster_to_label = std::move(mapping);
  m.mapped.resize(clusters.size());
  for (std::size_t i = 0; i < clusters.size(); ++i) {
    auto it = m.cluster_to_label.find(clusters[i]);
    m.mapped[i] = it == m.cluster_to_label.end() ? -1 : it->second;
    if (m.mapped[i] == labels[i]) ++m.matched;
  }
  m.accuracy = static_cast<double>(m.matched) / static_cast<double>(clusters.size());
  return m;
}

}  // namespace

KMeansResult kmeans(const Matrix& points, const KMeansOptions& opts) {
  const auto n = static_cast<std::size_t>(points.rows());
  if (opts.k == 0 || opts.k > n) {
    throw std::invalid_argument("kmeans: k=" + std::to_string(opts.k) + " must satisfy 1 <= k <= N=" + std::to_string(n));
  }
  const std::size_t restarts = std::max<std::size_t>(1, opts.restarts);
  KMeansResult best;
  best.inertia = std::numeric_limits<double>::infinity();
  for (std::size_t r = 0; r < restarts; ++r) {
    std::mt19937_64 rng(opts.seed + r);
    Run run = lloyd(points, plus_plus_seeds(points, opts.k, rng), std::max<std::size_t>(1, opts.max_iter));
    best.restart_inertia.push_back(run.inertia);
    if (run.inertia < best.inertia) {
      best.assignments = std::move(run.assign);
      best.centroids = std::move(run.centroids);
      best.inertia = run.inertia;
      best.inertia_trace = std::move(run.trace);
      best.iterations = run.iterations;
    }
  }
  return best;
}

std::vector<int> max_weight_assignment(const std::vector<std::vector<double>>& weights) {
  const std::size_t rows = weights.size();
  if (rows == 0) return {};
  const std::size_t cols = weights[0].size();
  const std::size_t n = std::max(rows, cols);
  double top = 0.0;
  for (const auto& r : weights) {
    if (r.size() != cols) throw std::invalid_argument("assignment: ragged weight matrix");
    for (double w : r) top = std::max(top, w);
  }
  // Square min-cost problem on (top - w), padded with cost top.
  auto cost = [&](std::size_t i, std::size_t j) {
    return (i < rows && j < cols) ? top - weights[i][j] : top;
  };
  // Potentials-based Hungarian, 1-indexed.
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = p[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0);
  }
  std::vector<int> result(rows, -1);
  for (std::size_t j = 1; j <= n; ++j) {
    if (p[j] >= 1 && p[j] <= rows && j <= cols) result[p[j] - 1] = static_cast<int>(j - 1);
  }
  return result;
}

ClusterMapping cluster_accuracy(const std::vector<int>& clusters, const std::vector<int>& labels) {
  check_pair(clusters, labels);
  const auto cids = distinct(clusters), lids = distinct(labels);
  std::vector<std::vector<double>> table(cids.size(), std::vector<double>(lids.size(), 0.0));
  for (std::size_t i = 0; i < clusters.size(); ++i) table[index_of(cids, clusters[i])][index_of(lids, labels[i])] += 1.0;
  const auto match = max_weight_assignment(table);
  std::map<int, int> mapping;
  for (std::size_t r = 0; r < cids.size(); ++r) {
    if (match[r] >= 0) mapping[cids[r]] = lids[static_cast<std::size_t>(match[r])];
  }
  return finish(clusters, labels, std::move(mapping));
}

ClusterMapping greedy_cluster_accuracy(const std::vector<int>& clusters, const std::vector<int>& labels) {
  check_pair(clusters, labels);
  const auto cids = distinct(clusters), lids = distinct(labels);
  std::vector<std::vector<std::size_t>> table(cids.size(), std::vector<std::size_t>(lids.size(), 0));
  std::vector<std::size_t> size(cids.size(), 0);
  for (std::size_t i = 0; i < clusters.size(); ++i) {
    const auto r = index_of(cids, clusters[i]);
    ++table[r][index_of(lids, labels[i])];
    ++size[r];
  }
  std::vector<std::size_t> order(cids.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return size[a] > size[b]; });
  std::vector<char> taken(lids.size(), 0);
  std::map<int, int> mapping;
  for (std::size_t r : order) {
    std::size_t best = lids.size();
    for (std::size_t c = 0; c < lids.size(); ++c) {
      if (!taken[c] && (best == lids.size() || table[r][c] > table[r][best])) best = c;
    }
    if (best == lids.size()) continue;
    taken[best] = 1;
    mapping[cids[r]] = lids[best];
  }
  return finish(clusters, labels, std::move(mapping));
}

}  // namespace har::eval
