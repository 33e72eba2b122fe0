#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "har/eval/clustering.hpp"

namespace har::eval {

/// Projection onto the two leading principal components (centred data).
Matrix pca_2d(const Matrix& points);

struct TsneOptions {
  double perplexity = 30.0;
  std::size_t iterations = 1000;
  double learning_rate = 200.0;
  double early_exaggeration = 12.0;
  std::size_t exaggeration_iterations = 250;
  std::size_t max_points = 3000;
  std::uint64_t seed = 0;
};

/// Exact O(N^2) t-SNE. Throws std::invalid_argument when N exceeds
/// max_points (use pca or subsample) or when perplexity >= N.
Matrix tsne_2d(const Matrix& points, const TsneOptions& opts);

/// Mean silhouette coefficient; samples alone in their cluster score 0.
double silhouette_score(const Matrix& points, const std::vector<int>& labels);

/// x,y,label rows.
void write_projection_csv(const std::filesystem::path& path, const Matrix& coords, const std::vector<int>& labels);

/// Scatter plot coloured by label, with a legend of label names.
void write_scatter_svg(const std::filesystem::path& path, const Matrix& coords, const std::vector<int>& labels,
                       const std::vector<std::string>& label_names, const std::string& title);

}  // namespace har::eval
