#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "har/eval/clustering.hpp"

namespace har::eval {

/// rows: true class 0..M-1, columns: predicted class 0..M-1. When some
/// prediction falls outside that range (an unmatched cluster) a final
/// column M collects them, so row sums always equal class counts.
std::vector<std::vector<std::size_t>> confusion_matrix(const std::vector<int>& predicted, const std::vector<int>& labels,
                                                       std::size_t classes);

/// Unweighted mean of per-class F1 over every class seen in labels or
/// predictions (negative predictions excluded). A class never predicted scores 0.
double macro_f1(const std::vector<int>& predicted, const std::vector<int>& labels);

double accuracy(const std::vector<int>& predicted, const std::vector<int>& labels);

/// k-means with k = number of subjects on person embeddings, then cluster accuracy.
double person_accuracy(const Matrix& person_embeddings, const std::vector<int>& subjects, std::size_t restarts,
                       std::uint64_t seed);

struct EvalReport {
  std::string regime;
  std::string method;  // "kmeans" or "classifier"
  double accuracy = 0.0;
  double macro_f1 = 0.0;
  std::optional<double> person_accuracy;
  std::size_t samples = 0;
  std::size_t classes = 0;
  std::vector<std::vector<std::size_t>> confusion;
  std::map<int, int> cluster_to_label;
  std::string config_hash;
  nlohmann::json extra = nlohmann::json::object();

  nlohmann::json to_json() const;
};

/// Clusters embeddings into `classes` groups and scores the mapped assignment.
EvalReport evaluate_clustering(const Matrix& embeddings, const std::vector<int>& labels, std::size_t classes,
                               std::size_t restarts, std::uint64_t seed);

/// Scores given cluster ids after the optimal cluster -> label mapping.
EvalReport evaluate_assignments(const std::vector<int>& clusters, const std::vector<int>& labels, std::size_t classes);

/// Scores direct class predictions.
EvalReport evaluate_predictions(const std::vector<int>& predicted, const std::vector<int>& labels, std::size_t classes);

}  // namespace har::eval
