#include "har/eval/metrics.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

namespace har::eval {

std::vector<std::vector<std::size_t>> confusion_matrix(const std::vector<int>& predicted, const std::vector<int>& labels,
                                                       std::size_t classes) {
  if (predicted.size() != labels.size()) throw std::invalid_argument("confusion matrix: size mismatch");
  const bool unmatched = std::any_of(predicted.begin(), predicted.end(),
                                     [&](int p) { return p < 0 || static_cast<std::size_t>(p) >= classes; });
  std::vector<std::vector<std::size_t>> m(classes, std::vector<std::size_t>(classes + (unmatched ? 1 : 0), 0));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= classes) {
      throw std::out_of_range("confusion matrix: label " + std::to_string(labels[i]) + " outside [0, " +
                              std::to_string(classes) + ")");
    }
    const bool in_range = predicted[i] >= 0 && static_cast<std::size_t>(predicted[i]) < classes;
    ++m[static_cast<std::size_t>(labels[i])][in_range ? static_cast<std::size_t>(predicted[i]) : classes];
  }
  return m;
}

double macro_f1(const std::vector<int>& predicted, const std::vector<int>& labels) {
  if (predicted.size() != labels.size()) throw std::invalid_argument("macro_f1: size mismatch");
  std::set<int> classes(labels.begin(), labels.end());
  for (int p : predicted) {
    if (p >= 0) classes.insert(p);
  }
  if (classes.empty()) return 0.0;
  double total = 0.0;
  for (int c : classes) {
    std::size_t tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      const bool is_pred = predicted[i] == c, is_true = labels[i] == c;
      tp += is_pred && is_true;
      fp += is_pred && !is_true;
      fn += !is_pred && is_true;
    }
    if (tp > 0) total += 2.0 * static_cast<double>(tp) / static_cast<double>(2 * tp + fp + fn);
  }
  return total / static_cast<double>(classes.size());
}

double accuracy(const std::vector<int>& predicted, const std::vector<int>& labels) {
  if (predicted.size() != labels.size() || labels.empty()) throw std::invalid_argument("accuracy: bad input sizes");
  std::size_t hit = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) hit += predicted[i] == labels[i];
  return static_cast<double>(hit) / static_cast<double>(labels.size());
}

double person_accuracy(const Matrix& person_embeddings, const std::vector<int>& subjects, std::size_t restarts,
                       std::uint64_t seed) {
  const std::size_t s = std::set<int>(subjects.begin(), subjects.end()).size();
  if (s <= 1) return 1.0;
  const auto km = kmeans(person_embeddings, {s, restarts, 300, seed});
  return cluster_accuracy(km.assignments, subjects).accuracy;
}

nlohmann::json EvalReport::to_json() const {
  nlohmann::json mapping = nlohmann::json::object();
  for (const auto& [c, l] : cluster_to_label) mapping[std::to_string(c)] = l;
  nlohmann::json j = {{"regime", regime},
                      {"method", method},
                      {"accuracy", accuracy},
                      {"macro_f1", macro_f1},
                      {"person_accuracy", person_accuracy ? nlohmann::json(*person_accuracy) : nlohmann::json()},
                      {"samples", samples},
                      {"classes", classes},
                      {"confusion", confusion},
                      {"cluster_to_label", mapping},
                      {"config_hash", config_hash},
                      {"extra", extra}};
  return j;
}

EvalReport evaluate_clustering(const Matrix& embeddings, const std::vector<int>& labels, std::size_t classes,
                               std::size_t restarts, std::uint64_t seed) {
  if (static_cast<std::size_t>(embeddings.rows()) != labels.size()) {
    throw std::invalid_argument("evaluate_clustering: embedding rows and labels differ");
  }
  const auto km = kmeans(embeddings, {classes, restarts, 300, seed});
  EvalReport r = evaluate_assignments(km.assignments, labels, classes);
  r.extra["inertia"] = km.inertia;
  return r;
}

EvalReport evaluate_assignments(const std::vector<int>& clusters, const std::vector<int>& labels, std::size_t classes) {
  const auto map = cluster_accuracy(clusters, labels);
  EvalReport r;
  r.method = "kmeans";
  r.accuracy = map.accuracy;
  r.macro_f1 = macro_f1(map.mapped, labels);
  r.samples = labels.size();
  r.classes = classes;
  r.confusion = confusion_matrix(map.mapped, labels, classes);
  r.cluster_to_label = map.cluster_to_label;
  return r;
}

EvalReport evaluate_predictions(const std::vector<int>& predicted, const std::vector<int>& labels, std::size_t classes) {
  EvalReport r;
  r.method = "classifier";
  r.accuracy = accuracy(predicted, labels);
  r.macro_f1 = macro_f1(predicted, labels);
  r.samples = labels.size();
  r.classes = classes;
  r.confusion = confusion_matrix(predicted, labels, classes);
  return r;
}

}  // namespace har::eval
