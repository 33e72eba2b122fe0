#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace har::pairs {

/// Index pairs into a labelled pool. y_act = 1 iff both windows share an
/// activity; y_pers (quadruples only) = 1 iff they share a subject.
struct PairBatch {
  std::vector<std::size_t> a, b;
  std::vector<int> y_act, y_pers;
  std::vector<std::string> warnings;

  std::size_t size() const { return a.size(); }
  bool has_person() const { return !y_pers.empty(); }
};

/// Draws n_pairs pairs from `labeled` (positions into `labels`), of which
/// round(pos_ratio * n_pairs) are must-link. Anchors are uniform over windows
/// that admit a partner of the required kind; partners are uniform among
/// those. Throws std::invalid_argument when a required kind cannot exist.
PairBatch sample_pairs(const std::vector<std::size_t>& labeled, const std::vector<int>& labels, std::size_t n_pairs,
                       double pos_ratio, std::uint64_t seed);

/// Balanced over the four (y_act, y_pers) combinations. An unpopulated
/// combination's share is spread over the others and a warning recorded.
PairBatch sample_quadruples(const std::vector<std::size_t>& labeled, const std::vector<int>& activities,
                            const std::vector<int>& persons, std::size_t n_pairs, std::uint64_t seed);

/// index_a,index_b,y_act[,y_pers]
void write_pairs_csv(const std::filesystem::path& path, const PairBatch& batch);

}  // namespace har::pairs
