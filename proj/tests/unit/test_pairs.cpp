#include <doctest.h>

#include <map>
#include <numeric>
#include <set>

#include "har/data/synth.hpp"
#include "har/pairs/pairs.hpp"

using namespace har::pairs;

namespace {

std::vector<std::size_t> all_indices(std::size_t n) {
  std::vector<std::size_t> v(n);
  std::iota(v.begin(), v.end(), 0);
  return v;
}

}  // namespace

TEST_CASE("sample_pairs hits the positive ratio") {
  std::vector<int> labels;
  for (int i = 0; i < 60; ++i) labels.push_back(i % 4);
  const auto batch = sample_pairs(all_indices(60), labels, 100, 0.5, 1);
  REQUIRE(batch.size() == 100);
  CHECK(std::accumulate(batch.y_act.begin(), batch.y_act.end(), 0) == 50);
  CHECK_FALSE(batch.has_person());
}

TEST_CASE("sample_pairs labels agree with ground truth") {
  std::vector<int> labels;
  for (int i = 0; i < 200; ++i) labels.push_back((i * 7) % 5);
  std::vector<std::size_t> labeled;
  for (std::size_t i = 0; i < 200; i += 3) labeled.push_back(i);
  const std::set<std::size_t> allowed(labeled.begin(), labeled.end());
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto batch = sample_pairs(labeled, labels, 300, 0.3, seed);
    for (std::size_t i = 0; i < batch.size(); ++i) {
      CHECK(batch.a[i] != batch.b[i]);
      CHECK(allowed.count(batch.a[i]));
      CHECK(allowed.count(batch.b[i]));
      CHECK(batch.y_act[i] == int(labels[batch.a[i]] == labels[batch.b[i]]));
    }
  }
}

TEST_CASE("sample_pairs errors on impossible kinds") {
  const std::vector<int> same(10, 3);
  CHECK_THROWS_AS(sample_pairs(all_indices(10), same, 20, 0.5, 0), std::invalid_argument);
  CHECK_NOTHROW(sample_pairs(all_indices(10), same, 20, 1.0, 0));
  const std::vector<int> distinct{0, 1, 2, 3};
  CHECK_THROWS_AS(sample_pairs(all_indices(4), distinct, 10, 0.5, 0), std::invalid_argument);
  CHECK_THROWS_AS(sample_pairs({0}, distinct, 10, 0.0, 0), std::invalid_argument);
}

TEST_CASE("sample_pairs is deterministic") {
  std::vector<int> labels;
  for (int i = 0; i < 50; ++i) labels.push_back(i % 3);
  const auto a = sample_pairs(all_indices(50), labels, 80, 0.5, 9);
  const auto b = sample_pairs(all_indices(50), labels, 80, 0.5, 9);
  const auto c = sample_pairs(all_indices(50), labels, 80, 0.5, 10);
  CHECK(a.a == b.a);
  CHECK(a.b == b.b);
  CHECK(a.y_act == b.y_act);
  CHECK((a.a != c.a || a.b != c.b));
}

TEST_CASE("quadruples are balanced on synthetic windows") {
  har::data::SynthSpec spec;
  spec.samples_per_class = 400;
  const auto ws = har::data::synthesize_windows(spec);
  const auto acts = ws.activities();
  const auto pers = ws.persons();
  for (std::size_t n : {400u, 401u, 403u}) {
    const auto batch = sample_quadruples(all_indices(acts.size()), acts, pers, n, 5);
    REQUIRE(batch.size() == n);
    REQUIRE(batch.has_person());
    CHECK(batch.warnings.empty());
    std::map<std::pair<int, int>, std::size_t> counts;
    for (std::size_t i = 0; i < n; ++i) {
      CHECK(batch.y_act[i] == int(acts[batch.a[i]] == acts[batch.b[i]]));
      CHECK(batch.y_pers[i] == int(pers[batch.a[i]] == pers[batch.b[i]]));
      ++counts[{batch.y_act[i], batch.y_pers[i]}];
    }
    REQUIRE(counts.size() == 4);
    for (const auto& [combo, count] : counts) {
      CHECK(std::abs(double(count) - double(n) / 4.0) <= 1.0);
    }
  }
}

TEST_CASE("quadruples reallocate an empty combination") {
  // One subject per activity: same activity implies same subject, so (1,0) is empty.
  const std::vector<int> acts{0, 0, 0, 1, 1, 1, 2, 2, 2};
  const std::vector<int> pers{5, 5, 5, 6, 6, 6, 7, 7, 7};
  const auto batch = sample_quadruples(all_indices(9), acts, pers, 30, 2);
  REQUIRE(batch.size() == 30);
  CHECK(batch.warnings.size() >= 1);
  for (std::size_t i = 0; i < batch.size(); ++i) CHECK_FALSE((batch.y_act[i] == 1 && batch.y_pers[i] == 0));
}

TEST_CASE("quadruple examples") {
  const std::vector<int> acts{0, 0, 1};
  const std::vector<int> pers{1, 2, 1};
  const auto batch = sample_quadruples(all_indices(3), acts, pers, 12, 0);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto a = batch.a[i], b = batch.b[i];
    if ((a == 0 && b == 1) || (a == 1 && b == 0)) {
      CHECK(batch.y_act[i] == 1);
      CHECK(batch.y_pers[i] == 0);
    }
    if ((a == 0 && b == 2) || (a == 2 && b == 0)) {
      CHECK(batch.y_act[i] == 0);
      CHECK(batch.y_pers[i] == 1);
    }
  }
}
