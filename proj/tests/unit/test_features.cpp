#include <doctest.h>

#include <algorithm>
#include <random>

#include "har/features/features.hpp"
#include "har/neighbors/neighbors.hpp"

using namespace har::features;
using har::neighbors::feature_knn;
using har::neighbors::temporal_neighbors;

namespace {

FeatureSet matrix(std::size_t rows, std::size_t cols, std::vector<float> values) {
  FeatureSet fs;
  fs.rows = rows;
  fs.cols = cols;
  fs.values = std::move(values);
  fs.column_names.resize(cols);
  return fs;
}

// Sort-based oracle: full ordering by (distance, index).
std::vector<std::size_t> brute_knn(const FeatureSet& fs, std::size_t i, std::size_t k) {
  std::vector<std::pair<double, std::size_t>> all;
  for (std::size_t j = 0; j < fs.rows; ++j) {
    if (j == i) continue;
    double d = 0;
    for (std::size_t c = 0; c < fs.cols; ++c) d += std::pow(double(fs.at(i, c)) - fs.at(j, c), 2);
    all.emplace_back(d, j);
  }
  std::sort(all.begin(), all.end());
  std::vector<std::size_t> out;
  for (std::size_t r = 0; r < k; ++r) out.push_back(all[r].second);
  return out;
}

}  // namespace

TEST_CASE("channel statistics of [1,2,3,4]") {
  std::vector<float> x{1, 2, 3, 4};
  auto s = channel_stats(x);
  CHECK(s[0] == doctest::Approx(2.5));
  CHECK(s[1] == doctest::Approx(1.25));
  CHECK(s[2] == doctest::Approx(1.1180340));
  CHECK(s[3] == doctest::Approx(2.5));
  CHECK(s[4] == 4.0);
  CHECK(s[5] == 1.0);
  CHECK(s[6] == doctest::Approx(1.5));
  std::vector<double> sorted{1, 2, 3, 4};
  CHECK(quantile_sorted(sorted, 0.25) == doctest::Approx(1.75));
  CHECK(quantile_sorted(sorted, 0.75) == doctest::Approx(3.25));
}

TEST_CASE("constant channel and short windows") {
  std::vector<float> x{5, 5, 5, 5};
  auto s = channel_stats(x);
  CHECK(s == std::array<double, 7>{5, 0, 0, 5, 5, 5, 0});
  std::vector<float> one{1};
  CHECK_THROWS_AS(channel_stats(one), std::invalid_argument);
}

TEST_CASE("feature invariants: permutation, homogeneity, ordering") {
  std::mt19937_64 rng(9);
  std::normal_distribution<float> g(0.f, 2.f);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<float> x(33);
    for (auto& v : x) v = g(rng);
    const auto s = channel_stats(x);
    CHECK(s[1] >= 0.0);
    CHECK(std::abs(s[2] - std::sqrt(s[1])) < 1e-6);
    CHECK(s[5] <= s[3]);
    CHECK(s[3] <= s[4]);
    CHECK(s[6] >= 0.0);

    auto shuffled = x;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    const auto p = channel_stats(shuffled);
    for (std::size_t k = 0; k < 7; ++k) CHECK(p[k] == doctest::Approx(s[k]).epsilon(1e-9));

    const float alpha = 2.5f;
    auto scaled = x;
    for (auto& v : scaled) v *= alpha;
    const auto h = channel_stats(scaled);
    for (std::size_t k : {0, 2, 3, 4, 5, 6}) CHECK(h[k] == doctest::Approx(alpha * s[k]).epsilon(1e-5));
    CHECK(h[1] == doctest::Approx(alpha * alpha * s[1]).epsilon(1e-5));
  }
}

TEST_CASE("feature set layout follows window order") {
  har::data::WindowSet ws;
  ws.meta.channel_names = {"ax", "ay"};
  ws.meta.window_len = 3;
  for (int i = 0; i < 4; ++i) {
    har::data::Window w;
    w.values = {float(i), float(i), float(i), 0, 1, 2};
    w.stream_pos = static_cast<std::size_t>(i);
    ws.windows.push_back(w);
  }
  auto fs = extract_feature_set(ws);
  CHECK(fs.rows == 4);
  CHECK(fs.cols == 14);
  CHECK(fs.column_names[0] == "ax_mean");
  CHECK(fs.column_names[13] == "ay_iqr");
  for (std::size_t i = 0; i < 4; ++i) CHECK(fs.at(i, 0) == float(i));
  CHECK(fs.at(2, 7) == doctest::Approx(1.0));
}

TEST_CASE("feature standardizer") {
  auto train = matrix(2, 2, {0, 7, 4, 7});
  auto st = FeatureStandardizer::fit(train);
  CHECK(st.mean[0] == doctest::Approx(2.0));
  CHECK(st.stddev[0] == doctest::Approx(2.0));
  auto z = st.apply(train);
  CHECK(z.at(1, 0) == doctest::Approx(1.0));
  CHECK(z.at(0, 1) == 7.0f);

  std::mt19937_64 rng(1);
  std::normal_distribution<float> g(3.f, 5.f);
  std::vector<float> v(200 * 4);
  for (auto& x : v) x = g(rng);
  auto big = matrix(200, 4, v);
  auto zb = FeatureStandardizer::fit(big).apply(big);
  for (std::size_t c = 0; c < 4; ++c) {
    double m = 0, s = 0;
    for (std::size_t i = 0; i < 200; ++i) m += zb.at(i, c);
    m /= 200;
    for (std::size_t i = 0; i < 200; ++i) s += (zb.at(i, c) - m) * (zb.at(i, c) - m);
    CHECK(std::abs(m) < 1e-5);
    CHECK(std::sqrt(s / 200) == doctest::Approx(1.0).epsilon(1e-5));
  }
  CHECK_THROWS_AS(st.apply(big), std::invalid_argument);
}

TEST_CASE("temporal neighbourhoods") {
  har::data::WindowSet ws;
  ws.meta.channel_names = {"c"};
  ws.meta.window_len = 1;
  for (int s = 0; s < 2; ++s) {
    for (int p = 0; p < 6; ++p) {
      har::data::Window w;
      w.values = {0};
      w.stream_id = s;
      w.stream_pos = static_cast<std::size_t>(p);
      ws.windows.push_back(w);
    }
  }
  auto idx = temporal_neighbors(ws, 2);
  CHECK(idx[3] == std::vector<std::size_t>{1, 2, 3, 4, 5});
  CHECK(idx[0] == std::vector<std::size_t>{0, 1, 2});
  CHECK(idx[5] == std::vector<std::size_t>{3, 4, 5});
  CHECK(idx[6] == std::vector<std::size_t>{6, 7, 8});
  for (std::size_t i = 0; i < ws.size(); ++i) {
    CHECK(idx[i].size() <= 5);
    for (auto p : idx[i]) CHECK(ws.windows[p].stream_id == ws.windows[i].stream_id);
  }
  auto zero = temporal_neighbors(ws, 0);
  for (std::size_t i = 0; i < ws.size(); ++i) CHECK(zero[i] == std::vector<std::size_t>{i});
}

TEST_CASE("feature knn small cases") {
  auto line = matrix(3, 1, {0, 1, 10});
  auto idx = feature_knn(line, 1);
  CHECK(idx[0] == std::vector<std::size_t>{1});
  CHECK(idx[1] == std::vector<std::size_t>{0});
  CHECK(idx[2] == std::vector<std::size_t>{1});
  CHECK_THROWS_AS(feature_knn(line, 3), std::invalid_argument);

  auto dup = matrix(4, 2, {0, 0, 5, 5, 1, 1, 5, 5});
  const auto without_self = feature_knn(dup, 1);
  CHECK(without_self[1] == std::vector<std::size_t>{3});
  const auto with_self = feature_knn(dup, 2, true);
  CHECK(with_self[1] == std::vector<std::size_t>{1, 3});
}

TEST_CASE("feature knn matches a brute-force oracle") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<float> u(-1.f, 1.f);
  for (std::size_t n : {50u, 120u, 500u}) {
    std::vector<float> v(n * 8);
    for (auto& x : v) x = u(rng);
    // Quantise some rows so that distance ties occur.
    for (std::size_t i = 0; i < v.size() / 4; ++i) v[i] = std::round(v[i] * 2.f) / 2.f;
    auto fs = matrix(n, 8, v);
    auto idx = feature_knn(fs, 5);
    for (std::size_t i = 0; i < n; ++i) {
      CHECK(idx[i] == brute_knn(fs, i, 5));
      CHECK(std::is_sorted(idx.distances[i].begin(), idx.distances[i].end()));
    }
  }
}
