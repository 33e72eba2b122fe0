#include "har/pairs/pairs.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

#include "har/io.hpp"

namespace har::pairs {

namespace {


// Anchors that admit at least one partner; partners are found by rejection,
// so memory stays linear in the number of labelled windows.
struct Pool {
  std::vector<std::size_t> anchors;  // positions into labeled
};

template <typename Count>
Pool build_pool(std::size_t n, Count partner_count) {
  Pool p;
  for (std::size_t i = 0; i < n; ++i) {
    if (partner_count(i) > 0) p.anchors.push_back(i);
  }
  return p;
}

template <typename Rel>
std::pair<std::size_t, std::size_t> draw(const Pool& p, std::size_t n, Rel rel, std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> pick_anchor(0, p.anchors.size() - 1), pick(0, n - 1);
  const std::size_t i = p.anchors[pick_anchor(rng)];
  for (;;) {
    const std::size_t j = pick(rng);
    if (j != i && rel(i, j)) return {i, j};
  }
}

template <typename Key>
std::map<Key, std::size_t> group_sizes(std::size_t n, const std::function<Key(std::size_t)>& key) {
  std::map<Key, std::size_t> m;
  for (std::size_t i = 0; i < n; ++i) ++m[key(i)];
  return m;
}

void check_labeled(const std::vector<std::size_t>& labeled, std::size_t label_count) {
  if (labeled.size() < 2) throw std::invalid_argument("pair sampling needs at least 2 labelled windows");
  for (std::size_t i : labeled) {
    if (i >= label_count) throw std::out_of_range("labelled index " + std::to_string(i) + " out of range");
  }
}

// Shuffles pair order so that batches mix kinds.
void shuffle_batch(PairBatch& batch, std::mt19937_64& rng) {
  std::vector<std::size_t> order(batch.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng);
  PairBatch out;
  out.warnings = std::move(batch.warnings);
  for (std::size_t k : order) {
    out.a.push_back(batch.a[k]);
    out.b.push_back(batch.b[k]);
    out.y_act.push_back(batch.y_act[k]);
    if (batch.has_person()) out.y_pers.push_back(batch.y_pers[k]);
  }
  batch = std::move(out);
}

}  // namespace

PairBatch sample_pairs(const std::vector<std::size_t>& labeled, const std::vector<int>& labels, std::size_t n_pairs,
                       double pos_ratio, std::uint64_t seed) {
  if (!(pos_ratio >= 0.0 && pos_ratio <= 1.0)) throw std::invalid_argument("pos_ratio must lie in [0, 1]");
  check_labeled(labeled, labels.size());
  const auto n_pos = static_cast<std::size_t>(std::llround(pos_ratio * static_cast<double>(n_pairs)));
  const std::size_t n_neg = n_pairs - n_pos;
  const std::size_t n = labeled.size();
  const std::function<int(std::size_t)> act = [&](std::size_t i) { return labels[labeled[i]]; };

  const auto class_size = group_sizes<int>(n, act);
  auto same = [&](std::size_t i, std::size_t j) { return act(i) == act(j); };
  auto differ = [&](std::size_t i, std::size_t j) { return act(i) != act(j); };

  PairBatch batch;
  std::mt19937_64 rng(seed);
  if (n_pos > 0) {
    const Pool pos = build_pool(n, [&](std::size_t i) { return class_size.at(act(i)) - 1; });
    if (pos.anchors.empty()) {
      throw std::invalid_argument("sample_pairs: no class has two labelled windows, so no must-link pairs exist");
    }
    for (std::size_t k = 0; k < n_pos; ++k) {
      auto [i, j] = draw(pos, n, same, rng);
      batch.a.push_back(labeled[i]);
      batch.b.push_back(labeled[j]);
      batch.y_act.push_back(1);
    }
  }
  if (n_neg > 0) {
    const Pool neg = build_pool(n, [&](std::size_t i) { return n - class_size.at(act(i)); });
    if (neg.anchors.empty()) {
      throw std::invalid_argument("sample_pairs: all labelled windows share one class, so no cannot-link pairs exist");
    }
    for (std::size_t k = 0; k < n_neg; ++k) {
      auto [i, j] = draw(neg, n, differ, rng);
      batch.a.push_back(labeled[i]);
      batch.b.push_back(labeled[j]);
      batch.y_act.push_back(0);
    }
  }
  shuffle_batch(batch, rng);
  return batch;
}

PairBatch sample_quadruples(const std::vector<std::size_t>& labeled, const std::vector<int>& activities,
                            const std::vector<int>& persons, std::size_t n_pairs, std::uint64_t seed) {
  if (activities.size() != persons.size()) {
    throw std::invalid_argument("sample_quadruples: activity and person label counts differ");
  }
  check_labeled(labeled, activities.size());
  const std::size_t n = labeled.size();
  // Combination order: (1,1), (1,0), (0,1), (0,0).
  constexpr std::array<std::pair<int, int>, 4> combos = {{{1, 1}, {1, 0}, {0, 1}, {0, 0}}};
  const std::function<int(std::size_t)> act = [&](std::size_t i) { return activities[labeled[i]]; };
  const std::function<int(std::size_t)> per = [&](std::size_t i) { return persons[labeled[i]]; };
  const std::function<std::pair<int, int>(std::size_t)> both = [&](std::size_t i) { return std::pair{act(i), per(i)}; };
  const auto n_act = group_sizes<int>(n, act);
  const auto n_per = group_sizes<int>(n, per);
  const auto n_both = group_sizes<std::pair<int, int>>(n, both);
  auto partners = [&](std::size_t c, std::size_t i) -> std::size_t {
    const std::size_t a = n_act.at(act(i)), p = n_per.at(per(i)), ap = n_both.at(both(i));
    switch (c) {
      case 0: return ap - 1;
      case 1: return a - ap;
      case 2: return p - ap;
      default: return n - a - p + ap;
    }
  };
  std::array<Pool, 4> pools;
  for (std::size_t c = 0; c < 4; ++c) pools[c] = build_pool(n, [&](std::size_t i) { return partners(c, i); });

  PairBatch batch;
  std::size_t populated = 0;
  for (std::size_t c = 0; c < 4; ++c) {
    if (!pools[c].anchors.empty()) {
      ++populated;
    } else {
      batch.warnings.push_back("no labelled pairs with (y_act, y_pers) = (" + std::to_string(combos[c].first) + ", " +
                               std::to_string(combos[c].second) + "); share reallocated to the other combinations");
    }
  }
  if (populated == 0) throw std::invalid_argument("sample_quadruples: no pairs can be formed");

  // Even split over populated combinations; the remainder goes to the earliest ones.
  std::array<std::size_t, 4> quota{};
  std::size_t rank = 0;
  for (std::size_t c = 0; c < 4; ++c) {
    if (pools[c].anchors.empty()) continue;
    quota[c] = n_pairs / populated + (rank++ < n_pairs % populated ? 1 : 0);
  }

  std::mt19937_64 rng(seed);
  for (std::size_t c = 0; c < 4; ++c) {
    for (std::size_t k = 0; k < quota[c]; ++k) {
      const auto [ya, yp] = combos[c];
      auto [i, j] = draw(pools[c], n, [&](std::size_t x, std::size_t y) {
        return (act(x) == act(y)) == (ya == 1) && (per(x) == per(y)) == (yp == 1);
      }, rng);
      batch.a.push_back(labeled[i]);
      batch.b.push_back(labeled[j]);
      batch.y_act.push_back(combos[c].first);
      batch.y_pers.push_back(combos[c].second);
    }
  }
  shuffle_batch(batch, rng);
  return batch;
}

void write_pairs_csv(const std::filesystem::path& path, const PairBatch& batch) {
  std::ostringstream os;
  os << "index_a,index_b,y_act" << (batch.has_person() ? ",y_pers" : "") << '\n';
  for (std::size_t k = 0; k < batch.size(); ++k) {
    os << batch.a[k] << ',' << batch.b[k] << ',' << batch.y_act[k];
    if (batch.has_person()) os << ',' << batch.y_pers[k];
    os << '\n';
  }
  io::write_text_file(path, os.str());
}

}  // namespace har::pairs
