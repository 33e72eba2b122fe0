#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <set>

#include "har/data/datasets.hpp"
#include "har/data/segment.hpp"
#include "har/data/split.hpp"
#include "har/data/synth.hpp"
#include "har/data/window_io.hpp"
#include "har/features/features.hpp"
#include "har/io.hpp"

using namespace har::data;
namespace fs = std::filesystem;

namespace {

SensorStream ramp_stream(std::size_t len, int subject = 1, std::size_t channels = 2) {
  SensorStream s;
  s.subject_id = subject;
  s.sample_rate_hz = 50.0;
  for (std::size_t c = 0; c < channels; ++c) {
    s.channel_names.push_back("c" + std::to_string(c));
    std::vector<float> v(len);
    for (std::size_t t = 0; t < len; ++t) v[t] = static_cast<float>(100 * c + t);
    s.channels.push_back(v);
  }
  s.labels.assign(len, 0);
  return s;
}

WindowSet labeled_set(const std::vector<int>& labels, int persons = 1) {
  WindowSet ws;
  ws.meta.channel_names = {"c"};
  ws.meta.window_len = 2;
  ws.meta.num_activities = static_cast<std::size_t>(*std::max_element(labels.begin(), labels.end()) + 1);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    Window w;
    w.values = {static_cast<float>(i), 0.f};
    w.activity = labels[i];
    w.person = static_cast<int>(i % static_cast<std::size_t>(persons));
    w.stream_pos = i;
    ws.windows.push_back(w);
  }
  return ws;
}

fs::path scratch_dir(const std::string& name) {
  auto p = fs::temp_directory_path() / ("harkit_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST_CASE("segment start positions and trailing partial window") {
  auto s = ramp_stream(10);
  auto r = segment(s, 0, 4, 2);
  REQUIRE(r.windows.size() == 4);
  std::vector<std::size_t> starts;
  for (const auto& w : r.windows) starts.push_back(w.stream_pos);
  CHECK(starts == std::vector<std::size_t>{0, 2, 4, 6});
  CHECK_FALSE(r.warning);
}

TEST_CASE("segment reproduces stream samples at the recorded offsets") {
  auto s = ramp_stream(37, 3, 3);
  auto r = segment(s, 5, 8, 3);
  for (const auto& w : r.windows) {
    CHECK(w.stream_id == 5);
    CHECK(w.person == 3);
    for (std::size_t c = 0; c < 3; ++c) {
      for (std::size_t t = 0; t < 8; ++t) CHECK(w.values[c * 8 + t] == s.channels[c][w.stream_pos + t]);
    }
  }
}

TEST_CASE("segment of a too-short stream warns and yields nothing") {
  auto r = segment(ramp_stream(3), 0, 4, 2);
  CHECK(r.windows.empty());
  CHECK(r.warning.has_value());
  CHECK_THROWS_AS(segment(ramp_stream(10), 0, 4, 0), std::invalid_argument);
}

TEST_CASE("majority label rule") {
  auto s = ramp_stream(8);
  s.labels = {1, 1, 1, 2, 2, 2, kUnlabeled, kUnlabeled};
  auto r = segment(s, 0, 4, 2);
  // [1,1,1,2] -> 1, [1,2,2,2] -> 2, [2,2,u,u] -> tie, first occurring label 2.
  REQUIRE(r.windows.size() == 3);
  CHECK(r.windows[0].activity == 1);
  CHECK(r.windows[1].activity == 2);
  CHECK(r.windows[2].activity == 2);
  s.labels = {kUnlabeled, kUnlabeled, kUnlabeled, 1, 1, 1, 1, 1};
  r = segment(s, 0, 4, 4);
  CHECK(r.windows.size() == 1);
  CHECK(r.discarded_mixed == 1);
}

TEST_CASE("protocol window lengths") {
  auto uci = protocol_for(Dataset::uci_smartphone);
  CHECK(seconds_to_samples(uci.window_seconds, uci.native_rate_hz) == 128);
  CHECK(seconds_to_samples(uci.step_seconds, uci.native_rate_hz) == 64);
  auto rd = protocol_for(Dataset::realdisp);
  CHECK(seconds_to_samples(rd.window_seconds, rd.native_rate_hz) == 100);
  CHECK(seconds_to_samples(rd.step_seconds, rd.native_rate_hz) == 100);
  auto pm = protocol_for(Dataset::pamap2);
  CHECK(pm.native_rate_hz / pm.downsample_factor == doctest::Approx(33.33).epsilon(1e-3));
}

TEST_CASE("downsample keeps every factor-th sample") {
  SensorStream s;
  s.sample_rate_hz = 100.0;
  s.channel_names = {"x"};
  s.channels = {{1, 2, 3, 4, 5, 6}};
  s.labels = {0, 0, 0, 1, 1, 1};
  auto d = downsample(s, 3);
  CHECK(d.channels[0] == std::vector<float>{1, 4});
  CHECK(d.labels == std::vector<int>{0, 1});
  CHECK(d.sample_rate_hz == doctest::Approx(33.3333));
  auto same = downsample(s, 1);
  CHECK(same.channels == s.channels);
  CHECK(same.sample_rate_hz == 100.0);
  CHECK_THROWS_AS(downsample(s, 0), std::invalid_argument);
}

TEST_CASE("stratified split counts") {
  std::vector<int> labels;
  for (int c = 0; c < 4; ++c) labels.insert(labels.end(), 25, c);
  auto ws = labeled_set(labels);
  auto sp = stratified_split(ws, {0.6, 0.2, 0.2}, 11);
  std::map<int, std::array<int, 3>> counts;
  for (auto i : sp.train) ++counts[labels[i]][0];
  for (auto i : sp.val) ++counts[labels[i]][1];
  for (auto i : sp.test) ++counts[labels[i]][2];
  for (const auto& [c, n] : counts) CHECK(n == std::array<int, 3>{15, 5, 5});

  auto again = stratified_split(ws, {0.6, 0.2, 0.2}, 11);
  CHECK(again.train == sp.train);
  CHECK(again.test == sp.test);
}

TEST_CASE("stratified split is disjoint, covering and near-exact for random class sizes") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 30; ++trial) {
    std::uniform_int_distribution<int> size(3, 60), classes(2, 7);
    std::vector<int> labels;
    const int m = classes(rng);
    std::vector<int> per(static_cast<std::size_t>(m));
    for (int c = 0; c < m; ++c) {
      per[static_cast<std::size_t>(c)] = size(rng);
      labels.insert(labels.end(), static_cast<std::size_t>(per[static_cast<std::size_t>(c)]), c);
    }
    std::shuffle(labels.begin(), labels.end(), rng);
    auto sp = stratified_split(labeled_set(labels), {0.6, 0.2, 0.2}, static_cast<std::uint64_t>(trial));
    std::set<std::size_t> all;
    for (const auto* part : {&sp.train, &sp.val, &sp.test}) {
      CHECK(std::is_sorted(part->begin(), part->end()));
      all.insert(part->begin(), part->end());
    }
    CHECK(all.size() == labels.size());
    CHECK(sp.train.size() + sp.val.size() + sp.test.size() == labels.size());
    std::vector<int> train_count(static_cast<std::size_t>(m), 0);
    for (auto i : sp.train) ++train_count[static_cast<std::size_t>(labels[i])];
    for (int c = 0; c < m; ++c) {
      CHECK(std::abs(train_count[static_cast<std::size_t>(c)] - 0.6 * per[static_cast<std::size_t>(c)]) <= 1.0);
    }
  }
}

TEST_CASE("stratified split rejects tiny classes by name") {
  auto ws = labeled_set({0, 0, 0, 0, 1, 1});
  ws.meta.activity_names = {"walk", "jump"};
  try {
    stratified_split(ws, {0.6, 0.2, 0.2}, 1);
    FAIL("expected error");
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).find("jump") != std::string::npos);
  }
}

TEST_CASE("subject split keeps each subject in one part") {
  std::vector<int> labels(120);
  for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = static_cast<int>(i % 3);
  auto ws = labeled_set(labels, 6);
  auto sp = stratified_split(ws, {0.5, 0.25, 0.25}, 4, SplitMode::subject);
  std::map<int, std::set<int>> parts_of;
  for (auto i : sp.train) parts_of[ws.windows[i].person].insert(0);
  for (auto i : sp.val) parts_of[ws.windows[i].person].insert(1);
  for (auto i : sp.test) parts_of[ws.windows[i].person].insert(2);
  for (const auto& [p, parts] : parts_of) CHECK(parts.size() == 1);
  CHECK(sp.train.size() + sp.val.size() + sp.test.size() == 120);
}

TEST_CASE("label subsampling") {
  std::vector<int> labels(1000);
  for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = static_cast<int>(i % 7);
  CHECK(subsample_labels(labels, 1.0, 1).indices.size() == 1000);
  auto sub = subsample_labels(labels, 0.05, 1);
  CHECK(sub.indices.size() == 50);
  CHECK(sub.deviations.empty());
  std::map<int, int> counts;
  for (auto i : sub.indices) ++counts[labels[i]];
  for (const auto& [c, n] : counts) {
    const double ideal = 0.05 * std::count(labels.begin(), labels.end(), c);
    CHECK(std::abs(n - ideal) <= 1.0);
  }
  CHECK(subsample_labels(labels, 0.05, 1).indices == sub.indices);

  std::vector<int> skewed(200, 0);
  skewed[7] = 1;
  auto tiny = subsample_labels(skewed, 0.01, 2);
  CHECK(std::count_if(tiny.indices.begin(), tiny.indices.end(), [&](auto i) { return skewed[i] == 1; }) == 1);
  CHECK_FALSE(tiny.deviations.empty());
  CHECK_THROWS_AS(subsample_labels(labels, 0.0, 1), std::invalid_argument);
}

TEST_CASE("channel standardizer") {
  auto ws = labeled_set({0, 1, 0, 1});
  auto st = ChannelStandardizer::fit(ws);
  st.apply(ws);
  double sum = 0, sq = 0;
  for (const auto& w : ws.windows) {
    for (float v : w.values) {
      sum += v;
      sq += v * v;
    }
  }
  CHECK(sum / 8 == doctest::Approx(0.0).epsilon(1e-6));
  CHECK(sq / 8 == doctest::Approx(1.0).epsilon(1e-5));
}

TEST_CASE("synthetic generator") {
  SynthSpec spec;
  spec.samples_per_class = 400;
  spec.subjects = 3;
  auto a = synthesize(spec);
  auto b = synthesize(spec);
  REQUIRE(a.size() == 3);
  for (std::size_t s = 0; s < a.size(); ++s) {
    CHECK(a[s].channels == b[s].channels);
    CHECK(a[s].labels == b[s].labels);
    CHECK(a[s].length() == 400 * spec.activities);
  }
  spec.seed += 1;
  CHECK(synthesize(spec)[0].channels != a[0].channels);
  spec.subjects = 1;
  CHECK_THROWS_AS(synthesize(spec), std::invalid_argument);
}

TEST_CASE("noiseless synthetic windows repeat with the activity period") {
  SynthSpec spec;
  spec.noise = 0.0;
  spec.activities = 2;
  spec.subjects = 2;
  spec.samples_per_class = 2000;
  spec.segments_per_class = 1;
  spec.min_freq_hz = 1.0;
  spec.max_freq_hz = 2.0;
  const auto streams = synthesize(spec);
  // At 50 Hz a 1 Hz tone repeats every 50 samples, a 2 Hz tone every 25.
  for (const auto& s : streams) {
    for (std::size_t t = 0; t + 50 < s.length(); ++t) {
      if (s.labels[t] != s.labels[t + 50]) continue;
      for (std::size_t c = 0; c < s.num_channels(); ++c) {
        CHECK(s.channels[c][t] == doctest::Approx(s.channels[c][t + 50]).epsilon(1e-4));
      }
    }
  }
}

TEST_CASE("synthetic activities separate in feature space") {
  SynthSpec spec;
  auto ws = synthesize_windows(spec);
  ws.validate();
  CHECK(ws.size() > 2000);
  auto fs = har::features::extract_feature_set(ws);
  fs = har::features::FeatureStandardizer::fit(fs).apply(fs);
  double inter = 0, intra = 0;
  std::size_t n_inter = 0, n_intra = 0;
  for (std::size_t i = 0; i < fs.rows; i += 7) {
    for (std::size_t j = i + 1; j < fs.rows; j += 11) {
      double d = 0;
      for (std::size_t k = 0; k < fs.cols; ++k) d += std::pow(fs.at(i, k) - fs.at(j, k), 2);
      d = std::sqrt(d);
      if (ws.windows[i].activity == ws.windows[j].activity) {
        intra += d;
        ++n_intra;
      } else {
        inter += d;
        ++n_inter;
      }
    }
  }
  CHECK(inter / n_inter > intra / n_intra);
}

TEST_CASE("window file round trip") {
  SynthSpec spec;
  spec.samples_per_class = 300;
  spec.subjects = 2;
  auto ws = synthesize_windows(spec);
  auto dir = scratch_dir("windows");
  write_windows(dir / "w.bin", ws);
  auto back = read_windows(dir / "w.bin");
  REQUIRE(back.size() == ws.size());
  CHECK(back.meta.channel_names == ws.meta.channel_names);
  CHECK(back.meta.window_len == ws.meta.window_len);
  for (std::size_t i = 0; i < ws.size(); ++i) {
    CHECK(back.windows[i].values == ws.windows[i].values);
    CHECK(back.windows[i].activity == ws.windows[i].activity);
    CHECK(back.windows[i].person == ws.windows[i].person);
    CHECK(back.windows[i].stream_pos == ws.windows[i].stream_pos);
  }
  auto bytes = har::io::read_text_file(dir / "w.bin");
  har::io::write_text_file(dir / "cut.bin", bytes.substr(0, bytes.size() - 5));
  CHECK_THROWS_AS(read_windows(dir / "cut.bin"), har::io::FormatError);
}

TEST_CASE("dataset parser lists missing files") {
  auto dir = scratch_dir("missing");
  try {
    parse_dataset(Dataset::pamap2, dir);
    FAIL("expected error");
  } catch (const std::runtime_error& e) {
    const std::string msg = e.what();
    CHECK(msg.find("subject101.dat") != std::string::npos);
    CHECK(msg.find("subject109.dat") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_dataset(Dataset::realdisp, dir), std::runtime_error);
  CHECK_THROWS_AS(parse_dataset(Dataset::uci_smartphone, dir), std::runtime_error);
  CHECK_THROWS_AS(dataset_from_string("mnist"), std::invalid_argument);
}

TEST_CASE("pamap2 parser on a miniature layout") {
  auto dir = scratch_dir("pamap2");
  fs::create_directories(dir / "Protocol");
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g;
  for (int s = 101; s <= 109; ++s) {
    std::ofstream os(dir / "Protocol" / ("subject" + std::to_string(s) + ".dat"));
    for (int t = 0; t < 1500; ++t) {
      const int code = t < 50 ? 0 : (t < 700 ? 4 : 24);
      os << t * 0.01 << ' ' << code << " NaN";
      for (int c = 3; c < 54; ++c) {
        if (t == 10 && c == 5) {
          os << " NaN";
        } else {
          os << ' ' << g(rng);
        }
      }
      os << '\n';
    }
  }
  auto parsed = parse_dataset(Dataset::pamap2, dir);
  CHECK(parsed.streams.size() == 9);
  CHECK(parsed.streams[0].num_channels() == 27);
  CHECK(parsed.activity_names.size() == 12);
  CHECK(parsed.report.rows_dropped_invalid == 9);
  CHECK(parsed.report.rows_unknown_activity == 9 * 49);
  auto ws = prepare_windows(parsed);
  ws.validate();
  CHECK(ws.window_len() == 171);
  CHECK(ws.meta.step == 33);
  auto a = ws.activities();
  CHECK(std::set<int>(a.begin(), a.end()) == std::set<int>{3, 11});
}

TEST_CASE("uci parser merges transitions") {
  auto dir = scratch_dir("uci");
  fs::create_directories(dir / "RawData");
  {
    std::ofstream labels(dir / "RawData" / "labels.txt");
    labels << "1 1 5 1 300\n1 1 8 301 420\n1 1 1 421 700\n";
  }
  for (const char* sensor : {"acc", "gyro"}) {
    std::ofstream os(dir / "RawData" / (std::string(sensor) + "_exp01_user01.txt"));
    for (int t = 0; t < 720; ++t) os << t << ' ' << -t << ' ' << 0.5 << '\n';
  }
  auto parsed = parse_dataset(Dataset::uci_smartphone, dir);
  REQUIRE(parsed.streams.size() == 1);
  CHECK(parsed.streams[0].num_channels() == 6);
  CHECK(parsed.streams[0].labels[0] == 4);
  CHECK(parsed.streams[0].labels[350] == 6);
  CHECK(parsed.streams[0].labels[710] == kUnlabeled);
  auto ws = prepare_windows(parsed);
  CHECK(ws.window_len() == 128);
  CHECK(ws.meta.num_activities == 7);
}

TEST_CASE("realdisp parser selects 81 channels") {
  auto dir = scratch_dir("realdisp");
  for (int s = 1; s <= 17; ++s) {
    std::ofstream os(dir / ("subject" + std::to_string(s) + "_ideal.log"));
    for (int t = 0; t < 250; ++t) {
      os << t / 50 << '\t' << (t % 50) * 20000;
      for (int c = 2; c < 119; ++c) os << '\t' << c + 0.5;
      os << '\t' << (t < 120 ? 0 : 33) << '\n';
    }
  }
  auto parsed = parse_dataset(Dataset::realdisp, dir);
  CHECK(parsed.streams.size() == 17);
  CHECK(parsed.streams[0].num_channels() == 81);
  // First channel is RLA acc x (column 2), last is LC mag z (column 2 + 8*13 + 8).
  CHECK(parsed.streams[0].channels[0][0] == 2.5f);
  CHECK(parsed.streams[0].channels[80][0] == 114.5f);
  auto ws = prepare_windows(parsed);
  CHECK(ws.window_len() == 100);
  CHECK(ws.meta.step == 100);
  for (const auto& w : ws.windows) CHECK(w.activity == 32);
}
