#include "har/data/datasets.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "har/data/segment.hpp"

namespace har::data {

namespace fs = std::filesystem;

Dataset dataset_from_string(std::string_view name) {
  if (name == "uci_smartphone" || name == "uci") return Dataset::uci_smartphone;
  if (name == "pamap2") return Dataset::pamap2;
  if (name == "realdisp") return Dataset::realdisp;
  throw std::invalid_argument("unknown dataset '" + std::string(name) + "' (expected uci_smartphone, pamap2, realdisp)");
}

std::string_view to_string(Dataset d) {
  switch (d) {
    case Dataset::uci_smartphone: return "uci_smartphone";
    case Dataset::pamap2: return "pamap2";
    case Dataset::realdisp: return "realdisp";
  }
  return "unknown";
}

WindowingProtocol protocol_for(Dataset d) {
  switch (d) {
    case Dataset::uci_smartphone: return {1, 2.56, 1.28, 50.0};
    case Dataset::pamap2: return {3, 5.12, 1.0, 100.0};
    case Dataset::realdisp: return {1, 2.0, 2.0, 50.0};
  }
  throw std::invalid_argument("protocol_for: unknown dataset");
}

namespace {

// Splits on whitespace and commas; "nan" in any case parses to NaN.
bool parse_row(const std::string& line, std::vector<double>& out) {
  out.clear();
  const char* p = line.data();
  const char* end = p + line.size();
  while (p < end) {
    while (p < end && (*p == ' ' || *p == '\t' || *p == ',' || *p == '\r')) ++p;
    if (p >= end) break;
    const char* tok = p;
    while (p < end && *p != ' ' && *p != '\t' && *p != ',' && *p != '\r') ++p;
    const std::size_t n = static_cast<std::size_t>(p - tok);
    if (n == 3 && (tok[0] | 32) == 'n' && (tok[1] | 32) == 'a' && (tok[2] | 32) == 'n') {
      out.push_back(std::nan(""));
      continue;
    }
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(tok, p, v);
    if (ec != std::errc() || ptr != p) return false;
    out.push_back(v);
  }
  return true;
}

[[noreturn]] void missing_files(std::string_view dataset, const fs::path& root, const std::vector<fs::path>& missing) {
  std::ostringstream msg;
  msg << dataset << ": dataset layout not found under " << root.string()
      << "; missing:";
  const std::size_t shown = std::min<std::size_t>(missing.size(), 20);
  for (std::size_t i = 0; i < shown; ++i) msg << "\n  " << missing[i].string();
  if (missing.size() > shown) msg << "\n  ... and " << (missing.size() - shown) << " more";
  throw std::runtime_error(msg.str());
}

std::ifstream open_or_throw(const fs::path& p) {
  std::ifstream is(p);
  if (!is) throw std::runtime_error("cannot open " + p.string());
  return is;
}

std::vector<std::vector<double>> read_numeric_file(const fs::path& p, std::size_t min_cols, IngestReport& report) {
  auto is = open_or_throw(p);
  std::vector<std::vector<double>> rows;
  std::string line;
  std::vector<double> row;
  while (std::getline(is, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    ++report.rows_read;
    if (!parse_row(line, row) || row.size() < min_cols) {
      ++report.rows_dropped_invalid;
      continue;
    }
    rows.push_back(row);
  }
  return rows;
}

// ---------------------------------------------------------------- UCI

ParsedDataset parse_uci(const fs::path& root) {
  ParsedDataset out;
  out.dataset = Dataset::uci_smartphone;
  out.report.dataset = "uci_smartphone";
  out.activity_names = {"walking", "walking_upstairs", "walking_downstairs", "sitting", "standing", "laying",
                        "transition"};
  const fs::path raw = fs::exists(root / "RawData" / "labels.txt") ? root / "RawData" : root;
  if (!fs::exists(raw / "labels.txt")) missing_files("uci_smartphone", root, {root / "RawData" / "labels.txt"});

  struct Segment {
    int activity;
    std::size_t start, end;
  };
  std::map<std::pair<int, int>, std::vector<Segment>> experiments;
  {
    auto is = open_or_throw(raw / "labels.txt");
    std::string line;
    std::vector<double> row;
    while (std::getline(is, line)) {
      if (!parse_row(line, row) || row.size() < 5) continue;
      const int exp = static_cast<int>(row[0]), user = static_cast<int>(row[1]), act = static_cast<int>(row[2]);
      experiments[{exp, user}].push_back({act, static_cast<std::size_t>(row[3]), static_cast<std::size_t>(row[4])});
    }
  }
  auto name_for = [&](const char* sensor, int exp, int user) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%s_exp%02d_user%02d.txt", sensor, exp, user);
    return raw / buf;
  };
  std::vector<fs::path> missing;
  for (const auto& [key, segs] : experiments) {
    for (const char* s : {"acc", "gyro"}) {
      if (!fs::exists(name_for(s, key.first, key.second))) missing.push_back(name_for(s, key.first, key.second));
    }
  }
  if (!missing.empty()) missing_files("uci_smartphone", root, missing);

  for (const auto& [key, segs] : experiments) {
    const auto acc = read_numeric_file(name_for("acc", key.first, key.second), 3, out.report);
    const auto gyro = read_numeric_file(name_for("gyro", key.first, key.second), 3, out.report);
    const std::size_t len = std::min(acc.size(), gyro.size());
    SensorStream s;
    s.subject_id = key.second;
    s.sample_rate_hz = 50.0;
    s.channel_names = {"acc_x", "acc_y", "acc_z", "gyro_x", "gyro_y", "gyro_z"};
    s.channels.assign(6, std::vector<float>(len));
    s.labels.assign(len, kUnlabeled);
    for (std::size_t t = 0; t < len; ++t) {
      for (std::size_t c = 0; c < 3; ++c) {
        s.channels[c][t] = static_cast<float>(acc[t][c]);
        s.channels[3 + c][t] = static_cast<float>(gyro[t][c]);
      }
    }
    for (const auto& seg : segs) {
      int label;
      if (seg.activity >= 1 && seg.activity <= 6) {
        label = seg.activity - 1;
      } else if (seg.activity >= 7 && seg.activity <= 12) {
        label = 6;
      } else {
        out.report.rows_unknown_activity += seg.end >= seg.start ? seg.end - seg.start + 1 : 0;
        continue;
      }
      // labels.txt uses 1-based inclusive sample ranges.
      for (std::size_t t = seg.start; t <= seg.end && t >= 1 && t - 1 < len; ++t) s.labels[t - 1] = label;
    }
    out.streams.push_back(std::move(s));
  }
  return out;
}

// ---------------------------------------------------------------- PAMAP2

ParsedDataset parse_pamap2(const fs::path& root) {
  ParsedDataset out;
  out.dataset = Dataset::pamap2;
  out.report.dataset = "pamap2";
  out.activity_names = {"lying",   "sitting",          "standing",           "walking",
                        "running", "cycling",          "nordic_walking",     "ascending_stairs",
                        "descending_stairs", "vacuum_cleaning", "ironing", "rope_jumping"};
  const std::map<int, int> codes = {{1, 0},  {2, 1},  {3, 2},   {4, 3},   {5, 4},   {6, 5},
                                    {7, 6},  {12, 7}, {13, 8},  {16, 9},  {17, 10}, {24, 11}};
  const fs::path dir = fs::exists(root / "Protocol") ? root / "Protocol" : root;
  std::vector<fs::path> files, missing;
  for (int s = 101; s <= 109; ++s) {
    auto p = dir / ("subject" + std::to_string(s) + ".dat");
    (fs::exists(p) ? files : missing).push_back(p);
  }
  if (!missing.empty()) missing_files("pamap2", root, missing);

  // IMU blocks start at columns 3 (hand), 20 (chest), 37 (ankle). Within a
  // block: +1..3 acc +-16g, +7..9 gyro, +10..12 magnetometer.
  const std::array<std::pair<const char*, std::size_t>, 3> imus = {{{"hand", 3}, {"chest", 20}, {"ankle", 37}}};
  std::vector<std::size_t> cols;
  std::vector<std::string> names;
  for (const auto& [imu, base] : imus) {
    for (const auto& [sensor, off] : {std::pair{"acc", 1}, std::pair{"gyro", 7}, std::pair{"mag", 10}}) {
      for (std::size_t axis = 0; axis < 3; ++axis) {
        cols.push_back(base + static_cast<std::size_t>(off) + axis);
        names.push_back(std::string(imu) + "_" + sensor + "_" + static_cast<char>('x' + axis));
      }
    }
  }

  for (std::size_t f = 0; f < files.size(); ++f) {
    auto is = open_or_throw(files[f]);
    SensorStream s;
    s.subject_id = 101 + static_cast<int>(f);
    s.sample_rate_hz = 100.0;
    s.channel_names = names;
    s.channels.resize(cols.size());
    std::string line;
    std::vector<double> row;
    while (std::getline(is, line)) {
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      ++out.report.rows_read;
      if (!parse_row(line, row) || row.size() < 54) {
        ++out.report.rows_dropped_invalid;
        continue;
      }
      bool valid = true;
      for (std::size_t c : cols) valid = valid && std::isfinite(row[c]);
      if (!valid) {
        ++out.report.rows_dropped_invalid;
        continue;
      }
      const auto it = codes.find(static_cast<int>(row[1]));
      int label = kUnlabeled;
      if (it == codes.end()) {
        ++out.report.rows_unknown_activity;
      } else {
        label = it->second;
      }
      for (std::size_t c = 0; c < cols.size(); ++c) s.channels[c].push_back(static_cast<float>(row[cols[c]]));
      s.labels.push_back(label);
    }
    out.streams.push_back(std::move(s));
  }
  return out;
}

// ---------------------------------------------------------------- REALDISP

ParsedDataset parse_realdisp(const fs::path& root) {
  ParsedDataset out;
  out.dataset = Dataset::realdisp;
  out.report.dataset = "realdisp";
  out.activity_names = {"walking", "jogging", "running", "jump_up", "jump_front_back", "jump_sideways",
                        "jump_open_close", "jump_rope", "trunk_twist_arms", "trunk_twist_elbows",
                        "waist_bends_forward", "waist_rotation", "waist_bends_opposite", "reach_heels",
                        "lateral_bend", "lateral_bend_arm_up", "forward_stretching", "upper_lower_twist",
                        "lateral_arm_elevation", "frontal_arm_elevation", "frontal_hand_claps",
                        "frontal_arm_crossing", "shoulders_high_rotation", "shoulders_low_rotation",
                        "arms_inner_rotation", "knees_to_breast", "heels_to_backside", "knees_bending",
                        "knees_bending_forward", "rotation_on_knees", "rowing", "elliptical_bike", "cycling"};
  std::vector<fs::path> files, missing;
  for (int s = 1; s <= 17; ++s) {
    auto p = root / ("subject" + std::to_string(s) + "_ideal.log");
    (fs::exists(p) ? files : missing).push_back(p);
  }
  if (!missing.empty()) missing_files("realdisp", root, missing);

  const std::array<const char*, 9> sensors = {"rla", "rua", "back", "lua", "lla", "rc", "rt", "lt", "lc"};
  std::vector<std::size_t> cols;
  std::vector<std::string> names;
  for (std::size_t s = 0; s < sensors.size(); ++s) {
    const std::size_t base = 2 + 13 * s;
    for (const auto& [kind, off] : {std::pair{"acc", 0}, std::pair{"gyro", 3}, std::pair{"mag", 6}}) {
      for (std::size_t axis = 0; axis < 3; ++axis) {
        cols.push_back(base + static_cast<std::size_t>(off) + axis);
        names.push_back(std::string(sensors[s]) + "_" + kind + "_" + static_cast<char>('x' + axis));
      }
    }
  }

  for (std::size_t f = 0; f < files.size(); ++f) {
    auto is = open_or_throw(files[f]);
    SensorStream s;
    s.subject_id = 1 + static_cast<int>(f);
    s.sample_rate_hz = 50.0;
    s.channel_names = names;
    s.channels.resize(cols.size());
    std::string line;
    std::vector<double> row;
    while (std::getline(is, line)) {
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      ++out.report.rows_read;
      if (!parse_row(line, row) || row.size() < 120) {
        ++out.report.rows_dropped_invalid;
        continue;
      }
      bool valid = true;
      for (std::size_t c : cols) valid = valid && std::isfinite(row[c]);
      if (!valid) {
        ++out.report.rows_dropped_invalid;
        continue;
      }
      const int code = static_cast<int>(row[119]);
      int label = kUnlabeled;
      if (code >= 1 && code <= 33) {
        label = code - 1;
      } else {
        ++out.report.rows_unknown_activity;
      }
      for (std::size_t c = 0; c < cols.size(); ++c) s.channels[c].push_back(static_cast<float>(row[cols[c]]));
      s.labels.push_back(label);
    }
    out.streams.push_back(std::move(s));
  }
  return out;
}

}  // namespace

ParsedDataset parse_dataset(Dataset d, const fs::path& root) {
  if (!fs::is_directory(root)) {
    throw std::runtime_error(std::string(to_string(d)) + ": dataset root " + root.string() + " is not a directory");
  }
  switch (d) {
    case Dataset::uci_smartphone: return parse_uci(root);
    case Dataset::pamap2: return parse_pamap2(root);
    case Dataset::realdisp: return parse_realdisp(root);
  }
  throw std::invalid_argument("parse_dataset: unknown dataset");
}

WindowSet prepare_windows(ParsedDataset& parsed) {
  const WindowingProtocol proto = protocol_for(parsed.dataset);
  std::vector<SensorStream> streams;
  streams.reserve(parsed.streams.size());
  for (const auto& s : parsed.streams) {
    streams.push_back(proto.downsample_factor > 1 ? downsample(s, proto.downsample_factor) : s);
  }
  const double rate = proto.native_rate_hz / proto.downsample_factor;
  const std::size_t window_len = seconds_to_samples(proto.window_seconds, rate);
  const std::size_t step = seconds_to_samples(proto.step_seconds, rate);

  WindowSetMeta meta;
  meta.dataset = std::string(to_string(parsed.dataset));
  meta.channel_names = streams.empty() ? std::vector<std::string>{} : streams.front().channel_names;
  meta.activity_names = parsed.activity_names;
  meta.num_activities = parsed.activity_names.size();
  meta.sample_rate_hz = rate;
  meta.extra = {{"downsample_factor", proto.downsample_factor},
                {"window_seconds", proto.window_seconds},
                {"step_seconds", proto.step_seconds},
                {"non_overlapping", step >= window_len}};
  return make_window_set(streams, window_len, step, std::move(meta), &parsed.report);
}

}  // namespace har::data
