#include "har/training/suite.hpp"

#include <cstdio>
#include <map>
#include <random>
#include <sstream>


namespace har::training {

namespace {

// Settings that change prepare_data's output.
std::string data_key(const TrainConfig& c) {
  nlohmann::json j = {{"seed", c.seed},
                      {"split", c.split},
                      {"split_mode", c.split_mode == data::SplitMode::window ? "window" : "subject"},
                      {"temporal_radius", c.temporal_radius},
                      {"knn_k", c.knn_k},
                      {"include_self", c.include_self}};
  return j.dump();
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

std::string number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

}  // namespace

std::vector<SuiteRow> run_experiment_suite(const std::vector<TrainConfig>& configs, const data::WindowSet& ws,
                                           const SuiteOptions& opts) {
  std::vector<SuiteRow> rows;
  if (configs.empty()) return rows;

  std::filesystem::path cache = opts.work_dir.empty() ? std::filesystem::path() : opts.work_dir / "stage1";
  bool owned = false;
  if (cache.empty()) {
    cache = std::filesystem::temp_directory_path() / ("harkit-suite-" + std::to_string(std::random_device{}()));
    owned = true;
  }

  std::map<std::string, PreparedData> prepared;
  for (std::size_t i = 0; i < configs.size(); ++i) {
    SuiteRow row;
    row.config = configs[i];
    try {
      const auto key = data_key(row.config);
      auto it = prepared.find(key);
      if (it == prepared.end()) {
        // Keep memory bounded: one prepared split at a time.
        prepared.clear();
        it = prepared.emplace(key, prepare_data(ws, row.config)).first;
      }
      TrainOptions topts;
      topts.stage1_cache = cache;
      topts.validation = opts.validation;
      auto result = train(row.config, it->second, topts);
      row.report = evaluate(result.model, result.config, it->second);
      row.manifest = std::move(result.manifest);
      row.stage1_reused = result.stage1_reused;
    } catch (const std::exception& e) {
      row.error = e.what();
    }
    if (opts.on_row) opts.on_row(row, i);
    rows.push_back(std::move(row));
  }
  if (owned) {
    std::error_code ec;
    std::filesystem::remove_all(cache, ec);
  }
  return rows;
}

std::vector<TrainConfig> ablation_matrix(const TrainConfig& base) {
  const auto defaults = TrainConfig::defaults_for(Regime::self_supervised);
  const double alpha = base.regime == Regime::self_supervised ? base.weights.alpha : defaults.weights.alpha;
  const double beta = base.regime == Regime::self_supervised ? base.weights.beta : defaults.weights.beta;
  struct Row {
    const char* name;
    bool tc, fc;
  };
  std::vector<TrainConfig> out;
  for (const Row r : {Row{"ae", false, false}, Row{"tc+ae", true, false}, Row{"fc+ae", false, true},
                      Row{"tc+fc+ae", true, true}}) {
    TrainConfig c = base;
    c.regime = Regime::self_supervised;
    c.name = r.name;
    c.weights.alpha = r.tc ? alpha : 0.0;
    c.weights.beta = r.fc ? beta : 0.0;
    out.push_back(c);
  }
  return out;
}

std::vector<TrainConfig> label_fraction_matrix(const TrainConfig& base, const std::vector<double>& fractions) {
  std::vector<TrainConfig> out;
  for (double f : fractions) {
    TrainConfig c = base;
    if (c.regime != Regime::weakly_self_supervised) {
      const auto d = TrainConfig::defaults_for(Regime::weakly_self_supervised);
      c.regime = d.regime;
      c.weights = d.weights;
      c.stage2_weights = d.stage2_weights;
    }
    c.label_fraction = f;
    char buf[48];
    std::snprintf(buf, sizeof(buf), "weakly_self_supervised@%g%%", f * 100.0);
    c.name = buf;
    out.push_back(c);
  }
  return out;
}

std::string suite_csv(const std::vector<SuiteRow>& rows) {
  std::ostringstream os;
  os << "name,regime,label_fraction,seed,accuracy,macro_f1,person_accuracy,config_hash,error\n";
  for (const auto& r : rows) {
    os << csv_field(r.config.name) << ',' << to_string(r.config.regime) << ',' << number(r.config.label_fraction) << ','
       << r.config.seed << ',';
    if (r.report) {
      os << number(r.report->accuracy) << ',' << number(r.report->macro_f1) << ','
         << (r.report->person_accuracy ? number(*r.report->person_accuracy) : "") << ',';
    } else {
      os << ",,,";
    }
    os << r.config.hash() << ',' << csv_field(r.error) << '\n';
  }
  return os.str();
}

nlohmann::json suite_json(const std::vector<SuiteRow>& rows) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& r : rows) {
    out.push_back({{"name", r.config.name},
                   {"config", r.config.to_json()},
                   {"report", r.report ? r.report->to_json() : nlohmann::json()},
                   {"error", r.error.empty() ? nlohmann::json() : nlohmann::json(r.error)}});
  }
  return out;
}

}  // namespace har::training
