#include <CLI11.hpp>

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <set>

#include "har/data/datasets.hpp"
#include "har/data/synth.hpp"
#include "har/data/window_io.hpp"
#include "har/eval/projection.hpp"
#include "har/training/suite.hpp"

#ifndef HARKIT_VERSION
#define HARKIT_VERSION "0.0.0"
#endif

namespace fs = std::filesystem;
using nlohmann::json;
using namespace har;

namespace {

constexpr const char* kDataEnv = "HAR_DATA_DIR";

struct Failure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Failure("cannot write " + path.string());
  out << text;
  if (!out) throw Failure("write failed: " + path.string());
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

class Stopwatch {
 public:
  void mark(const std::string& phase) {
    const auto now = std::chrono::steady_clock::now();
    phases_[phase] = std::chrono::duration<double>(now - last_).count();
    last_ = now;
  }
  json to_json() const { return phases_; }

 private:
  std::chrono::steady_clock::time_point last_ = std::chrono::steady_clock::now();
  std::map<std::string, double> phases_;
};

/// Deterministic manifest; wall-clock timings go to a sibling file so that
/// reruns leave manifest.json byte-identical.
struct RunManifest {
  std::string command;
  std::vector<std::string> arguments;
  json config = json::object();
  std::uint64_t seed = 0;
  std::vector<fs::path> artifacts;

  void finish(const fs::path& out_dir, const Stopwatch& timer) {
    json paths = json::array();
    for (const auto& a : artifacts) {
      if (!fs::exists(a)) throw Failure("artifact missing after " + command + ": " + a.string());
      paths.push_back(a.generic_string());
    }
    write_json(out_dir / "timings.json", timer.to_json());
    write_json(out_dir / "manifest.json", {{"command", command},
                                           {"arguments", arguments},
                                           {"config", config},
                                           {"seed", seed},
                                           {"artifacts", paths},
                                           {"timings", (out_dir / "timings.json").generic_string()},
                                           {"version", HARKIT_VERSION}});
  }
};

fs::path data_home() {
  const char* env = std::getenv(kDataEnv);
  return env && *env ? fs::path(env) : fs::path("har_data");
}

/// "synth" (default synthetic set), a window file, a directory holding
/// windows.bin, or the name of a dataset prepared under $HAR_DATA_DIR.
data::WindowSet load_data(const std::string& spec) {
  if (spec == "synth") return data::synthesize_windows(data::SynthSpec{});
  fs::path p(spec);
  if (!fs::exists(p)) p = data_home() / "prepared" / spec;
  if (fs::is_directory(p)) p /= "windows.bin";
  if (!fs::exists(p)) {
    throw Failure("no window data at '" + spec + "' (tried " + p.string() + "); run synth or prepare first");
  }
  return data::read_windows(p);
}

/// One --flag per TrainConfig key, dashes for underscores. Values are read as
/// JSON when they parse, as plain strings otherwise.
class ConfigFlags {
 public:
  void attach(CLI::App* app) {
    app->add_option("--config", file_, "JSON file with TrainConfig keys; flags override it");
    for (const auto& key : training::config_keys()) {
      std::string flag = key;
      std::replace(flag.begin(), flag.end(), '_', '-');
      app->add_option("--" + flag, values_[key], "TrainConfig key " + key);
    }
  }

  training::TrainConfig resolve() const {
    json j = json::object();
    if (!file_.empty()) {
      std::ifstream in(file_);
      if (!in) throw Failure("cannot read config " + file_);
      try {
        j = json::parse(in);
      } catch (const json::exception& e) {
        throw Failure("config " + file_ + ": " + e.what());
      }
      if (!j.is_object()) throw Failure("config " + file_ + " must hold a JSON object");
    }
    for (const auto& [key, text] : values_) {
      if (text.empty()) continue;
      const auto parsed = json::parse(text, nullptr, false);
      j[key] = parsed.is_discarded() ? json(text) : parsed;
    }
    return training::TrainConfig::from_json(j);
  }

 private:
  std::string file_;
  std::map<std::string, std::string> values_;
};

// ---------------------------------------------------------------- synth

void write_streams_csv(const fs::path& path, const std::vector<data::SensorStream>& streams) {
  std::ostringstream os;
  os << "subject,t,label";
  for (const auto& n : streams.front().channel_names) os << ',' << n;
  os << '\n';
  os << std::setprecision(9);
  for (const auto& s : streams) {
    for (std::size_t t = 0; t < s.length(); ++t) {
      os << s.subject_id << ',' << t << ',' << s.labels[t];
      for (const auto& ch : s.channels) os << ',' << ch[t];
      os << '\n';
    }
  }
  write_text(path, os.str());
}

void write_window_outputs(const fs::path& out, const data::WindowSet& ws, const data::IngestReport& report,
                          RunManifest& run) {
  data::write_windows(out / "windows.bin", ws);
  features::write_feature_csv(out / "features.csv", features::extract_feature_set(ws));
  write_json(out / "ingest.json", report.to_json());
  for (const char* f : {"windows.bin", "features.csv", "ingest.json"}) run.artifacts.push_back(out / f);
}

void cmd_synth(const data::SynthSpec& spec, const fs::path& out, RunManifest& run) {
  Stopwatch timer;
  fs::create_directories(out);
  const auto streams = data::synthesize(spec);
  write_streams_csv(out / "streams.csv", streams);
  run.artifacts.push_back(out / "streams.csv");
  data::IngestReport report;
  const auto ws = data::synthesize_windows(spec, &report);
  timer.mark("synthesize");
  write_window_outputs(out, ws, report, run);
  timer.mark("write");
  run.config = spec.to_json();
  run.seed = spec.seed;
  run.finish(out, timer);
  std::cout << "synthetic windows: " << ws.size() << " -> " << (out / "windows.bin").string() << "\n";
}

// ---------------------------------------------------------------- prepare

void cmd_prepare(const std::string& name, fs::path root, fs::path out, RunManifest& run) {
  Stopwatch timer;
  const auto dataset = data::dataset_from_string(name);
  if (root.empty()) root = data_home() / name;
  if (out.empty()) out = data_home() / "prepared" / name;
  if (!fs::is_directory(root)) {
    throw Failure("dataset root " + root.string() + " does not exist (set --root or " + kDataEnv + ")");
  }
  auto parsed = data::parse_dataset(dataset, root);
  timer.mark("parse");
  const auto ws = data::prepare_windows(parsed);
  timer.mark("window");
  fs::create_directories(out);
  write_window_outputs(out, ws, parsed.report, run);
  timer.mark("write");
  run.config = {{"dataset", name}, {"root", root.generic_string()}};
  run.finish(out, timer);
  std::cout << name << ": " << ws.size() << " windows of " << ws.window_len() << " samples, step " << ws.meta.step
            << " -> " << out.string() << "\n";
}

// ---------------------------------------------------------------- train / eval

void print_report_table(const std::vector<std::pair<std::string, eval::EvalReport>>& rows) {
  std::size_t w = 6;
  for (const auto& row : rows) w = std::max(w, row.first.size() + 2);
  std::cout << std::left << std::setw(static_cast<int>(w)) << "name" << std::setw(24) << "regime" << std::setw(10) << "accuracy"
            << std::setw(10) << "macro_f1" << "person_acc\n";
  std::cout << std::fixed << std::setprecision(4);
  for (const auto& [name, r] : rows) {
    std::cout << std::setw(static_cast<int>(w)) << name << std::setw(24) << r.regime << std::setw(10) << r.accuracy << std::setw(10)
              << r.macro_f1;
    if (r.person_accuracy) std::cout << *r.person_accuracy;
    std::cout << "\n";
  }
  std::cout.unsetf(std::ios::floatfield);
}

std::string log_csv(const std::vector<training::EpochRecord>& log) {
  std::set<std::string> comps;
  for (const auto& e : log)
    for (const auto& [k, v] : e.components) comps.insert(k);
  std::ostringstream os;
  os << std::setprecision(9) << "stage,epoch,loss";
  for (const auto& c : comps) os << ',' << c;
  os << ",val_loss\n";
  for (const auto& e : log) {
    os << e.stage << ',' << e.epoch << ',' << e.loss;
    for (const auto& c : comps) {
      os << ',';
      if (auto it = e.components.find(c); it != e.components.end()) os << it->second;
    }
    os << ',';
    if (e.val_loss) os << *e.val_loss;
    os << '\n';
  }
  return os.str();
}

void cmd_train(const training::TrainConfig& cfg, const std::string& data_spec, const fs::path& out,
               const fs::path& stage1_cache, bool validation, bool quiet, RunManifest& run) {
  Stopwatch timer;
  const auto ws = load_data(data_spec);
  const auto prepared = training::prepare_data(ws, cfg);
  timer.mark("prepare");
  fs::create_directories(out);
  training::TrainOptions opts;
  opts.work_dir = out;
  opts.stage1_cache = stage1_cache;
  opts.validation = validation;
  if (!quiet) {
    opts.on_epoch = [](const training::EpochRecord& e) {
      std::cerr << "stage " << e.stage << " epoch " << e.epoch << " loss " << e.loss;
      if (e.val_loss) std::cerr << " val " << *e.val_loss;
      std::cerr << "\n";
    };
  }
  auto result = training::train(cfg, prepared, opts);
  timer.mark("train");
  const auto report = training::evaluate(result.model, result.config, prepared);
  timer.mark("evaluate");

  training::save_model(out / "model.ckpt", result, prepared);
  write_json(out / "train_manifest.json", result.manifest);
  write_json(out / "report.json", report.to_json());
  write_text(out / "log.csv", log_csv(result.log));
  for (const char* f : {"model.ckpt", "train_manifest.json", "report.json", "log.csv"}) run.artifacts.push_back(out / f);
  if (cfg.regime == training::Regime::weakly_self_supervised) {
    // Per-stage manifests of the two-stage regime.
    for (int stage : {1, 2}) {
      json log = json::array();
      for (const auto& e : result.log)
        if (e.stage == stage) log.push_back(e.to_json());
      json m = {{"stage", stage},
                {"epochs", stage == 1 ? cfg.stage1_epochs : cfg.stage2_epochs},
                {"weights",
                 {{"alpha", (stage == 1 ? cfg.weights : cfg.stage2_weights).alpha},
                  {"beta", (stage == 1 ? cfg.weights : cfg.stage2_weights).beta},
                  {"gamma", (stage == 1 ? cfg.weights : cfg.stage2_weights).gamma}}},
                {"log", log}};
      if (stage == 1) {
        m["stage1_hash"] = cfg.stage1_hash();
        m["final_digest"] = result.stage1_final_digest;
      } else {
        m["initial_digest"] = result.stage2_initial_digest;
        m["labeled_windows"] = result.labeled.size();
      }
      const auto path = out / ("stage" + std::to_string(stage) + "_manifest.json");
      write_json(path, m);
      run.artifacts.push_back(path);
    }
    if (fs::exists(out / "stage1.ckpt")) run.artifacts.push_back(out / "stage1.ckpt");
  }
  run.config = result.config.to_json();
  run.seed = cfg.seed;
  run.finish(out, timer);
  print_report_table({{cfg.name.empty() ? std::string(training::to_string(cfg.regime)) : cfg.name, report}});
}

void cmd_eval(const std::vector<std::string>& models, const std::string& data_spec, const fs::path& out,
              RunManifest& run) {
  Stopwatch timer;
  const auto ws = load_data(data_spec);
  std::vector<std::pair<std::string, eval::EvalReport>> rows;
  json reports = json::array();
  for (const auto& path : models) {
    auto loaded = training::load_model(path);
    const auto prepared = training::prepare_data(ws, loaded.config);
    const auto report = training::evaluate(loaded.model, loaded.config, prepared);
    reports.push_back({{"model", path}, {"report", report.to_json()}});
    rows.emplace_back(loaded.config.name.empty() ? fs::path(path).parent_path().filename().string() : loaded.config.name,
                      report);
  }
  timer.mark("evaluate");
  print_report_table(rows);
  if (!out.empty()) {
    fs::create_directories(out);
    write_json(out / "eval.json", reports);
    run.artifacts.push_back(out / "eval.json");
    run.config = {{"models", models}, {"data", data_spec}};
    run.finish(out, timer);
  }
}

// ---------------------------------------------------------------- ablate

void cmd_ablate(const training::TrainConfig& base, const std::string& data_spec, const std::string& matrix,
                const std::vector<double>& fractions, std::vector<std::uint64_t> seeds, const fs::path& out,
                RunManifest& run) {
  Stopwatch timer;
  const auto ws = load_data(data_spec);
  if (seeds.empty()) seeds.push_back(base.seed);
  std::vector<training::TrainConfig> configs;
  std::vector<std::string> order;
  for (auto seed : seeds) {
    auto b = base;
    b.seed = seed;
    std::vector<training::TrainConfig> rows;
    if (matrix == "loss") {
      rows = training::ablation_matrix(b);
    } else {
      // Label-fraction rows, preceded by the self-supervised reference.
      auto ss = training::TrainConfig::defaults_for(training::Regime::self_supervised);
      auto ref = b;
      ref.regime = training::Regime::self_supervised;
      ref.weights = ss.weights;
      ref.epochs = b.stage1_epochs;
      ref.name = "self_supervised";
      rows.push_back(ref);
      for (auto& c : training::label_fraction_matrix(b, fractions)) rows.push_back(c);
    }
    for (auto& c : rows) {
      if (std::find(order.begin(), order.end(), c.name) == order.end()) order.push_back(c.name);
      configs.push_back(c);
    }
  }
  fs::create_directories(out);
  training::SuiteOptions opts;
  opts.work_dir = out;
  opts.on_row = [](const training::SuiteRow& r, std::size_t i) {
    std::cerr << "[" << i + 1 << "] " << r.config.name << " seed " << r.config.seed << ": "
              << (r.report ? std::to_string(r.report->accuracy) : "error: " + r.error) << "\n";
  };
  const auto rows = training::run_experiment_suite(configs, ws, opts);
  timer.mark("suite");

  // Seed-averaged table in matrix order.
  std::ostringstream table;
  table << "name,seeds,accuracy,macro_f1\n" << std::fixed << std::setprecision(6);
  std::vector<std::pair<std::string, eval::EvalReport>> shown;
  std::size_t failed = 0;
  for (const auto& name : order) {
    double acc = 0, f1 = 0;
    std::size_t n = 0;
    std::string regime;
    for (const auto& r : rows) {
      if (r.config.name != name) continue;
      regime = training::to_string(r.config.regime);
      if (!r.report) {
        ++failed;
        continue;
      }
      acc += r.report->accuracy;
      f1 += r.report->macro_f1;
      ++n;
    }
    if (n == 0) continue;
    table << name << ',' << n << ',' << acc / n << ',' << f1 / n << '\n';
    eval::EvalReport mean;
    mean.regime = regime;
    mean.accuracy = acc / n;
    mean.macro_f1 = f1 / n;
    shown.emplace_back(name, mean);
  }
  write_text(out / "rows.csv", training::suite_csv(rows));
  write_json(out / "rows.json", training::suite_json(rows));
  write_text(out / "table.csv", table.str());
  for (const char* f : {"rows.csv", "rows.json", "table.csv"}) run.artifacts.push_back(out / f);
  run.config = {{"base", base.to_json()}, {"matrix", matrix}, {"fractions", fractions}, {"seeds", seeds},
                {"data", data_spec}};
  run.seed = base.seed;
  run.finish(out, timer);
  print_report_table(shown);
  if (failed) throw Failure(std::to_string(failed) + " suite row(s) failed; see rows.csv");
}

// ---------------------------------------------------------------- project

void cmd_project(const std::string& model_path, const std::string& data_spec, const std::string& split,
                 const std::string& method, std::size_t subsample, eval::TsneOptions tsne, const fs::path& out,
                 RunManifest& run) {
  Stopwatch timer;
  auto loaded = training::load_model(model_path);
  const auto ws = load_data(data_spec);
  const auto prepared = training::prepare_data(ws, loaded.config);
  const data::WindowSet* part = &prepared.test;
  const features::FeatureSet* feats = &prepared.test_features;
  if (split == "train") {
    part = &prepared.train;
    feats = &prepared.train_features;
  } else if (split == "val") {
    part = &prepared.val;
    feats = &prepared.val_features;
  }
  std::vector<std::size_t> idx(part->size());
  std::iota(idx.begin(), idx.end(), 0);
  if (subsample > 0 && subsample < idx.size()) {
    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < subsample; ++i) keep.push_back(i * idx.size() / subsample);
    idx = keep;
  }
  const auto inputs = training::uses_features(loaded.config.regime) ? training::feature_tensor(*feats, idx)
                                                                     : training::window_tensor(*part, idx);
  const auto emb = loaded.model.embed(inputs);
  std::vector<int> labels;
  const auto all = part->activities();
  for (auto i : idx) labels.push_back(all[i]);
  timer.mark("embed");

  tsne.seed = loaded.config.derive_seed("tsne");
  const auto coords = method == "pca" ? eval::pca_2d(emb) : eval::tsne_2d(emb, tsne);
  timer.mark(method);
  fs::create_directories(out);
  eval::write_projection_csv(out / "projection.csv", coords, labels);
  eval::write_scatter_svg(out / "projection.svg", coords, labels, prepared.activity_names,
                          std::string(training::to_string(loaded.config.regime)) + " (" + method + ", " + split + ")");
  run.artifacts = {out / "projection.csv", out / "projection.svg"};
  run.config = {{"model", model_path}, {"data", data_spec}, {"split", split}, {"method", method},
                {"subsample", subsample}, {"points", idx.size()}};
  if (method == "tsne") {
    run.config["perplexity"] = tsne.perplexity;
    run.config["iterations"] = tsne.iterations;
  }
  run.seed = loaded.config.seed;
  run.finish(out, timer);
  std::cout << "silhouette (2-d, by activity): " << eval::silhouette_score(coords, labels) << "\n";
}

// ---------------------------------------------------------------- report

void cmd_report(const std::vector<std::string>& roots, const fs::path& out, RunManifest& run) {
  Stopwatch timer;
  std::vector<fs::path> files;
  for (const auto& r : roots) {
    if (fs::is_regular_file(r)) {
      files.emplace_back(r);
    } else if (fs::is_directory(r)) {
      for (const auto& e : fs::recursive_directory_iterator(r))
        if (e.is_regular_file() && e.path().filename() == "report.json") files.push_back(e.path());
    } else {
      throw Failure("no such run directory or report: " + r);
    }
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw Failure("no report.json found");
  std::ostringstream csv;
  csv << "run,regime,label_fraction,seed,accuracy,macro_f1,person_accuracy\n" << std::setprecision(6);
  std::vector<std::pair<std::string, eval::EvalReport>> rows;
  for (const auto& f : files) {
    std::ifstream in(f);
    const auto j = json::parse(in);
    const auto& extra = j.value("extra", json::object());
    eval::EvalReport r;
    r.regime = j.value("regime", "");
    r.accuracy = j.value("accuracy", 0.0);
    r.macro_f1 = j.value("macro_f1", 0.0);
    if (j.contains("person_accuracy") && j["person_accuracy"].is_number()) r.person_accuracy = j["person_accuracy"];
    const std::string name = f.parent_path().filename().string();
    csv << name << ',' << r.regime << ',' << extra.value("label_fraction", 1.0) << ',' << extra.value("seed", 0)
        << ',' << r.accuracy << ',' << r.macro_f1 << ',';
    if (r.person_accuracy) csv << *r.person_accuracy;
    csv << '\n';
    rows.emplace_back(name, r);
  }
  print_report_table(rows);
  timer.mark("collect");
  if (!out.empty()) {
    fs::create_directories(out);
    write_text(out / "report.csv", csv.str());
    run.artifacts.push_back(out / "report.csv");
    json sources = json::array();
    for (const auto& f : files) sources.push_back(f.generic_string());
    run.config = {{"reports", sources}};
    run.finish(out, timer);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"harkit: representation learning for wearable activity recognition"};
  app.set_version_flag("--version", HARKIT_VERSION);
  app.require_subcommand(1);

  RunManifest run;
  for (int i = 1; i < argc; ++i) run.arguments.emplace_back(argv[i]);

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a synthetic dataset");
  data::SynthSpec spec;
  fs::path synth_out = "synth";
  std::string spec_file;
  synth->add_option("--out", synth_out, "Output directory");
  synth->add_option("--spec", spec_file, "JSON generator spec; flags override it");
  synth->add_option("--activities", spec.activities);
  synth->add_option("--subjects", spec.subjects);
  synth->add_option("--channels", spec.channels);
  synth->add_option("--samples-per-class", spec.samples_per_class);
  synth->add_option("--segments-per-class", spec.segments_per_class);
  synth->add_option("--noise", spec.noise);
  synth->add_option("--sample-rate", spec.sample_rate_hz);
  synth->add_option("--mean-spread", spec.mean_spread);
  synth->add_option("--subject-scale", spec.subject_scale);
  synth->add_option("--subject-bias", spec.subject_bias);
  synth->add_option("--burst-rate", spec.burst_rate_hz);
  synth->add_option("--burst-scale", spec.burst_scale);
  synth->add_option("--window-len", spec.window_len);
  synth->add_option("--step", spec.step);
  synth->add_option("--seed", spec.seed);

  // prepare
  auto* prepare = app.add_subcommand("prepare", "Window a downloaded benchmark with its published protocol");
  std::string dataset;
  fs::path prep_root, prep_out;
  prepare->add_option("dataset", dataset, "uci_smartphone | pamap2 | realdisp")->required();
  prepare->add_option("--root", prep_root, std::string("Raw dataset directory (default $") + kDataEnv + "/<dataset>)");
  prepare->add_option("--out", prep_out, std::string("Output directory (default $") + kDataEnv + "/prepared/<dataset>)");

  // train
  auto* train = app.add_subcommand("train", "Train one regime and evaluate it on the test split");
  ConfigFlags train_flags;
  train_flags.attach(train);
  std::string train_data = "synth";
  fs::path train_out = "run", stage1_cache;
  bool no_validation = false, quiet = false;
  train->add_option("--data", train_data, "synth, a window file/directory, or a prepared dataset name");
  train->add_option("--out", train_out, "Run directory");
  train->add_option("--stage1-cache", stage1_cache, "Directory of reusable stage-1 checkpoints");
  train->add_flag("--no-validation", no_validation, "Skip per-epoch validation losses");
  train->add_flag("--quiet", quiet, "No per-epoch progress");

  // eval
  auto* evalc = app.add_subcommand("eval", "Evaluate trained checkpoints");
  std::vector<std::string> eval_models;
  std::string eval_data = "synth";
  fs::path eval_out;
  evalc->add_option("--model", eval_models, "Checkpoint(s) written by train")->required();
  evalc->add_option("--data", eval_data, "Data the models were trained on");
  evalc->add_option("--out", eval_out, "Optional directory for eval.json");

  // ablate
  auto* ablate = app.add_subcommand("ablate", "Run the loss ablation or label-fraction matrix");
  ConfigFlags ablate_flags;
  ablate_flags.attach(ablate);
  std::string ablate_data = "synth", matrix = "loss";
  std::vector<double> fractions{0.01, 0.05, 0.10};
  std::vector<std::uint64_t> seeds;
  fs::path ablate_out = "ablation";
  ablate->add_option("--data,--dataset", ablate_data, "synth, a window file/directory, or a prepared dataset name");
  ablate->add_option("--matrix", matrix, "loss | labels")->check(CLI::IsMember({"loss", "labels"}));
  ablate->add_option("--fractions", fractions, "Label fractions of the labels matrix");
  ablate->add_option("--seeds", seeds, "Seeds to average over (default: the config seed)");
  ablate->add_option("--out", ablate_out, "Output directory");

  // project
  auto* project = app.add_subcommand("project", "2-D projection of learned embeddings as CSV and SVG");
  std::string proj_model, proj_data = "synth", proj_split = "test", proj_method = "tsne";
  std::size_t subsample = 0;
  eval::TsneOptions tsne;
  fs::path proj_out = "projection";
  project->add_option("--model", proj_model, "Checkpoint written by train")->required();
  project->add_option("--data", proj_data, "Data the model was trained on");
  project->add_option("--split", proj_split)->check(CLI::IsMember({"train", "val", "test"}));
  project->add_option("--method", proj_method)->check(CLI::IsMember({"tsne", "pca"}));
  project->add_option("--subsample", subsample, "Evenly spaced subset of this many points");
  project->add_option("--perplexity", tsne.perplexity);
  project->add_option("--iterations", tsne.iterations);
  project->add_option("--max-points", tsne.max_points);
  project->add_option("--out", proj_out, "Output directory");

  // report
  auto* report = app.add_subcommand("report", "Tabulate report.json files of finished runs");
  std::vector<std::string> report_roots;
  fs::path report_out;
  report->add_option("runs", report_roots, "Run directories or report files")->required();
  report->add_option("--out", report_out, "Optional directory for report.csv");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*synth) {
      run.command = "synth";
      if (!spec_file.empty()) {
        std::ifstream in(spec_file);
        if (!in) throw Failure("cannot read spec " + spec_file);
        auto j = spec.to_json();
        // File values first, then any explicitly given flag.
        auto file = json::parse(in);
        auto from_file = data::SynthSpec::from_json(file).to_json();
        for (auto& [k, v] : from_file.items()) {
          std::string flag = k;
          std::replace(flag.begin(), flag.end(), '_', '-');
          if (flag == "sample-rate-hz") flag = "sample-rate";
          if (flag == "burst-rate-hz") flag = "burst-rate";
          bool given = false;
          try {
            given = synth->count("--" + flag) > 0;
          } catch (const CLI::OptionNotFound&) {
          }
          if (!given) j[k] = v;
        }
        spec = data::SynthSpec::from_json(j);
      }
      cmd_synth(spec, synth_out, run);
    } else if (*prepare) {
      run.command = "prepare";
      cmd_prepare(dataset, prep_root, prep_out, run);
    } else if (*train) {
      run.command = "train";
      cmd_train(train_flags.resolve(), train_data, train_out, stage1_cache, !no_validation, quiet, run);
    } else if (*evalc) {
      run.command = "eval";
      cmd_eval(eval_models, eval_data, eval_out, run);
    } else if (*ablate) {
      run.command = "ablate";
      cmd_ablate(ablate_flags.resolve(), ablate_data, matrix, fractions, seeds, ablate_out, run);
    } else if (*project) {
      run.command = "project";
      cmd_project(proj_model, proj_data, proj_split, proj_method, subsample, tsne, proj_out, run);
    } else if (*report) {
      run.command = "report";
      cmd_report(report_roots, report_out, run);
    }
  } catch (const training::ConfigError& e) {
    std::cerr << "invalid configuration:\n";
    for (const auto& err : e.errors()) std::cerr << "  " << err << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
