#include "har/training/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "har/io.hpp"
#include "har/nn/checkpoint.hpp"
#include "har/nn/optim.hpp"
#include "har/pairs/pairs.hpp"

namespace har::training {

using nn::Tensor;
using FVar = nn::Var<float>;
using losses::NeighborLists;

namespace {

constexpr std::size_t kEvalChunk = 256;
constexpr std::size_t kMaxValPairs = 2048;

Tensor<float> gather_rows(const Tensor<float>& src, const std::vector<std::size_t>& idx) {
  const std::size_t row = src.size() / src.dim(0);
  nn::Shape shape = src.shape();
  shape[0] = idx.size();
  Tensor<float> out(shape);
  for (std::size_t i = 0; i < idx.size(); ++i) {
    std::copy_n(src.data() + idx[i] * row, row, out.data() + i * row);
  }
  return out;
}

Tensor<float> row_range(const Tensor<float>& src, std::size_t begin, std::size_t end) {
  std::vector<std::size_t> idx(end - begin);
  std::iota(idx.begin(), idx.end(), begin);
  return gather_rows(src, idx);
}

NeighborLists gather_lists(const neighbors::NeighborIndex& index, const std::vector<std::size_t>& rows) {
  NeighborLists out;
  out.reserve(rows.size());
  for (std::size_t r : rows) out.push_back(index.lists[r]);
  return out;
}

std::vector<int> gather_ints(const std::vector<int>& v, const std::vector<std::size_t>& idx) {
  std::vector<int> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(v[i]);
  return out;
}

template <typename V>
std::vector<V> slice(const std::vector<V>& v, std::size_t begin, std::size_t end) {
  return std::vector<V>(v.begin() + static_cast<std::ptrdiff_t>(begin), v.begin() + static_cast<std::ptrdiff_t>(end));
}

// Contiguous chunks of `size`; a trailing chunk of one row joins the previous
// one because batch norm needs at least two rows.
std::vector<std::pair<std::size_t, std::size_t>> chunks(std::size_t n, std::size_t size) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t b = 0; b < n; b += size) out.emplace_back(b, std::min(n, b + size));
  if (out.size() > 1 && out.back().second - out.back().first == 1) {
    out.pop_back();
    out.back().second = n;
  }
  return out;
}

double scalar(const FVar& v) { return static_cast<double>(v.value().item()); }

double mean_of(const FVar& v) {
  double s = 0.0;
  for (float x : v.value().values()) s += x;
  return v.size() ? s / static_cast<double>(v.size()) : 0.0;
}

struct BatchLoss {
  FVar loss;
  double per_item = 0.0;
  std::map<std::string, double> components;
};

struct Accumulator {
  double loss = 0.0;
  std::map<std::string, double> components;
  std::size_t items = 0;

  void add(const BatchLoss& b, std::size_t n) {
    loss += b.per_item * static_cast<double>(n);
    for (const auto& [k, v] : b.components) components[k] += v * static_cast<double>(n);
    items += n;
  }
  double mean() const { return items ? loss / static_cast<double>(items) : 0.0; }
};

void guard_finite(double value, Regime regime, int stage, std::size_t epoch, std::size_t batch) {
  if (!std::isfinite(value)) {
    throw std::runtime_error("non-finite loss (" + std::to_string(value) + ") in " + std::string(to_string(regime)) +
                             " at stage " + std::to_string(stage) + ", epoch " + std::to_string(epoch) + ", batch " +
                             std::to_string(batch) + "; lower the learning rate or check the input standardization");
  }
}

// ---------------------------------------------------------------- batch losses

BatchLoss ae_loss(models::ResidualAutoencoder<float>& ae, const Tensor<float>& x, const Tensor<float>& pool,
                  const NeighborLists* temporal, const NeighborLists* feature, const losses::LossWeights& w,
                  bool plain, nn::Context& ctx) {
  const auto xv = FVar::constant(x);
  const auto out = ae.forward(xv, ctx);
  BatchLoss b;
  b.loss = plain ? losses::reconstruction_loss(xv, out.recon)
                 : losses::self_supervised_loss(xv, out.recon, pool, *temporal, *feature, w);
  b.per_item = scalar(b.loss);
  nn::NoGradGuard guard;
  const auto r = FVar::constant(out.recon.value());
  b.components["ae"] = mean_of(losses::reconstruction_terms(xv, r));
  if (!plain) {
    b.components["tc"] = mean_of(losses::consistency_terms(r, pool, *temporal));
    b.components["fc"] = mean_of(losses::consistency_terms(r, pool, *feature));
  }
  return b;
}

BatchLoss wss_loss(models::SiameseResidualAutoencoder<float>& m, const Tensor<float>& pool,
                   const std::vector<std::size_t>& a, const std::vector<std::size_t>& b, const std::vector<int>& y,
                   const neighbors::NeighborIndex& temporal, const neighbors::NeighborIndex& feature,
                   const losses::LossWeights& w, nn::Context& ctx) {
  const auto xa = FVar::constant(gather_rows(pool, a));
  const auto xb = FVar::constant(gather_rows(pool, b));
  const auto [oa, ob] = m.forward_pair(xa, xb, ctx);
  const auto ta = gather_lists(temporal, a), tb = gather_lists(temporal, b);
  const auto fa = gather_lists(feature, a), fb = gather_lists(feature, b);
  const losses::PairSide<float> sa{xa, oa.recon, oa.latent, &ta, &fa};
  const losses::PairSide<float> sb{xb, ob.recon, ob.latent, &tb, &fb};
  BatchLoss out;
  out.loss = losses::weakly_self_supervised_loss(sa, sb, pool, y, w);
  const double n = static_cast<double>(a.size());
  out.per_item = scalar(out.loss) / n;
  nn::NoGradGuard guard;
  const auto ra = FVar::constant(oa.recon.value()), rb = FVar::constant(ob.recon.value());
  out.components["ae"] = mean_of(losses::reconstruction_terms(xa, ra)) + mean_of(losses::reconstruction_terms(xb, rb));
  out.components["tc"] = mean_of(losses::consistency_terms(ra, pool, ta)) + mean_of(losses::consistency_terms(rb, pool, tb));
  out.components["fc"] = mean_of(losses::consistency_terms(ra, pool, fa)) + mean_of(losses::consistency_terms(rb, pool, fb));
  out.components["contrastive"] =
      mean_of(losses::contrastive_terms(FVar::constant(oa.latent.value()), FVar::constant(ob.latent.value()),
                                        std::span<const int>(y), static_cast<float>(w.margin)));
  return out;
}

BatchLoss siamese_loss(models::SiameseTcn<float>& m, const Tensor<float>& xa_t, const Tensor<float>& xb_t,
                       const std::vector<int>& y_act, const std::vector<int>& y_pers, const losses::LossWeights& w,
                       nn::Context& ctx) {
  const auto xa = FVar::constant(xa_t), xb = FVar::constant(xb_t);
  const auto [oa, ob] = m.forward_pair(xa, xb, ctx);
  const auto margin = static_cast<float>(w.margin);
  BatchLoss out;
  const double n = static_cast<double>(y_act.size());
  if (m.multitask()) {
    out.loss = losses::multitask_contrastive(oa.act, ob.act, oa.pers, ob.pers, y_act, y_pers, w);
  } else {
    out.loss = losses::contrastive_loss(oa.act, ob.act, std::span<const int>(y_act), margin);
  }
  out.per_item = scalar(out.loss) / n;
  nn::NoGradGuard guard;
  out.components["act"] = mean_of(losses::contrastive_terms(FVar::constant(oa.act.value()),
                                                            FVar::constant(ob.act.value()), std::span<const int>(y_act), margin));
  if (m.multitask()) {
    out.components["pers"] = mean_of(losses::contrastive_terms(
        FVar::constant(oa.pers.value()), FVar::constant(ob.pers.value()), std::span<const int>(y_pers), margin));
  }
  return out;
}

BatchLoss supervised_loss(models::SupervisedTcn<float>& m, const Tensor<float>& x, const std::vector<int>& labels,
                          nn::Context& ctx) {
  BatchLoss b;
  b.loss = losses::cross_entropy(m.forward(FVar::constant(x), ctx), std::span<const int>(labels));
  b.per_item = scalar(b.loss);
  b.components["ce"] = b.per_item;
  return b;
}

// ---------------------------------------------------------------- per-split inputs

struct SplitInputs {
  Tensor<float> inputs;  // windows or features, by regime
  std::vector<int> activities, persons;
  const neighbors::NeighborIndex* temporal = nullptr;
  const neighbors::NeighborIndex* feature = nullptr;
  std::size_t size() const { return activities.size(); }
};

SplitInputs train_inputs(Regime r, const PreparedData& d) {
  SplitInputs s;
  s.inputs = uses_features(r) ? feature_tensor(d.train_features) : window_tensor(d.train);
  s.activities = d.train.activities();
  s.persons = d.train.persons();
  s.temporal = &d.train_temporal;
  s.feature = &d.train_feature;
  return s;
}

std::optional<SplitInputs> val_inputs(Regime r, const PreparedData& d) {
  if (d.val.size() < 2) return std::nullopt;
  if (uses_features(r) && (d.val_temporal.size() != d.val.size() || d.val_feature.size() != d.val.size())) {
    return std::nullopt;
  }
  SplitInputs s;
  s.inputs = uses_features(r) ? feature_tensor(d.val_features) : window_tensor(d.val);
  s.activities = d.val.activities();
  s.persons = d.val.persons();
  s.temporal = &d.val_temporal;
  s.feature = &d.val_feature;
  return s;
}

pairs::PairBatch draw_pairs(Regime r, const std::vector<std::size_t>& pool, const SplitInputs& s, std::size_t n,
                            double pos_ratio, std::uint64_t seed) {
  if (r == Regime::weak_multi) return pairs::sample_quadruples(pool, s.activities, s.persons, n, seed);
  return pairs::sample_pairs(pool, s.activities, n, pos_ratio, seed);
}

// ---------------------------------------------------------------- loops

class Loop {
 public:
  Loop(const TrainConfig& cfg, Model& model, const SplitInputs& train, const std::optional<SplitInputs>& val,
       const std::vector<std::size_t>& labeled, const TrainOptions& opts, std::vector<EpochRecord>& log)
      : cfg_(cfg), model_(model), train_(train), val_(val), labeled_(labeled), opts_(opts), log_(log) {}

  // Sample-wise regimes: supervised, autoencoder, self-supervised (stage 1).
  void run_samples(int stage, std::size_t epochs, const losses::LossWeights& w) {
    nn::Rng batch_rng(cfg_.derive_seed("batches"));
    nn::Rng dropout_rng(cfg_.derive_seed("dropout"));
    nn::Adam<float> opt(nn::trainable(model_.tensors()), {cfg_.learning_rate});
    const bool supervised = cfg_.regime == Regime::supervised;
    std::vector<std::size_t> order = supervised ? labeled_ : all(train_.size());
    for (std::size_t e = 1; e <= epochs; ++e) {
      std::shuffle(order.begin(), order.end(), batch_rng);
      Accumulator acc;
      std::size_t bi = 0;
      for (const auto& [b0, b1] : chunks(order.size(), cfg_.batch_size)) {
        const auto idx = slice(order, b0, b1);
        nn::Context ctx{nn::Mode::train, &dropout_rng};
        const auto bl = sample_batch(idx, train_, w, ctx);
        guard_finite(bl.per_item, cfg_.regime, stage, e, bi++);
        opt.zero_grad();
        nn::backward(bl.loss);
        opt.step();
        acc.add(bl, idx.size());
      }
      finish(stage, e, acc, [&] { return sample_val(w); });
    }
  }

  // Pair regimes: weak_single, weak_multi, and stage 2 of the two-stage regime.
  void run_pairs(int stage, std::size_t epochs, const losses::LossWeights& w) {
    const std::string suffix = stage == 1 ? "" : ":" + std::to_string(stage);
    nn::Rng batch_rng(cfg_.derive_seed("batches" + suffix));
    nn::Rng dropout_rng(cfg_.derive_seed("dropout" + suffix));
    nn::Adam<float> opt(nn::trainable(model_.tensors()), {cfg_.learning_rate});
    const std::size_t n_pairs = cfg_.pairs_per_label * labeled_.size();
    const std::uint64_t pair_seed = cfg_.derive_seed("pairs");
    for (std::size_t e = 1; e <= epochs; ++e) {
      auto batch = draw_pairs(cfg_.regime, labeled_, train_, n_pairs, cfg_.pos_ratio, pair_seed + (e - 1));
      for (auto& warning : batch.warnings) warnings_.insert(warning);
      std::vector<std::size_t> order = all(batch.size());
      std::shuffle(order.begin(), order.end(), batch_rng);
      Accumulator acc;
      std::size_t bi = 0;
      for (const auto& [b0, b1] : chunks(order.size(), cfg_.batch_size)) {
        const auto idx = slice(order, b0, b1);
        nn::Context ctx{nn::Mode::train, &dropout_rng};
        const auto bl = pair_batch(batch, idx, train_, w, ctx);
        guard_finite(bl.per_item, cfg_.regime, stage, e, bi++);
        opt.zero_grad();
        nn::backward(bl.loss);
        opt.step();
        acc.add(bl, idx.size());
      }
      finish(stage, e, acc, [&] { return pair_val(w); });
    }
  }

  const std::set<std::string>& warnings() const { return warnings_; }

 private:
  static std::vector<std::size_t> all(std::size_t n) {
    std::vector<std::size_t> v(n);
    std::iota(v.begin(), v.end(), 0);
    return v;
  }

  BatchLoss sample_batch(const std::vector<std::size_t>& idx, const SplitInputs& s, const losses::LossWeights& w,
                         nn::Context& ctx) {
    const auto x = gather_rows(s.inputs, idx);
    if (cfg_.regime == Regime::supervised) return supervised_loss(model_.supervised(), x, gather_ints(s.activities, idx), ctx);
    const bool plain = cfg_.regime == Regime::autoencoder;
    NeighborLists t, f;
    if (!plain) {
      t = gather_lists(*s.temporal, idx);
      f = gather_lists(*s.feature, idx);
    }
    return ae_loss(model_.autoencoder().autoencoder(), x, s.inputs, &t, &f, w, plain, ctx);
  }

  BatchLoss pair_batch(const pairs::PairBatch& batch, const std::vector<std::size_t>& sel, const SplitInputs& s,
                       const losses::LossWeights& w, nn::Context& ctx) {
    std::vector<std::size_t> a, b;
    std::vector<int> ya, yp;
    for (std::size_t i : sel) {
      a.push_back(batch.a[i]);
      b.push_back(batch.b[i]);
      ya.push_back(batch.y_act[i]);
      if (batch.has_person()) yp.push_back(batch.y_pers[i]);
    }
    if (cfg_.regime == Regime::weakly_self_supervised) {
      return wss_loss(model_.autoencoder(), s.inputs, a, b, ya, *s.temporal, *s.feature, w, ctx);
    }
    return siamese_loss(model_.siamese(), gather_rows(s.inputs, a), gather_rows(s.inputs, b), ya, yp, w, ctx);
  }

  std::optional<double> sample_val(const losses::LossWeights& w) {
    if (!val_) return std::nullopt;
    nn::NoGradGuard guard;
    nn::Context ctx{nn::Mode::eval, nullptr};
    Accumulator acc;
    for (const auto& [b0, b1] : chunks(val_->size(), kEvalChunk)) {
      std::vector<std::size_t> idx(b1 - b0);
      std::iota(idx.begin(), idx.end(), b0);
      acc.add(sample_batch(idx, *val_, w, ctx), idx.size());
    }
    return acc.mean();
  }

  std::optional<double> pair_val(const losses::LossWeights& w) {
    if (!val_) return std::nullopt;
    if (!val_pairs_) {
      try {
        const std::size_t n = std::min(kMaxValPairs, cfg_.pairs_per_label * val_->size());
        val_pairs_ = draw_pairs(cfg_.regime, all(val_->size()), *val_, n, cfg_.pos_ratio, cfg_.derive_seed("val_pairs"));
      } catch (const std::invalid_argument&) {
        val_ = std::nullopt;
        return std::nullopt;
      }
    }
    nn::NoGradGuard guard;
    nn::Context ctx{nn::Mode::eval, nullptr};
    Accumulator acc;
    for (const auto& [b0, b1] : chunks(val_pairs_->size(), kEvalChunk)) {
      std::vector<std::size_t> idx(b1 - b0);
      std::iota(idx.begin(), idx.end(), b0);
      acc.add(pair_batch(*val_pairs_, idx, *val_, w, ctx), idx.size());
    }
    return acc.mean();
  }

  template <typename ValFn>
  void finish(int stage, std::size_t epoch, const Accumulator& acc, ValFn&& val) {
    EpochRecord rec;
    rec.stage = stage;
    rec.epoch = epoch;
    rec.loss = acc.mean();
    for (const auto& [k, v] : acc.components) rec.components[k] = v / static_cast<double>(acc.items);
    if (opts_.validation) rec.val_loss = val();
    log_.push_back(rec);
    if (opts_.on_epoch) opts_.on_epoch(rec);
  }

  const TrainConfig& cfg_;
  Model& model_;
  const SplitInputs& train_;
  std::optional<SplitInputs> val_;
  std::optional<pairs::PairBatch> val_pairs_;
  const std::vector<std::size_t>& labeled_;
  const TrainOptions& opts_;
  std::vector<EpochRecord>& log_;
  std::set<std::string> warnings_;
};

eval::Matrix to_matrix(const Tensor<float>& t) {
  eval::Matrix m(static_cast<Eigen::Index>(t.dim(0)), static_cast<Eigen::Index>(t.dim(1)));
  for (std::size_t i = 0; i < t.size(); ++i) m.data()[i] = static_cast<double>(t[i]);
  return m;
}

template <typename Fn>
eval::Matrix batched(const Tensor<float>& inputs, Fn&& fn) {
  nn::NoGradGuard guard;
  nn::Context ctx{nn::Mode::eval, nullptr};
  eval::Matrix out;
  const std::size_t n = inputs.dim(0);
  for (std::size_t b = 0; b < n; b += kEvalChunk) {
    const auto part = to_matrix(fn(FVar::constant(row_range(inputs, b, std::min(n, b + kEvalChunk))), ctx).value());
    if (b == 0) out.resize(static_cast<Eigen::Index>(n), part.cols());
    out.middleRows(static_cast<Eigen::Index>(b), part.rows()) = part;
  }
  return out;
}

nlohmann::json log_json(const std::vector<EpochRecord>& log) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& r : log) j.push_back(r.to_json());
  return j;
}

std::vector<EpochRecord> log_from_json(const nlohmann::json& j) {
  std::vector<EpochRecord> out;
  for (const auto& r : j) {
    EpochRecord e;
    e.stage = r.at("stage").get<int>();
    e.epoch = r.at("epoch").get<std::size_t>();
    e.loss = r.at("loss").get<double>();
    e.components = r.at("components").get<std::map<std::string, double>>();
    if (!r.at("val_loss").is_null()) e.val_loss = r.at("val_loss").get<double>();
    out.push_back(e);
  }
  return out;
}

// Removes a temporary directory on scope exit.
struct TempDir {
  std::filesystem::path path;
  bool owned = false;
  ~TempDir() {
    if (owned) {
      std::error_code ec;
      std::filesystem::remove_all(path, ec);
    }
  }
};

}  // namespace

// ---------------------------------------------------------------- data

nn::Tensor<float> window_tensor(const data::WindowSet& ws, const std::vector<std::size_t>& idx) {
  const std::size_t c = ws.num_channels(), w = ws.window_len();
  Tensor<float> out({idx.size(), c, w});
  for (std::size_t i = 0; i < idx.size(); ++i) {
    const auto& v = ws.windows.at(idx[i]).values;
    std::copy(v.begin(), v.end(), out.data() + i * c * w);
  }
  return out;
}

nn::Tensor<float> window_tensor(const data::WindowSet& ws) {
  std::vector<std::size_t> idx(ws.size());
  std::iota(idx.begin(), idx.end(), 0);
  return window_tensor(ws, idx);
}

nn::Tensor<float> feature_tensor(const features::FeatureSet& fs, const std::vector<std::size_t>& idx) {
  Tensor<float> out({idx.size(), fs.cols});
  for (std::size_t i = 0; i < idx.size(); ++i) {
    const auto r = fs.row(idx.at(i));
    std::copy(r.begin(), r.end(), out.data() + i * fs.cols);
  }
  return out;
}

nn::Tensor<float> feature_tensor(const features::FeatureSet& fs) {
  return Tensor<float>({fs.rows, fs.cols}, fs.values);
}

PreparedData prepare_data(const data::WindowSet& ws, const TrainConfig& cfg) {
  cfg.validate();
  ws.validate();
  PreparedData d;
  d.split = data::stratified_split(ws, cfg.split, cfg.derive_seed("split"), cfg.split_mode);
  d.train = ws.subset(d.split.train);
  d.val = ws.subset(d.split.val);
  d.test = ws.subset(d.split.test);

  // Features come from the raw windows, before channel scaling.
  const auto raw_train = features::extract_feature_set(d.train);
  d.feature_std = features::FeatureStandardizer::fit(raw_train);
  d.train_features = d.feature_std.apply(raw_train);
  d.val_features = d.feature_std.apply(features::extract_feature_set(d.val));
  d.test_features = d.feature_std.apply(features::extract_feature_set(d.test));

  d.channel_std = data::ChannelStandardizer::fit(d.train);
  d.channel_std.apply(d.train);
  d.channel_std.apply(d.val);
  d.channel_std.apply(d.test);

  d.train_temporal = neighbors::temporal_neighbors(d.train, cfg.temporal_radius);
  d.train_feature = neighbors::feature_knn(d.train_features, cfg.knn_k, cfg.include_self);
  if (d.val.size() > cfg.knn_k) {
    d.val_temporal = neighbors::temporal_neighbors(d.val, cfg.temporal_radius);
    d.val_feature = neighbors::feature_knn(d.val_features, cfg.knn_k, cfg.include_self);
  }

  const auto acts = ws.activities();
  d.classes = ws.meta.num_activities ? ws.meta.num_activities
                                     : static_cast<std::size_t>(*std::max_element(acts.begin(), acts.end()) + 1);
  const auto persons = ws.persons();
  d.subjects = std::set<int>(persons.begin(), persons.end()).size();
  d.activity_names = ws.meta.activity_names;
  return d;
}

// ---------------------------------------------------------------- model

Model Model::create(const TrainConfig& cfg, std::size_t classes) {
  nn::Rng rng(cfg.derive_seed("init"));
  Model m;
  m.regime_ = cfg.regime;
  switch (cfg.regime) {
    case Regime::supervised:
      m.supervised_ = std::make_shared<models::SupervisedTcn<float>>(cfg.tcn, classes, rng);
      break;
    case Regime::weak_single:
    case Regime::weak_multi:
      m.siamese_ = std::make_shared<models::SiameseTcn<float>>(cfg.tcn, cfg.regime == Regime::weak_multi, rng);
      break;
    default:
      m.autoencoder_ = std::make_shared<models::SiameseResidualAutoencoder<float>>(cfg.autoencoder, rng);
      break;
  }
  return m;
}

nn::TensorList<float> Model::tensors() const {
  if (supervised_) return supervised_->tensors();
  if (siamese_) return siamese_->tensors();
  return autoencoder_->tensors();
}

eval::Matrix Model::embed(const nn::Tensor<float>& inputs) const {
  return batched(inputs, [&](const FVar& x, nn::Context& ctx) {
    if (supervised_) return supervised_->embed(x, ctx);
    if (siamese_) return siamese_->embed(x, ctx);
    return autoencoder_->embed(x, ctx);
  });
}

eval::Matrix Model::embed_person(const nn::Tensor<float>& inputs) const {
  if (!siamese_ || !siamese_->multitask()) throw std::logic_error("person embeddings need a weak_multi model");
  return batched(inputs, [&](const FVar& x, nn::Context& ctx) { return siamese_->forward(x, ctx).pers; });
}

std::vector<int> Model::predict(const nn::Tensor<float>& inputs) const {
  if (!supervised_) throw std::logic_error("predict needs a supervised model");
  const auto logits = batched(inputs, [&](const FVar& x, nn::Context& ctx) { return supervised_->forward(x, ctx); });
  std::vector<int> out(static_cast<std::size_t>(logits.rows()));
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    Eigen::Index arg = 0;
    logits.row(i).maxCoeff(&arg);
    out[static_cast<std::size_t>(i)] = static_cast<int>(arg);
  }
  return out;
}

std::string parameter_digest(const nn::TensorList<float>& tensors) {
  std::string bytes;
  for (const auto& t : tensors) {
    const auto v = t.var.value().values();
    bytes.append(reinterpret_cast<const char*>(v.data()), v.size() * sizeof(float));
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(io::fnv1a64(bytes)));
  return buf;
}

nlohmann::json EpochRecord::to_json() const {
  return {{"stage", stage},
          {"epoch", epoch},
          {"loss", loss},
          {"components", components},
          {"val_loss", val_loss ? nlohmann::json(*val_loss) : nlohmann::json()}};
}

// ---------------------------------------------------------------- training

TrainConfig resolve_dimensions(TrainConfig cfg, const PreparedData& data) {
  cfg.tcn.in_channels = data.train.num_channels();
  cfg.autoencoder.input_dim = data.train_features.cols;
  return cfg;
}

void check_prepared(const TrainConfig& cfg, const PreparedData& data) {
  const auto regime = std::string(to_string(cfg.regime));
  if (data.train.size() < 2) throw std::invalid_argument(regime + ": training split is empty; run data preparation first");
  if (uses_features(cfg.regime)) {
    if (data.train_features.rows != data.train.size()) {
      throw std::invalid_argument(regime + " needs standardized feature vectors; run feature extraction first");
    }
    if (cfg.regime != Regime::autoencoder &&
        (data.train_temporal.size() != data.train.size() || data.train_feature.size() != data.train.size())) {
      throw std::invalid_argument(regime + " needs temporal and feature neighbour indexes; build them first");
    }
  }
}

TrainResult train(const TrainConfig& input_cfg, const PreparedData& data, const TrainOptions& opts) {
  input_cfg.validate();
  check_prepared(input_cfg, data);
  const TrainConfig cfg = resolve_dimensions(input_cfg, data);

  TrainResult result{Model::create(cfg, data.classes), cfg, {}, {}, {}, {}, {}, false, {}};
  const auto train_in = train_inputs(cfg.regime, data);
  const auto val_in = val_inputs(cfg.regime, data);

  if (cfg.regime == Regime::supervised || cfg.regime == Regime::weak_single || cfg.regime == Regime::weak_multi ||
      cfg.regime == Regime::weakly_self_supervised) {
    auto subset = data::subsample_labels(train_in.activities, cfg.label_fraction, cfg.derive_seed("labels"));
    result.labeled = std::move(subset.indices);
    result.deviations = std::move(subset.deviations);
  }

  std::set<std::string> warnings;
  switch (cfg.regime) {
    case Regime::supervised:
    case Regime::autoencoder:
    case Regime::self_supervised: {
      Loop loop(cfg, result.model, train_in, val_in, result.labeled, opts, result.log);
      loop.run_samples(1, cfg.resolved_epochs(), cfg.weights);
      break;
    }
    case Regime::weak_single:
    case Regime::weak_multi: {
      Loop loop(cfg, result.model, train_in, val_in, result.labeled, opts, result.log);
      loop.run_pairs(1, cfg.resolved_epochs(), cfg.weights);
      warnings = loop.warnings();
      break;
    }
    case Regime::weakly_self_supervised: {
      TempDir tmp;
      std::filesystem::path ckpt;
      if (!opts.stage1_cache.empty()) {
        std::filesystem::create_directories(opts.stage1_cache);
        ckpt = opts.stage1_cache / ("stage1-" + cfg.stage1_hash() + ".ckpt");
      } else if (!opts.work_dir.empty()) {
        std::filesystem::create_directories(opts.work_dir);
        ckpt = opts.work_dir / "stage1.ckpt";
      } else {
        tmp.path = std::filesystem::temp_directory_path() /
                   ("harkit-stage1-" + cfg.hash() + "-" + std::to_string(std::random_device{}()));
        std::filesystem::create_directories(tmp.path);
        tmp.owned = true;
        ckpt = tmp.path / "stage1.ckpt";
      }

      if (!opts.stage1_cache.empty() && std::filesystem::exists(ckpt)) {
        const auto header = nn::read_checkpoint_header(ckpt);
        result.log = log_from_json(header.at("log"));
        result.stage1_final_digest = header.at("digest").get<std::string>();
        result.stage1_reused = true;
      } else {
        // Stage 1 is the self-supervised regime with the stage-1 epoch budget.
        TrainConfig s1 = cfg;
        s1.regime = Regime::self_supervised;
        Loop loop(s1, result.model, train_in, val_in, result.labeled, opts, result.log);
        loop.run_samples(1, cfg.stage1_epochs, cfg.weights);
        result.stage1_final_digest = parameter_digest(result.model.tensors());
        nlohmann::json header = {{"kind", "stage1"},
                                 {"stage1_hash", cfg.stage1_hash()},
                                 {"digest", result.stage1_final_digest},
                                 {"log", log_json(result.log)}};
        nn::save_checkpoint(ckpt, header, result.model.tensors());
      }

      // Stage 2 starts from a fresh model loaded from the stage-1 checkpoint.
      result.model = Model::create(cfg, data.classes);
      nn::load_checkpoint(ckpt, result.model.tensors());
      result.stage2_initial_digest = parameter_digest(result.model.tensors());
      Loop loop(cfg, result.model, train_in, val_in, result.labeled, opts, result.log);
      loop.run_pairs(2, cfg.stage2_epochs, cfg.stage2_weights);
      warnings = loop.warnings();
      break;
    }
  }

  const auto tensors = result.model.tensors();
  nlohmann::json m;
  m["regime"] = std::string(to_string(cfg.regime));
  m["name"] = cfg.name;
  m["config"] = cfg.to_json();
  m["config_hash"] = cfg.hash();
  m["seed"] = cfg.seed;
  m["epochs"] = result.log.size();
  m["parameters"] = nn::parameter_count(tensors);
  m["parameter_digest"] = parameter_digest(tensors);
  m["train_windows"] = data.train.size();
  m["labeled_windows"] = result.labeled.size();
  m["deviations"] = result.deviations;
  m["warnings"] = std::vector<std::string>(warnings.begin(), warnings.end());
  if (!result.log.empty()) {
    m["final_loss"] = result.log.back().loss;
    m["final_components"] = result.log.back().components;
    m["final_val_loss"] = result.log.back().val_loss ? nlohmann::json(*result.log.back().val_loss) : nlohmann::json();
  }
  if (cfg.regime == Regime::weakly_self_supervised) {
    m["stage1_digest"] = result.stage1_final_digest;
    m["stage2_initial_digest"] = result.stage2_initial_digest;
  }
  m["log"] = log_json(result.log);
  result.manifest = std::move(m);
  return result;
}

// ---------------------------------------------------------------- evaluation

eval::EvalReport evaluate(const Model& model, const TrainConfig& cfg, const PreparedData& data) {
  const bool feat = uses_features(cfg.regime);
  const auto test_in = feat ? feature_tensor(data.test_features) : window_tensor(data.test);
  const auto labels = data.test.activities();
  eval::EvalReport rep;
  if (cfg.regime == Regime::supervised) {
    rep = eval::evaluate_predictions(model.predict(test_in), labels, data.classes);
  } else {
    const auto emb = model.embed(test_in);
    const std::uint64_t km_seed = cfg.derive_seed("kmeans");
    if (cfg.cluster_train_and_test) {
      const auto train_emb = model.embed(feat ? feature_tensor(data.train_features) : window_tensor(data.train));
      eval::Matrix all(train_emb.rows() + emb.rows(), emb.cols());
      all << train_emb, emb;
      const auto km = eval::kmeans(all, {data.classes, cfg.kmeans_restarts, 300, km_seed});
      const std::vector<int> test_clusters(km.assignments.begin() + train_emb.rows(), km.assignments.end());
      rep = eval::evaluate_assignments(test_clusters, labels, data.classes);
      rep.extra["inertia"] = km.inertia;
    } else {
      rep = eval::evaluate_clustering(emb, labels, data.classes, cfg.kmeans_restarts, km_seed);
    }
    rep.extra["clustered"] = cfg.cluster_train_and_test ? "train+test" : "test";
    if (cfg.regime == Regime::weak_multi) {
      rep.person_accuracy = eval::person_accuracy(model.embed_person(test_in), data.test.persons(),
                                                  cfg.kmeans_restarts, cfg.derive_seed("kmeans:person"));
    }
  }
  rep.regime = std::string(to_string(cfg.regime));
  rep.config_hash = cfg.hash();
  rep.extra["name"] = cfg.name;
  rep.extra["label_fraction"] = cfg.label_fraction;
  rep.extra["seed"] = cfg.seed;
  return rep;
}

// ---------------------------------------------------------------- checkpoints

void save_model(const std::filesystem::path& path, const TrainResult& result, const PreparedData& data) {
  nlohmann::json header = {{"kind", "model"},
                           {"regime", std::string(to_string(result.config.regime))},
                           {"config", result.config.to_json()},
                           {"config_hash", result.config.hash()},
                           {"classes", data.classes},
                           {"subjects", data.subjects},
                           {"activity_names", data.activity_names},
                           {"channel_standardizer", data.channel_std.to_json()},
                           {"feature_standardizer", data.feature_std.to_json()},
                           {"seed", result.config.seed}};
  nn::save_checkpoint(path, header, result.model.tensors());
}

LoadedModel load_model(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw std::runtime_error("checkpoint not found: " + path.string());
  const auto header = nn::read_checkpoint_header(path);
  if (header.value("kind", "") != "model") {
    throw std::runtime_error(path.string() + " is not a trained model checkpoint");
  }
  auto cfg = TrainConfig::from_json(header.at("config"));
  auto model = Model::create(cfg, header.at("classes").get<std::size_t>());
  nn::load_checkpoint(path, model.tensors());
  return {std::move(model), std::move(cfg), header};
}

}  // namespace har::training
