#include "har/data/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

#include "har/data/segment.hpp"

namespace har::data {

nlohmann::json SynthSpec::to_json() const {
  return {{"activities", activities},       {"subjects", subjects},
          {"channels", channels},           {"samples_per_class", samples_per_class},
          {"segments_per_class", segments_per_class}, {"noise", noise},
          {"sample_rate_hz", sample_rate_hz}, {"min_freq_hz", min_freq_hz},
          {"max_freq_hz", max_freq_hz},     {"mean_spread", mean_spread},
          {"subject_scale", subject_scale}, {"subject_bias", subject_bias},
          {"burst_rate_hz", burst_rate_hz}, {"burst_scale", burst_scale},
          {"burst_decay_s", burst_decay_s},
          {"window_len", window_len},       {"step", step},
          {"seed", seed}};
}

SynthSpec SynthSpec::from_json(const nlohmann::json& j) {
  SynthSpec s;
  s.activities = j.value("activities", s.activities);
  s.subjects = j.value("subjects", s.subjects);
  s.channels = j.value("channels", s.channels);
  s.samples_per_class = j.value("samples_per_class", s.samples_per_class);
  s.segments_per_class = j.value("segments_per_class", s.segments_per_class);
  s.noise = j.value("noise", s.noise);
  s.sample_rate_hz = j.value("sample_rate_hz", s.sample_rate_hz);
  s.min_freq_hz = j.value("min_freq_hz", s.min_freq_hz);
  s.max_freq_hz = j.value("max_freq_hz", s.max_freq_hz);
  s.mean_spread = j.value("mean_spread", s.mean_spread);
  s.subject_scale = j.value("subject_scale", s.subject_scale);
  s.subject_bias = j.value("subject_bias", s.subject_bias);
  s.burst_rate_hz = j.value("burst_rate_hz", s.burst_rate_hz);
  s.burst_scale = j.value("burst_scale", s.burst_scale);
  s.burst_decay_s = j.value("burst_decay_s", s.burst_decay_s);
  s.window_len = j.value("window_len", s.window_len);
  s.step = j.value("step", s.step);
  s.seed = j.value("seed", s.seed);
  return s;
}

std::vector<SensorStream> synthesize(const SynthSpec& spec) {
  if (spec.activities < 2) throw std::invalid_argument("synthesize: need at least 2 activities");
  if (spec.subjects < 2) throw std::invalid_argument("synthesize: need at least 2 subjects");
  if (spec.channels < 1) throw std::invalid_argument("synthesize: need at least 1 channel");
  if (spec.segments_per_class < 1 || spec.samples_per_class < spec.segments_per_class) {
    throw std::invalid_argument("synthesize: samples_per_class must be >= segments_per_class >= 1");
  }
  const std::size_t M = spec.activities, S = spec.subjects, C = spec.channels;
  constexpr double two_pi = 2.0 * std::numbers::pi;

  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };

  // Frequencies are evenly spaced, then assigned to activities in shuffled order.
  std::vector<double> freq(M);
  for (std::size_t a = 0; a < M; ++a) {
    freq[a] = spec.min_freq_hz + (spec.max_freq_hz - spec.min_freq_hz) * static_cast<double>(a) / (M - 1);
  }
  std::shuffle(freq.begin(), freq.end(), rng);
  std::vector<double> harmonic(M), harmonic_phase(M);
  std::vector<std::vector<double>> mean(M, std::vector<double>(C)), amp(M, std::vector<double>(C));
  for (std::size_t a = 0; a < M; ++a) {
    harmonic[a] = uniform(0.0, 0.5);
    harmonic_phase[a] = uniform(0.0, two_pi);
    for (std::size_t c = 0; c < C; ++c) {
      mean[a][c] = uniform(-spec.mean_spread, spec.mean_spread);
      amp[a][c] = uniform(0.5, 1.5);
    }
  }
  std::vector<double> scale(S);
  std::vector<std::vector<double>> phase(S, std::vector<double>(C)), bias(S, std::vector<double>(C));
  for (std::size_t s = 0; s < S; ++s) {
    scale[s] = uniform(1.0 - spec.subject_scale, 1.0 + spec.subject_scale);
    for (std::size_t c = 0; c < C; ++c) {
      phase[s][c] = uniform(0.0, two_pi);
      bias[s][c] = uniform(-spec.subject_bias, spec.subject_bias);
    }
  }

  std::vector<SensorStream> streams;
  streams.reserve(S);
  for (std::size_t s = 0; s < S; ++s) {
    // Subject-local generator so that streams do not depend on each other's draws.
    std::mt19937_64 srng(spec.seed ^ (0x9e3779b97f4a7c15ULL * (s + 1)));
    std::normal_distribution<double> gauss(0.0, 1.0);

    std::vector<std::pair<std::size_t, std::size_t>> blocks;  // (activity, length)
    for (std::size_t a = 0; a < M; ++a) {
      const std::size_t base = spec.samples_per_class / spec.segments_per_class;
      for (std::size_t k = 0; k < spec.segments_per_class; ++k) {
        const std::size_t extra = k + 1 == spec.segments_per_class ? spec.samples_per_class % spec.segments_per_class : 0;
        blocks.emplace_back(a, base + extra);
      }
    }
    std::shuffle(blocks.begin(), blocks.end(), srng);

    SensorStream st;
    st.subject_id = static_cast<int>(s + 1);
    st.sample_rate_hz = spec.sample_rate_hz;
    for (std::size_t c = 0; c < C; ++c) st.channel_names.push_back("ch" + std::to_string(c));
    st.channels.assign(C, {});
    std::size_t t = 0;
    std::vector<double> burst(C, 0.0);
    const double burst_p = spec.burst_rate_hz / spec.sample_rate_hz;
    const double decay = spec.burst_decay_s > 0.0 ? std::exp(-1.0 / (spec.burst_decay_s * spec.sample_rate_hz)) : 0.0;
    for (const auto& [a, len] : blocks) {
      for (std::size_t i = 0; i < len; ++i, ++t) {
        const double time = static_cast<double>(t) / spec.sample_rate_hz;
        if (burst_p > 0.0) {
          const bool kick = unit(srng) < burst_p;
          for (std::size_t c = 0; c < C; ++c) burst[c] = burst[c] * decay + (kick ? spec.burst_scale * gauss(srng) : 0.0);
        }
        for (std::size_t c = 0; c < C; ++c) {
          const double w = two_pi * freq[a] * time;
          double v = mean[a][c] + bias[s][c] +
                     scale[s] * amp[a][c] *
                         (std::sin(w + phase[s][c]) + harmonic[a] * std::sin(2.0 * w + 2.0 * phase[s][c] + harmonic_phase[a]));
          v += burst[c];
          if (spec.noise > 0.0) v += spec.noise * gauss(srng);
          st.channels[c].push_back(static_cast<float>(v));
        }
        st.labels.push_back(static_cast<int>(a));
      }
    }
    streams.push_back(std::move(st));
  }
  return streams;
}

WindowSet synthesize_windows(const SynthSpec& spec, IngestReport* report) {
  const auto streams = synthesize(spec);
  WindowSetMeta meta;
  meta.dataset = "synthetic";
  meta.channel_names = streams.front().channel_names;
  for (std::size_t a = 0; a < spec.activities; ++a) meta.activity_names.push_back("activity" + std::to_string(a));
  meta.num_activities = spec.activities;
  meta.sample_rate_hz = spec.sample_rate_hz;
  meta.extra = {{"synth", spec.to_json()}};
  if (report) report->dataset = "synthetic";
  return make_window_set(streams, spec.window_len, spec.step, std::move(meta), report);
}

}  // namespace har::data
