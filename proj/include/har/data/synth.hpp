#pragma once

#include <cstdint>

#include "har/data/types.hpp"

namespace har::data {

/// Desk-scale generator. Channel c of activity a for subject s:
///   m[a][c] + k[s] * A[a][c] * (sin(2 pi f[a] t + p[s][c]) + h[a] sin(4 pi f[a] t + 2 p[s][c] + q[a]))
///   + b[s][c] + bursts + noise * N(0, 1)
/// Each subject records every activity in `segments_per_class` blocks whose
/// order is shuffled per subject.
struct SynthSpec {
  std::size_t activities = 6;
  std::size_t subjects = 8;
  std::size_t channels = 3;
  std::size_t samples_per_class = 1600;  // per subject
  std::size_t segments_per_class = 2;
  double noise = 0.1;
  double sample_rate_hz = 50.0;
  double min_freq_hz = 0.5;
  double max_freq_hz = 3.0;
  double mean_spread = 0.6;       // activity mean offsets drawn from U(-spread, spread)
  double subject_scale = 0.25;    // k[s] drawn from U(1 - x, 1 + x)
  double subject_bias = 0.3;      // b[s][c] drawn from U(-x, x)
  /// Transient jolts: starts per second, amplitude sd, decay time constant (s).
  /// Each channel receives an independent N(0, scale^2) kick that decays exponentially.
  double burst_rate_hz = 0.0;
  double burst_scale = 0.0;
  double burst_decay_s = 0.1;
  std::size_t window_len = 64;
  std::size_t step = 32;
  std::uint64_t seed = 7;

  nlohmann::json to_json() const;
  static SynthSpec from_json(const nlohmann::json& j);
};

/// One stream per subject (subject ids 1..S). Throws std::invalid_argument
/// unless activities >= 2, subjects >= 2, channels >= 1.
std::vector<SensorStream> synthesize(const SynthSpec& spec);

/// synthesize() followed by windowing with spec.window_len / spec.step.
WindowSet synthesize_windows(const SynthSpec& spec, IngestReport* report = nullptr);

}  // namespace har::data
