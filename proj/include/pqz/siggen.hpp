#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "pqz/rng.hpp"
#include "pqz/signal.hpp"

namespace pqz::siggen {

/// Parameters of one disturbance instance. Meaning of `amplitude` is
/// class-specific: envelope depth/height for sag/swell/interruption, relative
/// modulation for flicker, pulse height for transients/notch/spike, and the
/// fundamental amplitude (1.0) for normal/harmonics.
struct DisturbanceParams {
  double amplitude = 1.0;
  double secondary_amplitude = 0.0;  // flicker depth inside flicker_sag/flicker_swell
  double start_time = 0.0;           // seconds
  double duration = 0.0;             // seconds
  double ramp_up = 0.0;              // seconds
  double ramp_down = 0.0;            // seconds
  std::array<double, 3> harmonic_weights = {0.0, 0.0, 0.0};  // 3rd, 5th, 7th
  double transient_freq = 0.0;       // Hz; also flicker modulation / pulse width scale
  double phase = 0.0;                // rad, fundamental
  double pulse_phase = 0.0;          // rad in [0, pi); notch/spike position per half-cycle
};

struct Range {
  double lo = 0.0;
  double hi = 0.0;
};

/// Per-class randomization ranges. Shipped as a versioned config file
/// (configs/disturbance_ranges.json); builtin defaults are identical.
struct ClassRanges {
  Range amplitude;
  Range secondary;
  Range duration;
  Range ramp;       // per-ramp maximum; up/down drawn independently
  Range freq;       // transient / modulation / pulse-width frequency
  Range h3, h5, h7;
};

struct RangeTable {
  std::uint32_t version = 1;
  std::array<ClassRanges, kNumClasses> classes;
};

const RangeTable& default_ranges();
RangeTable load_ranges(const std::string& json_path);
void save_ranges(const RangeTable& table, const std::string& json_path);

/// Draws one parameter set for `cls` (fixed draw order, one stream per seed).
DisturbanceParams draw_params(DisturbanceClass cls, std::uint64_t seed,
                              const RangeTable& table = default_ranges());

/// Rejects out-of-range parameters with a diagnostic.
void validate_params(DisturbanceClass cls, const DisturbanceParams& params,
                     const RangeTable& table = default_ranges());

/// Deterministic 2560-sample waveform for (cls, params); `seed` is recorded
/// in the result but does not affect the noiseless waveform.
Signal generate_signal(DisturbanceClass cls, const DisturbanceParams& params,
                       std::uint64_t seed, const RangeTable& table = default_ranges());

/// Additive white Gaussian noise at the requested SNR (dB). Infinite SNR
/// returns the input unchanged.
Signal add_awgn(const Signal& signal, double snr_db, std::uint64_t seed);

struct DatasetSpec {
  std::size_t signals_per_class = 100;
  double train_fraction = 0.9;
  std::optional<double> snr_db;  // applied to both splits
  std::uint64_t master_seed = 1;
};

struct Dataset {
  std::vector<Signal> train;
  std::vector<Signal> eval;
};

/// Per-class (train, eval) counts implied by a DatasetSpec.
std::pair<std::size_t, std::size_t> split_counts(const DatasetSpec& spec);

/// Pure function of the spec; Serial and Parallel are bit-identical.
Dataset generate_dataset(const DatasetSpec& spec, Exec exec = Exec::Parallel,
                         const RangeTable& table = default_ranges());

// PQDS dataset container (one file per split).
void write_dataset(const std::vector<Signal>& signals, const std::string& path);
std::vector<Signal> read_dataset(const std::string& path);

}  // namespace pqz::siggen
