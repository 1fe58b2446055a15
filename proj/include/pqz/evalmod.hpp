#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pqz/pipeline.hpp"
#include "pqz/signal.hpp"

namespace pqz::eval {

/// Raw-size baseline for rate reporting: 2560 × 8-byte samples.
inline constexpr std::size_t kUncompressedBytes = kSignalLength * sizeof(double);

double compression_rate(std::size_t compressed_bytes);
double nmse(std::span<const double> x, std::span<const double> x_hat);
double max_error(std::span<const double> x, std::span<const double> x_hat);

struct SchemeConfig {
  pipeline::Stage1Sel stage1 = pipeline::Stage1Sel::Identity;
  pipeline::Stage2Sel stage2 = pipeline::Stage2Sel::UniformQ;

  std::string name() const;
};

struct Grid {
  std::vector<SchemeConfig> schemes;
  std::vector<double> bounds;
  std::vector<std::optional<double>> noise_levels;  // empty optional = clean
  double uniform_bound_scale = 1.0;
  double predictive_bound_scale = 1.0;
};

/// All scheme combinations the sweep covers by default: every stage-1 choice
/// with both lossy stage-2 coders, plus the two Identity baselines.
Grid default_grid();

struct ReportRow {
  std::string scheme;
  pipeline::Stage1Sel stage1 = pipeline::Stage1Sel::Identity;
  pipeline::Stage2Sel stage2 = pipeline::Stage2Sel::None;
  double e_bound = 0.0;
  std::optional<double> snr_db;
  int class_id = -1;          // -1 on all-class aggregates
  std::int64_t signal_index = -1;  // -1 on aggregates
  bool aggregate = false;
  bool ok = true;
  std::string error;

  std::size_t compressed_bytes = 0;
  double compression_rate = 0.0;
  double nmse = 0.0;
  double max_error = 0.0;
  double retained_fraction = 0.0;
  double overhead_fraction = 0.0;
  int residual_strategy = -1;
  int signal_backend = -1;
  int residual_backend = -1;
};

struct AggKey {
  std::string scheme;
  double e_bound = 0.0;
  double snr_key = 0.0;  // 0 = clean
  int class_id = -1;

  bool operator<(const AggKey& o) const {
    return std::tie(scheme, e_bound, snr_key, class_id) <
           std::tie(o.scheme, o.e_bound, o.snr_key, o.class_id);
  }
};

struct Aggregate {
  std::size_t count = 0;
  double mean_rate = 0.0;
  double mean_nmse = 0.0;
  double mean_max_error = 0.0;
  double mean_retained_fraction = 0.0;
  double mean_overhead_fraction = 0.0;
  std::size_t bound_violations = 0;
};

struct Experiment {
  std::vector<ReportRow> rows;  // per-signal rows, then aggregate rows
  std::map<AggKey, Aggregate> aggregates;

  const Aggregate* find(const std::string& scheme, double bound,
                        std::optional<double> snr, int class_id) const;
};

/// Applies every (scheme, bound, noise) combination to the evaluation corpus.
/// Noise variants are derived deterministically from each signal's seed, so
/// all configs see identical noisy inputs. Per-signal failures become flagged
/// rows; the sweep never aborts.
Experiment run_experiment(const Grid& grid, std::span<const Signal> clean_eval,
                          const pipeline::ModelStore& store, Exec exec = Exec::Parallel);

void write_csv(const Experiment& experiment, const std::string& path);

/// Reconstruction through stage 1 (+ optional stage 2) without the residual
/// stage; used to measure how many residuals a coder adds.
struct TransformSpec {
  pipeline::Stage1Sel stage1 = pipeline::Stage1Sel::CS16;
  pipeline::Stage2Sel stage2 = pipeline::Stage2Sel::None;  // None allowed everywhere here
  double e_bound = 0.001;
  double uniform_bound_scale = 1.0;
  double predictive_bound_scale = 1.0;
};

std::vector<double> reconstruct_through(std::span<const double> x, const TransformSpec& spec,
                                        const pipeline::ModelStore& store);

/// Fraction of samples with |x − x̂| > threshold under each spec.
std::pair<double, double> count_added_residuals(std::span<const double> x,
                                                const TransformSpec& scheme_a,
                                                const TransformSpec& scheme_b,
                                                double threshold,
                                                const pipeline::ModelStore& store);

}  // namespace pqz::eval
