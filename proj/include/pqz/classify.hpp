#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pqz/pipeline.hpp"
#include "pqz/signal.hpp"

namespace pqz::classify {

inline constexpr std::size_t kFeatureCount = 16;

/// Hand-crafted waveform features:
///   [0..9]  per-cycle RMS (10 cycles)
///   [10]    THD, harmonics 2..13 of 50 Hz relative to the fundamental
///   [11]    min per-cycle RMS      [12] max per-cycle RMS
///   [13]    flicker-band (5–20 Hz) modulation energy of the RMS envelope
///   [14]    high-frequency energy (second-difference power, relative)
///   [15]    zero-crossing interval irregularity
using FeatureVector = std::array<double, kFeatureCount>;

FeatureVector extract_features(std::span<const double> samples);

/// Nearest-centroid over z-scored features; deterministic.
struct Classifier {
  Eigen::MatrixXd centroids;  // kNumClasses × kFeatureCount
  Eigen::VectorXd scales;     // per-feature standard deviation over training
};

Classifier train_classifier(std::span<const Signal> train);

DisturbanceClass classify_signal(const Classifier& clf, const FeatureVector& features);
DisturbanceClass classify_signal(const Classifier& clf, std::span<const double> samples);

double accuracy(const Classifier& clf, std::span<const Signal> signals);

struct StudyEntry {
  std::string scheme;
  double e_bound = 0.0;
  double accuracy_after = 0.0;  // on the filtered, balanced pool
  double accuracy_drop = 0.0;   // 1 − accuracy_after (pool is 100% correct before)
  Eigen::MatrixXd confusion;    // counts, rows = true class
};

struct StudyResult {
  std::size_t pool_per_class = 0;
  std::vector<StudyEntry> entries;
};

/// (1) keep only correctly classified eval signals, (2) balance classes by a
/// fixed-seed down-sample (≤ pool_cap each), (3) compress+decompress under
/// each config, (4) re-classify. New misclassifications are caused by the
/// reconstruction error alone.
StudyResult impact_study(const Classifier& clf, std::span<const Signal> eval_set,
                         const std::vector<pipeline::PipelineConfig>& configs,
                         const pipeline::ModelStore& store, std::size_t pool_cap = 450,
                         std::uint64_t seed = 7, Exec exec = Exec::Parallel);

Eigen::MatrixXd row_normalized(const Eigen::MatrixXd& confusion);

void write_study_csv(const StudyResult& result, const std::string& path);
void write_confusion_csv(const StudyEntry& entry, const std::string& path);

}  // namespace pqz::classify
