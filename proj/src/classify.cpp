#include "pqz/classify.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>

#include <omp.h>

#include "pqz/rng.hpp"

namespace pqz::classify {

namespace {

constexpr double kTiny = 1e-12;

/// Magnitude of the DFT bin `k` (cycles per window) over x, scaled to the
/// amplitude of a pure sinusoid at that bin.
double goertzel_amplitude(std::span<const double> x, std::size_t k) {
  const auto n = static_cast<double>(x.size());
  const double w = 2.0 * std::numbers::pi * static_cast<double>(k) / n;
  const double coeff = 2.0 * std::cos(w);
  double s0 = 0.0, s1 = 0.0, s2 = 0.0;
  for (double v : x) {
    s0 = v + coeff * s1 - s2;
    s2 = s1;
    s1 = s0;
  }
  const double power = s1 * s1 + s2 * s2 - coeff * s1 * s2;
  return 2.0 * std::sqrt(std::max(power, 0.0)) / n;
}

double rms(std::span<const double> x) {
  double acc = 0.0;
  for (double v : x) acc += v * v;
  return std::sqrt(acc / static_cast<double>(x.size()));
}

/// Distance space for the centroid classifier. Disturbance depth, duration,
/// and position are nuisance parameters that spread each class over a wide
/// manifold, so the space is built from saturating presence indicators (each
/// class collapses to a tight attribute profile) plus raw values as weak
/// tiebreakers.
FeatureVector to_centroid_space(const FeatureVector& f) {
  constexpr double kNominal = 0.70710678118654752;  // RMS of a 1 p.u. sine
  auto sat = [](double x) { return std::clamp(x, 0.0, 1.0); };

  std::array<double, kCyclesPerSignal> q{};
  std::copy(f.begin(), f.begin() + kCyclesPerSignal, q.begin());
  std::sort(q.begin(), q.end());

  const double depth = (kNominal - f[11]) / kNominal;  // min half-cycle envelope
  const double rise = (q[kCyclesPerSignal - 1] - kNominal) / kNominal;
  const double log_thd = std::log10(f[10] + 1e-6);
  const double log_flick = std::log10(f[13] + 1e-9);
  const double log_hf = std::log10(f[14] + 1e-9);
  const double log_zc = std::log10(f[15] + 1e-6);

  FeatureVector out{};
  out[0] = sat(depth / 0.08);                 // any dip at all
  out[1] = sat((depth - 0.875) / 0.05);       // dip deep enough to be an interruption
  out[2] = sat(rise / 0.08);                  // any rise at all
  out[3] = sat(depth);                        // dip size
  out[4] = sat(rise);                         // rise size
  out[5] = sat((log_thd + 2.2) / 0.8);        // sustained harmonic lines
  out[6] = sat((f[13] - 0.008) / 0.012);      // envelope flicker ripple
  out[7] = sat((log_hf + 4.5) / 1.5);         // high-frequency activity
  out[8] = sat((log_zc + 4.0) / 3.0);         // crossing irregularity
  out[9] = sat((f[12] - 1.05) / 0.5);         // waveform peak above nominal
  out[10] = q[0];
  out[11] = q[kCyclesPerSignal - 1];
  out[12] = log_thd;
  out[13] = log_flick;
  out[14] = log_hf;
  out[15] = log_zc;
  return out;
}

}  // namespace

FeatureVector extract_features(std::span<const double> samples) {
  if (samples.size() != kSignalLength) {
    throw InvalidArgument("extract_features: signals must have 2560 samples");
  }
  FeatureVector f{};

  // per-cycle RMS
  for (std::size_t c = 0; c < kCyclesPerSignal; ++c) {
    f[c] = rms(samples.subspan(c * kSamplesPerCycle, kSamplesPerCycle));
  }

  // half-cycle envelope: RMS is phase-invariant over exactly half a period,
  // so it tracks the amplitude envelope at 100 Hz resolution
  constexpr std::size_t kHalf = kSamplesPerCycle / 2;
  constexpr std::size_t kEnvLen = kSignalLength / kHalf;  // 20 points
  std::array<double, kEnvLen> env{};
  double env_mean = 0.0;
  double min_env = 1e300, max_peak = 0.0;
  for (std::size_t j = 0; j < kEnvLen; ++j) {
    const auto half = samples.subspan(j * kHalf, kHalf);
    env[j] = rms(half);
    env_mean += env[j];
    min_env = std::min(min_env, env[j]);
    double peak = 0.0;
    for (double v : half) peak = std::max(peak, std::abs(v));
    max_peak = std::max(max_peak, peak);
  }
  env_mean /= kEnvLen;
  f[11] = min_env;   // robust to narrow pulses
  f[12] = max_peak;  // sensitive to them (spikes, transients)

  // THD from harmonics 2..13 of 50 Hz (bin 10 is the fundamental). Envelope
  // edges splatter energy across all bins; the sidebin average estimates that
  // broadband floor so only genuine narrow harmonic lines remain.
  const double fundamental = goertzel_amplitude(samples, kCyclesPerSignal);
  double harm_sq = 0.0;
  for (std::size_t h = 2; h <= 13; ++h) {
    const std::size_t bin = h * kCyclesPerSignal;
    const double a = goertzel_amplitude(samples, bin);
    const double floor_lo = goertzel_amplitude(samples, bin - 4);
    const double floor_hi = goertzel_amplitude(samples, bin + 4);
    const double background = 0.5 * (floor_lo * floor_lo + floor_hi * floor_hi);
    harm_sq += std::max(0.0, a * a - background);
  }
  f[10] = std::sqrt(harm_sq) / std::max(fundamental, kTiny);

  // flicker-band modulation energy, measured as envelope roughness: the
  // median |second difference| of the half-cycle envelope. An envelope step
  // touches only the two edge points, which the median discards, while 10-20
  // Hz flicker curves the envelope everywhere.
  {
    std::array<double, kEnvLen - 2> rough{};
    for (std::size_t j = 2; j < kEnvLen; ++j) {
      rough[j - 2] = std::abs(env[j] - 2.0 * env[j - 1] + env[j - 2]);
    }
    std::sort(rough.begin(), rough.end());
    const double median = 0.5 * (rough[rough.size() / 2 - 1] + rough[rough.size() / 2]);
    f[13] = median / std::max(env_mean, kTiny);
  }

  // high-frequency transient energy: second differences, concentrated on the
  // strongest half-cycle so a brief impulse reads differently from sustained
  // ringing or distortion
  {
    double total = 0.0;
    for (double v : samples) total += v * v;
    double peak_hf = 0.0;
    for (std::size_t j = 0; j < kEnvLen; ++j) {
      double hf = 0.0;
      for (std::size_t k = std::max<std::size_t>(j * kHalf, 2); k < (j + 1) * kHalf; ++k) {
        const double d2 = samples[k] - 2.0 * samples[k - 1] + samples[k - 2];
        hf += d2 * d2;
      }
      peak_hf = std::max(peak_hf, hf);
    }
    f[14] = peak_hf / std::max(total, kTiny);
  }

  // zero-crossing interval irregularity
  std::vector<std::size_t> crossings;
  for (std::size_t k = 1; k < samples.size(); ++k) {
    const bool was_neg = samples[k - 1] < 0.0;
    const bool is_neg = samples[k] < 0.0;
    if (was_neg != is_neg) crossings.push_back(k);
  }
  if (crossings.size() < 3) {
    f[15] = 5.0;  // degenerate waveform; cap keeps the feature finite
  } else {
    double mean = 0.0;
    std::vector<double> intervals(crossings.size() - 1);
    for (std::size_t i = 1; i < crossings.size(); ++i) {
      intervals[i - 1] = static_cast<double>(crossings[i] - crossings[i - 1]);
      mean += intervals[i - 1];
    }
    mean /= static_cast<double>(intervals.size());
    double var = 0.0;
    for (double v : intervals) var += (v - mean) * (v - mean);
    var /= static_cast<double>(intervals.size());
    f[15] = std::min(std::sqrt(var) / std::max(mean, kTiny), 5.0);
  }
  return f;
}

Classifier train_classifier(std::span<const Signal> train) {
  std::array<std::size_t, kNumClasses> counts{};
  Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(kNumClasses, kFeatureCount);
  Eigen::MatrixXd all(static_cast<Eigen::Index>(train.size()), kFeatureCount);

  for (std::size_t i = 0; i < train.size(); ++i) {
    const FeatureVector f = to_centroid_space(extract_features(train[i].samples));
    const auto cls = static_cast<std::size_t>(train[i].label);
    ++counts[cls];
    for (std::size_t j = 0; j < kFeatureCount; ++j) {
      sums(static_cast<Eigen::Index>(cls), static_cast<Eigen::Index>(j)) += f[j];
      all(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = f[j];
    }
  }
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    if (counts[c] == 0) {
      throw InvalidArgument(std::string("train_classifier: class missing from train set: ") +
                            kClassNames[c]);
    }
  }

  Classifier clf;
  clf.centroids = sums;
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    clf.centroids.row(static_cast<Eigen::Index>(c)) /= static_cast<double>(counts[c]);
  }

  // pooled within-class deviation: classes with tight features (normal has
  // an essentially fixed envelope) get correspondingly sharp boundaries
  Eigen::RowVectorXd pooled = Eigen::RowVectorXd::Zero(kFeatureCount);
  std::size_t label_at = 0;
  (void)label_at;
  for (std::size_t i = 0; i < train.size(); ++i) {
    const auto cls = static_cast<Eigen::Index>(train[i].label);
    const Eigen::RowVectorXd diff = all.row(static_cast<Eigen::Index>(i)) -
                                    clf.centroids.row(cls);
    pooled += diff.cwiseProduct(diff);
  }
  pooled /= static_cast<double>(train.size());
  clf.scales.resize(kFeatureCount);
  for (std::size_t j = 0; j < kFeatureCount; ++j) {
    clf.scales(static_cast<Eigen::Index>(j)) =
        std::max(std::sqrt(pooled(static_cast<Eigen::Index>(j))), 0.05);
  }
  return clf;
}

DisturbanceClass classify_signal(const Classifier& clf, const FeatureVector& features) {
  const FeatureVector f = to_centroid_space(features);
  double best = 1e300;
  std::size_t best_cls = 0;
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    double dist = 0.0;
    for (std::size_t j = 0; j < kFeatureCount; ++j) {
      const double d = (f[j] - clf.centroids(static_cast<Eigen::Index>(c),
                                             static_cast<Eigen::Index>(j))) /
                       clf.scales(static_cast<Eigen::Index>(j));
      dist += d * d;
    }
    if (dist < best) {  // strict: ties resolve to the lowest class id
      best = dist;
      best_cls = c;
    }
  }
  return static_cast<DisturbanceClass>(best_cls);
}

DisturbanceClass classify_signal(const Classifier& clf, std::span<const double> samples) {
  return classify_signal(clf, extract_features(samples));
}

double accuracy(const Classifier& clf, std::span<const Signal> signals) {
  if (signals.empty()) throw InvalidArgument("accuracy: empty set");
  std::size_t correct = 0;
  for (const Signal& s : signals) {
    if (classify_signal(clf, s.samples) == s.label) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(signals.size());
}

StudyResult impact_study(const Classifier& clf, std::span<const Signal> eval_set,
                         const std::vector<pipeline::PipelineConfig>& configs,
                         const pipeline::ModelStore& store, std::size_t pool_cap,
                         std::uint64_t seed, Exec exec) {
  // 1) drop signals the classifier already gets wrong
  std::array<std::vector<std::size_t>, kNumClasses> correct_by_class;
  for (std::size_t i = 0; i < eval_set.size(); ++i) {
    if (classify_signal(clf, eval_set[i].samples) == eval_set[i].label) {
      correct_by_class[static_cast<std::size_t>(eval_set[i].label)].push_back(i);
    }
  }
  std::size_t pool_n = pool_cap;
  for (const auto& v : correct_by_class) pool_n = std::min(pool_n, v.size());
  if (pool_n == 0) {
    throw Error("impact_study: some class has no correctly classified signals");
  }

  // 2) balance classes by seeded down-sampling
  std::vector<std::size_t> pool;
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    auto& ids = correct_by_class[c];
    Rng rng(derive_seed(seed, c, 0, SeedPurpose::Subsample));
    for (std::size_t i = ids.size(); i > 1; --i) {  // Fisher-Yates
      const std::size_t j = static_cast<std::size_t>(rng.next() % i);
      std::swap(ids[i - 1], ids[j]);
    }
    pool.insert(pool.end(), ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(pool_n));
  }

  StudyResult result;
  result.pool_per_class = pool_n;

  // 3) + 4) per config: reconstruct, re-classify, tally confusion
  for (const pipeline::PipelineConfig& cfg : configs) {
    StudyEntry entry;
    entry.scheme = cfg.scheme_name();
    entry.e_bound = cfg.e_bound;
    entry.confusion = Eigen::MatrixXd::Zero(kNumClasses, kNumClasses);

    std::vector<DisturbanceClass> predicted(pool.size());
    const auto total = static_cast<std::int64_t>(pool.size());
    auto run_one = [&](std::int64_t i) {
      const Signal& sig = eval_set[pool[static_cast<std::size_t>(i)]];
      const auto block = pipeline::compress(sig, cfg, store);
      const auto x_hat = pipeline::decompress(block, store);
      predicted[static_cast<std::size_t>(i)] = classify_signal(clf, x_hat);
    };
    if (exec == Exec::Parallel) {
#pragma omp parallel for schedule(dynamic, 8)
      for (std::int64_t i = 0; i < total; ++i) run_one(i);
    } else {
      for (std::int64_t i = 0; i < total; ++i) run_one(i);
    }

    std::size_t correct = 0;
    for (std::size_t i = 0; i < pool.size(); ++i) {
      const auto truth = static_cast<Eigen::Index>(eval_set[pool[i]].label);
      const auto pred = static_cast<Eigen::Index>(predicted[i]);
      entry.confusion(truth, pred) += 1.0;
      if (truth == pred) ++correct;
    }
    entry.accuracy_after = static_cast<double>(correct) / static_cast<double>(pool.size());
    entry.accuracy_drop = 1.0 - entry.accuracy_after;
    result.entries.push_back(std::move(entry));
  }
  return result;
}

Eigen::MatrixXd row_normalized(const Eigen::MatrixXd& confusion) {
  Eigen::MatrixXd out = confusion;
  for (Eigen::Index r = 0; r < out.rows(); ++r) {
    const double total = out.row(r).sum();
    if (total > 0.0) out.row(r) /= total;
  }
  return out;
}

void write_study_csv(const StudyResult& result, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << "# pqzip-study v1\n";
  out << "scheme,e_bound,pool_per_class,accuracy_after,accuracy_drop\n";
  out.precision(10);
  for (const StudyEntry& e : result.entries) {
    out << e.scheme << ',' << e.e_bound << ',' << result.pool_per_class << ','
        << e.accuracy_after << ',' << e.accuracy_drop << '\n';
  }
  if (!out) throw IoError("write failed: " + path);
}

void write_confusion_csv(const StudyEntry& entry, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << "true\\predicted";
  for (std::size_t c = 0; c < kNumClasses; ++c) out << ',' << kClassNames[c];
  out << '\n';
  for (std::size_t r = 0; r < kNumClasses; ++r) {
    out << kClassNames[r];
    for (std::size_t c = 0; c < kNumClasses; ++c) {
      out << ',' << entry.confusion(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
    }
    out << '\n';
  }
  if (!out) throw IoError("write failed: " + path);
}

}  // namespace pqz::classify
