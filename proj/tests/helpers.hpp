#pragma once

#include <cmath>
#include <numbers>
#include <vector>

#include "pqz/pipeline.hpp"
#include "pqz/rng.hpp"
#include "pqz/siggen.hpp"
#include "pqz/signal.hpp"

namespace pqz::test {

/// Small corpus shared by pipeline/eval/classify tests; 24 signals per class
/// keeps the train split (22/class = 330) just above the m=320 model size.
inline const siggen::Dataset& small_dataset() {
  static const siggen::Dataset ds = siggen::generate_dataset(
      {.signals_per_class = 24, .train_fraction = 0.9, .master_seed = 77});
  return ds;
}

inline const pipeline::ModelStore& small_store() {
  static const pipeline::ModelStore store = [] {
    pipeline::ModelStore s;
    s.add(stage1::Codec::ae_train(small_dataset().train, 320));
    s.add(stage1::Codec::ae_train(small_dataset().train, 160));
    return s;
  }();
  return store;
}

inline std::vector<double> make_sine(std::size_t n = kSignalLength, double amplitude = 1.0,
                                     double freq = kFundamentalHz, double phase = 0.0) {
  std::vector<double> x(n);
  for (std::size_t k = 0; k < n; ++k) {
    x[k] = amplitude *
           std::sin(2.0 * std::numbers::pi * freq * static_cast<double>(k) / kSampleRateHz +
                    phase);
  }
  return x;
}

inline double rms_of(const std::vector<double>& x, std::size_t lo, std::size_t hi) {
  double acc = 0.0;
  for (std::size_t k = lo; k < hi; ++k) acc += x[k] * x[k];
  return std::sqrt(acc / static_cast<double>(hi - lo));
}

inline std::vector<double> random_vector(Rng& rng, std::size_t n, double lo, double hi) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.uniform(lo, hi);
  return v;
}

}  // namespace pqz::test
