#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <numbers>

#include "pqz/siggen.hpp"
#include "helpers.hpp"

using namespace pqz;
using namespace pqz::siggen;

namespace {

DisturbanceParams sag_params(double depth, double start, double duration) {
  DisturbanceParams p;
  p.amplitude = depth;
  p.start_time = start;
  p.duration = duration;
  return p;
}

}  // namespace

TEST_CASE("normal class is the analytic 50 Hz sine") {
  DisturbanceParams p;
  p.amplitude = 1.0;
  p.phase = 0.0;
  const Signal sig = generate_signal(DisturbanceClass::Normal, p, 1);
  REQUIRE(sig.samples.size() == kSignalLength);

  double num = 0.0, den = 0.0;
  for (std::size_t k = 0; k < kSignalLength; ++k) {
    const double ref =
        std::sin(2.0 * std::numbers::pi * 50.0 * static_cast<double>(k) / 12800.0);
    num += (sig.samples[k] - ref) * (sig.samples[k] - ref);
    den += ref * ref;
  }
  CHECK(num / den < 1e-20);
}

TEST_CASE("full interruption silences the disturbance interval") {
  DisturbanceParams p;
  p.amplitude = 1.0;
  p.start_time = 0.0;
  p.duration = 0.2;
  const Signal sig = generate_signal(DisturbanceClass::Interruption, p, 1);
  for (double v : sig.samples) CHECK(std::abs(v) < 1e-12);
}

TEST_CASE("sag RMS matches the scaled-sine closed form") {
  // 0.5 depth over [60, 140] ms: in-sag RMS = 0.5/sqrt(2), outside 1/sqrt(2)
  const Signal sig =
      generate_signal(DisturbanceClass::Sag, sag_params(0.5, 0.06, 0.08), 1);
  const auto s0 = static_cast<std::size_t>(0.06 * kSampleRateHz);
  const auto s1 = static_cast<std::size_t>(0.14 * kSampleRateHz);
  const double in_sag = test::rms_of(sig.samples, s0, s1);
  const double before = test::rms_of(sig.samples, 0, s0);
  CHECK(in_sag == doctest::Approx(0.5 / std::numbers::sqrt2).epsilon(0.02));
  CHECK(before == doctest::Approx(1.0 / std::numbers::sqrt2).epsilon(0.02));
}

TEST_CASE("parameter validation rejects out-of-range values") {
  CHECK_THROWS_AS(generate_signal(DisturbanceClass::Sag, sag_params(1.5, 0.0, 0.1), 1),
                  InvalidArgument);
  CHECK_THROWS_AS(generate_signal(DisturbanceClass::Sag, sag_params(0.5, 0.15, 0.1), 1),
                  InvalidArgument);
  DisturbanceParams bad_ramps = sag_params(0.5, 0.0, 0.02);
  bad_ramps.ramp_up = 0.015;
  bad_ramps.ramp_down = 0.015;
  CHECK_THROWS_AS(generate_signal(DisturbanceClass::Sag, bad_ramps, 1), InvalidArgument);
}

TEST_CASE("every class stays within 3 p.u. and 2560 samples") {
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    const auto cls = static_cast<DisturbanceClass>(c);
    for (std::uint64_t s = 0; s < 25; ++s) {
      const auto params = draw_params(cls, derive_seed(99, c, s, SeedPurpose::Params));
      const Signal sig = generate_signal(cls, params, s);
      REQUIRE(sig.samples.size() == kSignalLength);
      for (double v : sig.samples) REQUIRE(std::abs(v) <= 3.0);
    }
  }
}

TEST_CASE("awgn: infinite SNR is the identity") {
  const Signal sig = generate_signal(DisturbanceClass::Normal, DisturbanceParams{}, 1);
  const Signal noisy = add_awgn(sig, std::numeric_limits<double>::infinity(), 7);
  CHECK(noisy.samples == sig.samples);
}

TEST_CASE("awgn: empirical SNR tracks the request within 1 dB") {
  const Signal clean = generate_signal(DisturbanceClass::Normal, DisturbanceParams{}, 1);
  for (double snr : {50.0, 40.0}) {
    double mean_snr = 0.0;
    const int trials = 200;
    for (int t = 0; t < trials; ++t) {
      const Signal noisy = add_awgn(clean, snr, 1000 + static_cast<std::uint64_t>(t));
      double sig_p = 0.0, noise_p = 0.0;
      for (std::size_t k = 0; k < kSignalLength; ++k) {
        sig_p += clean.samples[k] * clean.samples[k];
        const double d = noisy.samples[k] - clean.samples[k];
        noise_p += d * d;
      }
      mean_snr += 10.0 * std::log10(sig_p / noise_p);
    }
    mean_snr /= trials;
    CHECK(std::abs(mean_snr - snr) < 1.0);
  }
}

TEST_CASE("awgn: 40 dB noise sigma on a unit sine is about 0.00707") {
  const Signal clean = generate_signal(DisturbanceClass::Normal, DisturbanceParams{}, 1);
  double acc = 0.0;
  std::size_t count = 0;
  for (int t = 0; t < 50; ++t) {
    const Signal noisy = add_awgn(clean, 40.0, 500 + static_cast<std::uint64_t>(t));
    for (std::size_t k = 0; k < kSignalLength; ++k) {
      const double d = noisy.samples[k] - clean.samples[k];
      acc += d * d;
      ++count;
    }
  }
  const double sigma = std::sqrt(acc / static_cast<double>(count));
  CHECK(sigma == doctest::Approx(std::sqrt(0.5e-4)).epsilon(0.03));
}

TEST_CASE("dataset split counts follow the 90-10 protocol") {
  CHECK(split_counts({.signals_per_class = 10, .train_fraction = 0.9}) ==
        std::pair<std::size_t, std::size_t>{9, 1});
  CHECK(split_counts({.signals_per_class = 10000, .train_fraction = 0.9}) ==
        std::pair<std::size_t, std::size_t>{9000, 1000});
  // paper-scale arithmetic: 15 classes at 10000 signals each
  CHECK(15 * 9000 == 135000);
  CHECK(15 * 1000 == 15000);
}

TEST_CASE("dataset generation is deterministic and split-disjoint") {
  DatasetSpec spec{.signals_per_class = 10, .train_fraction = 0.9, .master_seed = 5};
  const Dataset a = generate_dataset(spec, Exec::Serial);
  const Dataset b = generate_dataset(spec, Exec::Serial);
  REQUIRE(a.train.size() == 9 * kNumClasses);
  REQUIRE(a.eval.size() == kNumClasses);
  for (std::size_t i = 0; i < a.train.size(); ++i) {
    CHECK(a.train[i].samples == b.train[i].samples);
  }
  // train and eval streams must differ (distinct derived seeds)
  CHECK(a.train[0].seed != a.eval[0].seed);
  CHECK(a.train[0].samples != a.eval[0].samples);

  DatasetSpec noisy = spec;
  noisy.snr_db = 50.0;
  const Dataset c = generate_dataset(noisy, Exec::Serial);
  CHECK(c.train[0].samples != a.train[0].samples);
  CHECK(c.train[0].snr_db == 50.0);
}

TEST_CASE("dataset files round-trip") {
  DatasetSpec spec{.signals_per_class = 4, .train_fraction = 0.5, .master_seed = 11};
  spec.snr_db = 40.0;
  const Dataset ds = generate_dataset(spec, Exec::Serial);
  const auto path = std::filesystem::temp_directory_path() / "pqz_test_dataset.pqds";
  write_dataset(ds.train, path.string());
  const auto loaded = read_dataset(path.string());
  REQUIRE(loaded.size() == ds.train.size());
  for (std::size_t i = 0; i < loaded.size(); ++i) {
    CHECK(loaded[i].samples == ds.train[i].samples);
    CHECK(loaded[i].label == ds.train[i].label);
    CHECK(loaded[i].seed == ds.train[i].seed);
    REQUIRE(loaded[i].snr_db.has_value());
    CHECK(*loaded[i].snr_db == doctest::Approx(40.0));
  }
  std::filesystem::remove(path);
}

TEST_CASE("shipped range table matches the builtin defaults") {
  const auto shipped = std::filesystem::path(PQZ_CONFIG_DIR) / "disturbance_ranges.json";
  REQUIRE(std::filesystem::exists(shipped));
  const RangeTable loaded = load_ranges(shipped.string());
  const RangeTable& builtin = default_ranges();
  CHECK(loaded.version == builtin.version);
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    for (auto pick : {&ClassRanges::amplitude, &ClassRanges::secondary,
                      &ClassRanges::duration, &ClassRanges::ramp, &ClassRanges::freq,
                      &ClassRanges::h3, &ClassRanges::h5, &ClassRanges::h7}) {
      CHECK((loaded.classes[c].*pick).lo == (builtin.classes[c].*pick).lo);
      CHECK((loaded.classes[c].*pick).hi == (builtin.classes[c].*pick).hi);
    }
  }
}
