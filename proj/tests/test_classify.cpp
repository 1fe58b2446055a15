#include <doctest.h>

#include <cmath>
#include <numbers>

#include "pqz/classify.hpp"
#include "helpers.hpp"

using namespace pqz;
using namespace pqz::classify;

TEST_CASE("clean sine features: flat unit envelope, no distortion") {
  const auto x = test::make_sine();
  const FeatureVector f = extract_features(x);
  for (std::size_t c = 0; c < 10; ++c) {
    CHECK(f[c] == doctest::Approx(1.0 / std::numbers::sqrt2).epsilon(1e-6));
  }
  CHECK(f[10] < 1e-6);  // THD
  CHECK(f[14] < 1e-5);  // high-frequency energy
  CHECK(f[15] < 0.02);  // crossing jitter is at most the sampling quantization
}

TEST_CASE("sag over cycles 4-7 shows up in exactly those RMS slots") {
  siggen::DisturbanceParams p;
  p.amplitude = 0.5;
  p.start_time = 4 * 0.02;
  p.duration = 4 * 0.02;
  const Signal sig = siggen::generate_signal(DisturbanceClass::Sag, p, 1);
  const FeatureVector f = extract_features(sig.samples);
  for (std::size_t c = 0; c < 10; ++c) {
    const double expect = (c >= 4 && c < 8) ? 0.5 / std::numbers::sqrt2
                                            : 1.0 / std::numbers::sqrt2;
    CHECK(f[c] == doctest::Approx(expect).epsilon(0.02));
  }
  CHECK(f[11] == doctest::Approx(0.5 / std::numbers::sqrt2).epsilon(0.02));
}

TEST_CASE("third-harmonic weight 0.2 reads back as THD 0.2") {
  siggen::DisturbanceParams p;
  p.amplitude = 1.0;
  p.start_time = 0.0;
  p.duration = 0.2;
  p.harmonic_weights = {0.2, 0.0, 0.0};
  const Signal sig = siggen::generate_signal(DisturbanceClass::Harmonics, p, 1);
  const FeatureVector f = extract_features(sig.samples);
  CHECK(f[10] == doctest::Approx(0.2).epsilon(0.05));
}

TEST_CASE("training requires every class") {
  std::vector<Signal> partial(test::small_dataset().train.begin(),
                              test::small_dataset().train.begin() + 22);  // one class only
  CHECK_THROWS_AS(train_classifier(partial), InvalidArgument);
}

TEST_CASE("memorization: training signals classify to their own class") {
  std::vector<Signal> train;
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    const auto cls = static_cast<DisturbanceClass>(c);
    const auto params = siggen::draw_params(cls, derive_seed(3, c, 0, SeedPurpose::Params));
    const Signal sig = siggen::generate_signal(cls, params, c);
    for (int copy = 0; copy < 10; ++copy) train.push_back(sig);
  }
  const Classifier clf = train_classifier(train);
  CHECK(accuracy(clf, train) == doctest::Approx(1.0));
}

TEST_CASE("clean desk-scale accuracy meets the regression floor") {
  const auto& ds = test::small_dataset();
  const Classifier clf = train_classifier(ds.train);
  const double acc = accuracy(clf, ds.eval);
  MESSAGE("clean accuracy on small corpus: ", acc);
  CHECK(acc >= 0.85);
}

TEST_CASE("label permutation drops accuracy to chance") {
  std::vector<Signal> shuffled = test::small_dataset().train;
  Rng rng(1234);
  for (std::size_t i = shuffled.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng.next() % i);
    std::swap(shuffled[i - 1].label, shuffled[j].label);
  }
  const Classifier clf = train_classifier(shuffled);
  const double acc = accuracy(clf, test::small_dataset().eval);
  MESSAGE("chance-level accuracy: ", acc);
  CHECK(acc < 1.0 / 15.0 + 0.05);
}

TEST_CASE("impact study: near-lossless compression does not move accuracy") {
  // a slightly larger eval split so every class keeps a correct signal
  const auto ds = siggen::generate_dataset(
      {.signals_per_class = 40, .train_fraction = 0.8, .master_seed = 77});
  const Classifier clf = train_classifier(ds.train);

  pipeline::PipelineConfig cfg;
  cfg.stage1 = pipeline::Stage1Sel::Identity;
  cfg.stage2 = pipeline::Stage2Sel::UniformQ;
  cfg.e_bound = 1e-9;
  const StudyResult result =
      impact_study(clf, ds.eval, {cfg}, test::small_store(), 450, 7, Exec::Serial);

  REQUIRE(result.entries.size() == 1);
  CHECK(result.entries[0].accuracy_drop == doctest::Approx(0.0));
  CHECK(result.pool_per_class >= 1);

  // confusion rows sum to the pool size and normalize to row-stochastic
  const auto& confusion = result.entries[0].confusion;
  for (Eigen::Index r = 0; r < confusion.rows(); ++r) {
    CHECK(confusion.row(r).sum() == doctest::Approx(result.pool_per_class));
  }
  const Eigen::MatrixXd norm = row_normalized(confusion);
  for (Eigen::Index r = 0; r < norm.rows(); ++r) {
    CHECK(norm.row(r).sum() == doctest::Approx(1.0));
  }
}
