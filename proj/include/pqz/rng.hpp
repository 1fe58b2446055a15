#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace pqz {

/// SplitMix64 stream; compiler-independent so datasets are reproducible
/// everywhere (std::normal_distribution is not pinned by the standard).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  /// Uniform in [0, 1).
  double u01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  /// Uniform in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * u01(); }

  /// Standard normal via Box-Muller, one spare cached.
  double gaussian() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = u01();
    double u2 = u01();
    while (u1 <= 0.0) u1 = u01();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

 private:
  std::uint64_t state_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

enum class SeedPurpose : std::uint64_t {
  Params = 1,
  Noise = 2,
  TrainSplit = 3,
  EvalSplit = 4,
  Subsample = 5,
};

/// Counter-based seed split: independent per-signal streams from one master
/// seed, so generation order (and thread count) never matters.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b,
                                 SeedPurpose purpose) {
  auto mix = [](std::uint64_t s) {
    s = (s ^ (s >> 30)) * 0xbf58476d1ce4e5b9ull;
    s = (s ^ (s >> 27)) * 0x94d049bb133111ebull;
    return s ^ (s >> 31);
  };
  std::uint64_t h = mix(master + 0x9e3779b97f4a7c15ull);
  h = mix(h ^ (a + 0x9e3779b97f4a7c15ull));
  h = mix(h ^ (b + 0x9e3779b97f4a7c15ull));
  h = mix(h ^ (static_cast<std::uint64_t>(purpose) + 0x9e3779b97f4a7c15ull));
  return h;
}

}  // namespace pqz
