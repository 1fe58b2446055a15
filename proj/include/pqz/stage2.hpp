#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "pqz/common.hpp"

namespace pqz::stage2 {

/// Guard keeps round-to-nearest strictly below the bound under fp rounding.
inline constexpr double kStepGuard = 1.0 - 0x1.0p-20;

/// Step for a target pointwise bound: round-to-nearest then reconstructs
/// within step/2 < bound.
inline double step_for_bound(double bound) { return 2.0 * bound * kStepGuard; }

struct QuantizerConfig {
  double lo = -64.0;
  double hi = 64.0;
  double step = 0.02;
};

/// Rounds to the step grid anchored at lo; out-of-interval values clamp and
/// bump *saturation_count (the residual stage absorbs the excess error).
std::vector<std::int64_t> quantize(std::span<const double> values,
                                   const QuantizerConfig& cfg,
                                   std::uint64_t* saturation_count = nullptr);

std::vector<double> dequantize(std::span<const std::int64_t> codes,
                               const QuantizerConfig& cfg);

// deltas[0] = codes[0], deltas[i] = codes[i] - codes[i-1]
std::vector<std::int64_t> diff_encode(std::span<const std::int64_t> codes);
std::vector<std::int64_t> diff_decode(std::span<const std::int64_t> deltas);

struct PredictiveStream {
  double quant_step = 0.0;
  std::vector<std::int64_t> codes;
};

/// Degree-1 linear predictor over the decoded history (p = 2v̂₋₁ − v̂₋₂) with
/// quantized prediction residuals; |decoded − value| ≤ e_bound_latent pointwise.
PredictiveStream predictive_encode(std::span<const double> values, double e_bound_latent);
std::vector<double> predictive_decode(const PredictiveStream& stream);

}  // namespace pqz::stage2
