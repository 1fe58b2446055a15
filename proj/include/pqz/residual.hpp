#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "pqz/common.hpp"
#include "pqz/lossless.hpp"
#include "pqz/stage2.hpp"

namespace pqz::residual {

/// Wire ids for the three residual encodings.
enum class Strategy : std::uint8_t {
  DenseMaskedVector = 0,
  DiffIndexed = 1,
  BinaryMask = 2,
};

struct Entry {
  std::uint32_t index = 0;
  std::int64_t code = 0;
};

struct ResidualSet {
  std::uint32_t n = 0;
  Strategy strategy = Strategy::DiffIndexed;
  double quant_step = 0.0;
  std::vector<Entry> entries;  // indices strictly increasing
};

/// Quantization step used for retained residuals; step/2 < e_bound so the
/// corrected error stays within the bound.
inline double quant_step_for(double e_bound) { return stage2::step_for_bound(e_bound); }

// r = x - x_rec, exact
std::vector<double> compute_residuals(std::span<const double> x,
                                      std::span<const double> x_rec);

/// Keeps (i, r_i) iff |r_i| > e_bound (strict; values at the bound are
/// already within tolerance).
std::vector<std::pair<std::uint32_t, double>> mask_residuals(std::span<const double> r,
                                                             double e_bound);

ResidualSet quantize_residuals(const std::vector<std::pair<std::uint32_t, double>>& masked,
                               double e_bound, std::uint32_t n);

/// Self-describing section: {strategy u8, quant_step f64, n u32, payload}.
Bytes encode_residuals(const ResidualSet& set, Strategy strategy);
ResidualSet decode_residuals(ByteSpan bytes);

struct StrategyChoice {
  Strategy strategy = Strategy::DiffIndexed;
  Bytes raw;                 // encoded section before stage-4
  lossless::Choice packed;   // after stage-4
};

/// Encodes all three strategies, compresses each with both stage-4 backends,
/// and returns the smallest end result (ties: DiffIndexed, BinaryMask, Dense).
StrategyChoice choose_strategy(const ResidualSet& set);

/// x̂ = x_rec + code·quant_step at retained indices.
std::vector<double> apply_residuals(std::span<const double> x_rec, const ResidualSet& set);

// Index bookkeeping cost in bits under the fixed-width-delta accounting used
// for the crossover analysis; the shared residual codes cancel out.
inline std::size_t diff_index_cost_bits(std::size_t retained, unsigned bits_per_delta = 8) {
  return retained * bits_per_delta;
}
inline std::size_t mask_cost_bits(std::size_t n) { return n; }

}  // namespace pqz::residual
