#include "pqz/stage2.hpp"

#include <algorithm>
#include <cmath>

namespace pqz::stage2 {

std::vector<std::int64_t> quantize(std::span<const double> values,
                                   const QuantizerConfig& cfg,
                                   std::uint64_t* saturation_count) {
  if (!(cfg.hi > cfg.lo)) throw InvalidArgument("quantizer interval: hi must exceed lo");
  if (!(cfg.step > 0.0)) throw InvalidArgument("quantizer step must be positive");

  std::vector<std::int64_t> codes(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    double v = values[i];
    if (v < cfg.lo || v > cfg.hi) {
      if (saturation_count) ++*saturation_count;
      v = std::clamp(v, cfg.lo, cfg.hi);
    }
    codes[i] = std::llround((v - cfg.lo) / cfg.step);  // half away from zero
  }
  return codes;
}

std::vector<double> dequantize(std::span<const std::int64_t> codes,
                               const QuantizerConfig& cfg) {
  std::vector<double> values(codes.size());
  for (std::size_t i = 0; i < codes.size(); ++i) {
    values[i] = cfg.lo + static_cast<double>(codes[i]) * cfg.step;
  }
  return values;
}

std::vector<std::int64_t> diff_encode(std::span<const std::int64_t> codes) {
  std::vector<std::int64_t> deltas(codes.size());
  std::int64_t prev = 0;
  for (std::size_t i = 0; i < codes.size(); ++i) {
    deltas[i] = codes[i] - prev;
    prev = codes[i];
  }
  return deltas;
}

std::vector<std::int64_t> diff_decode(std::span<const std::int64_t> deltas) {
  std::vector<std::int64_t> codes(deltas.size());
  std::int64_t acc = 0;
  for (std::size_t i = 0; i < deltas.size(); ++i) {
    acc += deltas[i];
    codes[i] = acc;
  }
  return codes;
}

PredictiveStream predictive_encode(std::span<const double> values,
                                   double e_bound_latent) {
  if (!(e_bound_latent > 0.0)) throw InvalidArgument("latent error bound must be positive");

  PredictiveStream s;
  s.quant_step = step_for_bound(e_bound_latent);
  s.codes.resize(values.size());

  double prev1 = 0.0, prev2 = 0.0;  // decoded history, v̂₋₁ = v̂₋₂ = 0
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double pred = 2.0 * prev1 - prev2;
    const std::int64_t code = std::llround((values[i] - pred) / s.quant_step);
    s.codes[i] = code;
    const double decoded = pred + static_cast<double>(code) * s.quant_step;
    prev2 = prev1;
    prev1 = decoded;
  }
  return s;
}

std::vector<double> predictive_decode(const PredictiveStream& stream) {
  if (!(stream.quant_step > 0.0)) throw DecodeError("predictive stream: bad step");
  std::vector<double> values(stream.codes.size());
  double prev1 = 0.0, prev2 = 0.0;
  for (std::size_t i = 0; i < stream.codes.size(); ++i) {
    const double pred = 2.0 * prev1 - prev2;
    const double decoded = pred + static_cast<double>(stream.codes[i]) * stream.quant_step;
    values[i] = decoded;
    prev2 = prev1;
    prev1 = decoded;
  }
  return values;
}

}  // namespace pqz::stage2
