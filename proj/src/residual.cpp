#include "pqz/residual.hpp"

#include <cmath>

namespace pqz::residual {

std::vector<double> compute_residuals(std::span<const double> x,
                                      std::span<const double> x_rec) {
  if (x.size() != x_rec.size()) throw InvalidArgument("residuals: length mismatch");
  std::vector<double> r(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) r[i] = x[i] - x_rec[i];
  return r;
}

std::vector<std::pair<std::uint32_t, double>> mask_residuals(std::span<const double> r,
                                                             double e_bound) {
  if (!(e_bound > 0.0)) throw InvalidArgument("e_bound must be positive");
  std::vector<std::pair<std::uint32_t, double>> kept;
  for (std::size_t i = 0; i < r.size(); ++i) {
    if (std::abs(r[i]) > e_bound) kept.emplace_back(static_cast<std::uint32_t>(i), r[i]);
  }
  return kept;
}

ResidualSet quantize_residuals(const std::vector<std::pair<std::uint32_t, double>>& masked,
                               double e_bound, std::uint32_t n) {
  ResidualSet set;
  set.n = n;
  set.quant_step = quant_step_for(e_bound);
  set.entries.reserve(masked.size());
  for (const auto& [index, r] : masked) {
    set.entries.push_back({index, std::llround(r / set.quant_step)});
  }
  return set;
}

Bytes encode_residuals(const ResidualSet& set, Strategy strategy) {
  ByteWriter w;
  w.u8(static_cast<std::uint8_t>(strategy));
  w.f64(set.quant_step);
  w.u32(set.n);

  switch (strategy) {
    case Strategy::DenseMaskedVector: {
      std::size_t next = 0;
      for (std::uint32_t i = 0; i < set.n; ++i) {
        std::int64_t code = 0;
        if (next < set.entries.size() && set.entries[next].index == i) {
          code = set.entries[next].code;
          ++next;
        }
        w.svarint(code);
      }
      break;
    }
    case Strategy::DiffIndexed: {
      w.varint(set.entries.size());
      std::uint32_t prev = 0;
      for (const Entry& e : set.entries) {
        w.varint(e.index - prev);  // first delta is the index itself
        w.svarint(e.code);
        prev = e.index;
      }
      break;
    }
    case Strategy::BinaryMask: {
      Bytes mask((set.n + 7) / 8, 0);
      for (const Entry& e : set.entries) mask[e.index / 8] |= std::uint8_t(1u << (e.index % 8));
      w.raw(mask);
      for (const Entry& e : set.entries) w.svarint(e.code);
      break;
    }
  }
  return w.take();
}

ResidualSet decode_residuals(ByteSpan bytes) {
  ByteReader r(bytes);
  const std::uint8_t strat = r.u8();
  if (strat > 2) throw DecodeError("residual section: unknown strategy");

  ResidualSet set;
  set.strategy = static_cast<Strategy>(strat);
  set.quant_step = r.f64();
  set.n = r.u32();
  if (!(set.quant_step > 0.0) || !std::isfinite(set.quant_step)) {
    throw DecodeError("residual section: bad quant step");
  }

  switch (set.strategy) {
    case Strategy::DenseMaskedVector: {
      for (std::uint32_t i = 0; i < set.n; ++i) {
        const std::int64_t code = r.svarint();
        if (code != 0) set.entries.push_back({i, code});
      }
      break;
    }
    case Strategy::DiffIndexed: {
      const std::uint64_t count = r.varint();
      if (count > set.n) throw DecodeError("residual section: count exceeds n");
      std::uint64_t index = 0;
      for (std::uint64_t k = 0; k < count; ++k) {
        index += r.varint();
        const std::int64_t code = r.svarint();
        if (index >= set.n) throw DecodeError("residual section: index out of range");
        set.entries.push_back({static_cast<std::uint32_t>(index), code});
      }
      break;
    }
    case Strategy::BinaryMask: {
      const ByteSpan mask = r.raw((set.n + 7) / 8);
      for (std::uint32_t i = 0; i < set.n; ++i) {
        if (mask[i / 8] & (1u << (i % 8))) set.entries.push_back({i, 0});
      }
      for (Entry& e : set.entries) e.code = r.svarint();
      break;
    }
  }
  if (!r.done()) throw DecodeError("residual section: trailing bytes");
  return set;
}

StrategyChoice choose_strategy(const ResidualSet& set) {
  // tie order: DiffIndexed, then BinaryMask, then DenseMaskedVector
  constexpr Strategy order[] = {Strategy::DiffIndexed, Strategy::BinaryMask,
                                Strategy::DenseMaskedVector};
  StrategyChoice best;
  bool first = true;
  for (Strategy s : order) {
    Bytes raw = encode_residuals(set, s);
    lossless::Choice packed = lossless::compress_dual(raw);
    if (first || packed.payload.size() < best.packed.payload.size()) {
      best.strategy = s;
      best.raw = std::move(raw);
      best.packed = std::move(packed);
      first = false;
    }
  }
  return best;
}

std::vector<double> apply_residuals(std::span<const double> x_rec, const ResidualSet& set) {
  if (set.n != x_rec.size()) throw InvalidArgument("apply_residuals: length mismatch");
  std::vector<double> out(x_rec.begin(), x_rec.end());
  for (const Entry& e : set.entries) {
    if (e.index >= out.size()) throw DecodeError("apply_residuals: index out of range");
    out[e.index] += static_cast<double>(e.code) * set.quant_step;
  }
  return out;
}

}  // namespace pqz::residual
