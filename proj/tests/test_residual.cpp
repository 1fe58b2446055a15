#include <doctest.h>

#include <cmath>

#include "pqz/residual.hpp"
#include "helpers.hpp"

using namespace pqz;
using namespace pqz::residual;

namespace {

ResidualSet random_set(Rng& rng, std::uint32_t n) {
  ResidualSet set;
  set.n = n;
  set.quant_step = rng.uniform(1e-6, 0.2);
  for (std::uint32_t i = 0; i < n; ++i) {
    if (rng.u01() < 0.2) {
      std::int64_t code = static_cast<std::int64_t>(rng.next() % 4001) - 2000;
      if (code == 0) code = 1;  // masked entries always decode nonzero
      set.entries.push_back({i, code});
    }
  }
  return set;
}

}  // namespace

TEST_CASE("residual computation identities") {
  Rng rng(1);
  const auto x = test::random_vector(rng, 256, -2.0, 2.0);
  const auto same = compute_residuals(x, x);
  for (double v : same) CHECK(v == 0.0);

  const std::vector<double> zeros(x.size(), 0.0);
  CHECK(compute_residuals(x, zeros) == x);

  const auto x_rec = test::random_vector(rng, 256, -2.0, 2.0);
  const auto r = compute_residuals(x, x_rec);
  for (std::size_t i = 0; i < x.size(); ++i) CHECK(r[i] + x_rec[i] == x[i]);

  CHECK_THROWS_AS(compute_residuals(x, std::vector<double>(3)), InvalidArgument);
}

TEST_CASE("masking keeps strictly-above-bound residuals only") {
  const std::vector<double> r{0.0005, -0.002, 0.001};
  const auto kept = mask_residuals(r, 0.001);
  REQUIRE(kept.size() == 1);
  CHECK(kept[0].first == 1);
  CHECK(kept[0].second == -0.002);

  const std::vector<double> small{0.0001, -0.0005, 0.001};
  CHECK(mask_residuals(small, 0.001).empty());
}

TEST_CASE("gaussian residuals at sigma = e keep about 31.7 percent") {
  Rng rng(42);
  const double e = 0.01;
  std::size_t kept = 0;
  const std::size_t n = 200'000;
  std::vector<double> r(n);
  for (double& v : r) v = e * rng.gaussian();
  kept = mask_residuals(r, e).size();
  const double frac = static_cast<double>(kept) / static_cast<double>(n);
  CHECK(frac == doctest::Approx(0.3173).epsilon(0.06));  // 2(1 - Phi(1)), ±2 pp
  CHECK(std::abs(frac - 0.3173) < 0.02);
}

TEST_CASE("residual quantization stays strictly inside the bound") {
  const double e = 0.01;
  const auto set = quantize_residuals({{7, 3.1 * e}}, e, 16);
  REQUIRE(set.entries.size() == 1);
  CHECK(set.entries[0].code == 2);  // round(0.031 / 0.0199999…)
  const double rec = static_cast<double>(set.entries[0].code) * set.quant_step;
  CHECK(std::abs(rec - 0.031) < e);

  Rng rng(5);
  for (int trial = 0; trial < 100'000; ++trial) {
    const double bound = std::pow(10.0, rng.uniform(-4.0, -0.5));
    double r = rng.uniform(bound, 10.0) * (rng.u01() < 0.5 ? -1.0 : 1.0);
    const auto s = quantize_residuals({{0, r}}, bound, 1);
    const double err = std::abs(static_cast<double>(s.entries[0].code) * s.quant_step - r);
    REQUIRE(err < bound);
    REQUIRE(s.entries[0].code != 0);
  }
}

TEST_CASE("empty set encodes to the documented binary-mask layout") {
  ResidualSet set;
  set.n = 2560;
  set.quant_step = 0.002;
  const Bytes bytes = encode_residuals(set, Strategy::BinaryMask);
  // 13-byte section prefix + 2560/8 zero mask bytes + no codes
  REQUIRE(bytes.size() == 13 + 320);
  for (std::size_t i = 13; i < bytes.size(); ++i) CHECK(bytes[i] == 0);
  const auto back = decode_residuals(bytes);
  CHECK(back.entries.empty());
  CHECK(back.n == 2560);
}

TEST_CASE("single-entry diff-indexed layout") {
  ResidualSet set;
  set.n = 16;
  set.quant_step = 0.002;
  set.entries = {{0, 5}};
  const Bytes bytes = encode_residuals(set, Strategy::DiffIndexed);
  REQUIRE(bytes.size() == 13 + 3);
  CHECK(bytes[13] == 1);   // count
  CHECK(bytes[14] == 0);   // first delta = index itself
  CHECK(bytes[15] == 10);  // zigzag(5)
}

TEST_CASE("all three strategies round-trip on fuzzed sets") {
  Rng rng(77);
  for (int trial = 0; trial < 3000; ++trial) {
    const auto n = static_cast<std::uint32_t>(1 + rng.next() % 4096);
    const ResidualSet set = random_set(rng, n);
    for (Strategy s :
         {Strategy::DenseMaskedVector, Strategy::DiffIndexed, Strategy::BinaryMask}) {
      const auto back = decode_residuals(encode_residuals(set, s));
      REQUIRE(back.n == set.n);
      REQUIRE(back.entries.size() == set.entries.size());
      for (std::size_t i = 0; i < set.entries.size(); ++i) {
        REQUIRE(back.entries[i].index == set.entries[i].index);
        REQUIRE(back.entries[i].code == set.entries[i].code);
      }
      CHECK(back.quant_step == set.quant_step);
      CHECK(back.strategy == s);
    }
  }
}

TEST_CASE("decoding rejects corrupt residual sections") {
  ResidualSet set;
  set.n = 64;
  set.quant_step = 0.01;
  set.entries = {{3, -2}, {10, 4}};
  Bytes bytes = encode_residuals(set, Strategy::DiffIndexed);
  CHECK_THROWS_AS(decode_residuals(ByteSpan(bytes.data(), bytes.size() - 1)), DecodeError);
  bytes[0] = 9;  // unknown strategy id
  CHECK_THROWS_AS(decode_residuals(bytes), DecodeError);
}

TEST_CASE("strategy choice is minimal after stage-4 and breaks ties in order") {
  Rng rng(11);

  SUBCASE("empty set prefers diff-indexed") {
    ResidualSet set;
    set.n = 2560;
    set.quant_step = 0.002;
    const auto choice = choose_strategy(set);
    CHECK(choice.strategy == Strategy::DiffIndexed);
  }

  SUBCASE("choice is never larger than any single strategy") {
    for (int trial = 0; trial < 30; ++trial) {
      const ResidualSet set = random_set(rng, 2560);
      const auto choice = choose_strategy(set);
      for (Strategy s :
           {Strategy::DiffIndexed, Strategy::BinaryMask, Strategy::DenseMaskedVector}) {
        const auto packed = lossless::compress_dual(encode_residuals(set, s));
        CHECK(choice.packed.payload.size() <= packed.payload.size());
      }
    }
  }

  SUBCASE("dense retained sets make diff indexing the largest raw encoding") {
    ResidualSet set;
    set.n = 2560;
    set.quant_step = 0.002;
    Rng local(3);
    std::size_t placed = 0;
    for (std::uint32_t i = 0; i < set.n && placed < 2000; ++i) {
      if ((set.n - i) <= (2000 - placed) || local.u01() < 0.8) {
        std::int64_t code = static_cast<std::int64_t>(local.next() % 41) - 20;
        if (code == 0) code = 1;
        set.entries.push_back({i, code});
        ++placed;
      }
    }
    REQUIRE(set.entries.size() == 2000);
    const auto diff = encode_residuals(set, Strategy::DiffIndexed).size();
    const auto mask = encode_residuals(set, Strategy::BinaryMask).size();
    const auto dense = encode_residuals(set, Strategy::DenseMaskedVector).size();
    CHECK(mask < diff);
    CHECK(dense < diff);
  }
}

TEST_CASE("crossover accounting: 8-bit deltas vs one mask bit per sample") {
  for (std::size_t k = 0; k <= 2560; ++k) {
    const bool diff_smaller = diff_index_cost_bits(k, 8) < mask_cost_bits(2560);
    CHECK(diff_smaller == (k < 320));
  }
  CHECK(diff_index_cost_bits(320, 8) == mask_cost_bits(2560));
}

TEST_CASE("applying residuals restores the bound") {
  Rng rng(13);
  const double e = 0.001;
  for (int trial = 0; trial < 200; ++trial) {
    const auto x = test::random_vector(rng, 512, -1.5, 1.5);
    const std::vector<double> x_rec(x.size(), 0.0);
    const auto r = compute_residuals(x, x_rec);
    const auto set = quantize_residuals(mask_residuals(r, e), e,
                                        static_cast<std::uint32_t>(x.size()));
    const auto fixed = apply_residuals(x_rec, set);
    for (std::size_t i = 0; i < x.size(); ++i) {
      REQUIRE(std::abs(fixed[i] - x[i]) <= e);
    }
  }

  SUBCASE("empty set returns the reconstruction unchanged") {
    const std::vector<double> x_rec{1.0, -0.5, 0.25};
    ResidualSet set;
    set.n = 3;
    set.quant_step = 0.01;
    CHECK(apply_residuals(x_rec, set) == x_rec);
  }

  SUBCASE("out-of-range index is a structured error") {
    ResidualSet set;
    set.n = 3;
    set.quant_step = 0.01;
    set.entries = {{5, 1}};
    CHECK_THROWS_AS(apply_residuals(std::vector<double>{1.0, 2.0, 3.0}, set), DecodeError);
  }
}

TEST_CASE("retained count is monotone in the bound") {
  Rng rng(21);
  for (int trial = 0; trial < 100; ++trial) {
    const auto x = test::random_vector(rng, 1024, -1.0, 1.0);
    const std::vector<double> x_rec(x.size(), 0.0);
    const auto r = compute_residuals(x, x_rec);
    std::size_t prev = mask_residuals(r, 0.001).size();
    for (double e : {0.01, 0.1, 1.0}) {
      const std::size_t count = mask_residuals(r, e).size();
      CHECK(count <= prev);
      prev = count;
    }
  }
}
