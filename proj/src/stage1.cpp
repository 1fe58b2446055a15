#include "pqz/stage1.hpp"

#include <cmath>
#include <fstream>
#include <mutex>
#include <numbers>

#include <Eigen/SVD>

namespace pqz::stage1 {

double dct_atom(std::size_t n, std::size_t j, std::size_t k) {
  const double scale = j == 0 ? std::sqrt(1.0 / static_cast<double>(n))
                              : std::sqrt(2.0 / static_cast<double>(n));
  return scale * std::cos(std::numbers::pi * static_cast<double>(j) *
                          (2.0 * static_cast<double>(k) + 1.0) /
                          (2.0 * static_cast<double>(n)));
}

/// Measurement dictionary A = Φ·Ψᵀ and its Gram matrix, built once per codec.
/// The Gram form keeps each pursuit iteration at O(n·k) instead of O(n·m).
struct Codec::CsCache {
  std::once_flag built;
  Eigen::MatrixXd dict;       // A, m×n: block sums of DCT atoms
  Eigen::MatrixXd gram;       // AᵀA, n×n
  Eigen::VectorXd col_norms;  // sqrt(diag(gram))
};

namespace {

Eigen::MatrixXd build_cs_dict(std::size_t n, std::size_t m) {
  const std::size_t block = n / m;
  Eigen::MatrixXd dict(m, n);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 0; i < m; ++i) {
      double sum = 0.0;
      for (std::size_t k = i * block; k < (i + 1) * block; ++k) sum += dct_atom(n, j, k);
      dict(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = sum;
    }
  }
  return dict;
}

}  // namespace

const Codec::CsCache& Codec::cs_cache() const {
  CsCache& cache = *cs_cache_;
  std::call_once(cache.built, [&] {
    cache.dict = build_cs_dict(n_, m_);
    cache.gram.noalias() = cache.dict.transpose() * cache.dict;
    cache.col_norms = cache.gram.diagonal().cwiseMax(0.0).cwiseSqrt();
  });
  return cache;
}

Codec Codec::identity(std::size_t n) {
  if (n == 0) throw InvalidArgument("identity codec: n must be positive");
  return Codec(Kind::Identity, n, n);
}

Codec Codec::cs_build(std::size_t n, std::size_t m) {
  if (m == 0 || n == 0) throw InvalidArgument("cs_build: n and m must be positive");
  if (n % m != 0) throw InvalidArgument("cs_build: n must be divisible by m");
  Codec c(Kind::CS, n, m);
  c.cs_cache_ = std::make_shared<CsCache>();
  return c;
}

Codec Codec::ae_train(const Eigen::MatrixXd& train_rows, std::size_t m) {
  const auto count = static_cast<std::size_t>(train_rows.rows());
  const auto n = static_cast<std::size_t>(train_rows.cols());
  if (count == 0) throw InvalidArgument("ae_train: empty training set");
  if (m == 0 || m > n) throw InvalidArgument("ae_train: m must be in [1, n]");
  if (m > count) throw InvalidArgument("ae_train: m exceeds training sample count");

  Codec c(Kind::LinearAE, n, m);
  c.mean_ = train_rows.colwise().mean();
  Eigen::MatrixXd centered = train_rows.rowwise() - c.mean_.transpose();

  if (count > 400 && count < n) {
    // Gram trick: eigenvectors of the small X·Xᵀ give the principal
    // directions as V = Xᵀ·U·Σ⁻¹; much cheaper than a thin SVD here
    Eigen::MatrixXd gram = centered * centered.transpose();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
    if (eig.info() != Eigen::Success) throw Error("ae_train: eigensolver failed");
    const auto total = static_cast<Eigen::Index>(count);
    c.basis_.resize(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n));
    const double lambda_max = std::max(eig.eigenvalues()(total - 1), 0.0);
    for (Eigen::Index r = 0; r < static_cast<Eigen::Index>(m); ++r) {
      const Eigen::Index src = total - 1 - r;  // ascending order in Eigen
      const double lambda = eig.eigenvalues()(src);
      if (!(lambda > 1e-12 * std::max(lambda_max, 1.0))) {
        throw InvalidArgument("ae_train: training data rank below m");
      }
      c.basis_.row(r) =
          (centered.transpose() * eig.eigenvectors().col(src)).transpose() /
          std::sqrt(lambda);
    }
  } else {
    Eigen::BDCSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinV);
    c.basis_ = svd.matrixV().leftCols(static_cast<Eigen::Index>(m)).transpose();
  }

  // fix each direction's sign: largest-magnitude entry positive
  for (Eigen::Index r = 0; r < c.basis_.rows(); ++r) {
    Eigen::Index max_idx = 0;
    double max_abs = -1.0;
    for (Eigen::Index j = 0; j < c.basis_.cols(); ++j) {
      const double a = std::abs(c.basis_(r, j));
      if (a > max_abs) {
        max_abs = a;
        max_idx = j;
      }
    }
    if (c.basis_(r, max_idx) < 0.0) c.basis_.row(r) = -c.basis_.row(r);
  }
  return c;
}

Codec Codec::ae_train(const std::vector<Signal>& train, std::size_t m) {
  if (train.empty()) throw InvalidArgument("ae_train: empty training set");
  const std::size_t n = train[0].samples.size();
  Eigen::MatrixXd rows(static_cast<Eigen::Index>(train.size()), static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < train.size(); ++i) {
    if (train[i].samples.size() != n) throw InvalidArgument("ae_train: ragged training set");
    for (std::size_t j = 0; j < n; ++j) {
      rows(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = train[i].samples[j];
    }
  }
  return ae_train(rows, m);
}

Latent Codec::encode(std::span<const double> x) const {
  if (x.size() != n_) throw InvalidArgument("stage1 encode: signal length mismatch");
  Latent out;
  out.codec_id = content_hash();
  out.values.resize(m_);

  switch (kind_) {
    case Kind::Identity:
      out.values.assign(x.begin(), x.end());
      break;
    case Kind::CS: {
      // y_i = sum of block i; additions only
      const std::size_t block = n_ / m_;
      for (std::size_t i = 0; i < m_; ++i) {
        double sum = 0.0;
        for (std::size_t k = i * block; k < (i + 1) * block; ++k) sum += x[k];
        out.values[i] = sum;
      }
      break;
    }
    case Kind::LinearAE: {
      Eigen::Map<const Eigen::VectorXd> xv(x.data(), static_cast<Eigen::Index>(n_));
      Eigen::VectorXd z = basis_ * (xv - mean_);
      for (std::size_t i = 0; i < m_; ++i) out.values[i] = z(static_cast<Eigen::Index>(i));
      break;
    }
  }
  return out;
}

std::vector<double> Codec::decode(const Latent& latent, std::size_t sparsity_k) const {
  if (latent.codec_id != 0 && latent.codec_id != content_hash()) {
    throw InvalidArgument("stage1 decode: latent was produced by a different codec");
  }
  return decode_values(latent.values, sparsity_k);
}

std::vector<double> Codec::decode_values(std::span<const double> values,
                                         std::size_t sparsity_k) const {
  if (values.size() != m_) throw InvalidArgument("stage1 decode: latent length mismatch");

  switch (kind_) {
    case Kind::Identity:
      return {values.begin(), values.end()};

    case Kind::LinearAE: {
      Eigen::Map<const Eigen::VectorXd> zv(values.data(), static_cast<Eigen::Index>(m_));
      Eigen::VectorXd x = basis_.transpose() * zv + mean_;
      return {x.data(), x.data() + n_};
    }

    case Kind::CS: {
      const CsCache& cache = cs_cache();
      std::size_t max_atoms = sparsity_k == 0 ? std::max<std::size_t>(1, m_ / 10) : sparsity_k;
      if (max_atoms > m_) max_atoms = m_;

      Eigen::Map<const Eigen::VectorXd> y(values.data(), static_cast<Eigen::Index>(m_));
      const double y_norm = y.norm();
      std::vector<double> out(n_, 0.0);
      if (y_norm == 0.0) return out;

      // correlations maintained through the Gram matrix:
      //   corr = Aᵀy − G[:,S]·c_S
      Eigen::VectorXd h = cache.dict.transpose() * y;
      Eigen::VectorXd corr = h;
      std::vector<Eigen::Index> support;
      std::vector<char> selected(n_, 0);
      Eigen::VectorXd coeffs;
      const double tol = 1e-9 * y_norm;
      const double norm_floor = 1e-9 * cache.col_norms.maxCoeff();

      for (std::size_t t = 0; t < max_atoms; ++t) {
        Eigen::Index best = -1;
        double best_score = tol;
        for (Eigen::Index j = 0; j < static_cast<Eigen::Index>(n_); ++j) {
          if (selected[static_cast<std::size_t>(j)]) continue;
          const double norm = cache.col_norms(j);
          if (norm <= norm_floor) continue;
          const double score = std::abs(corr(j)) / norm;
          // Block sums cannot tell atom j from its reflections 2am±j: those
          // columns are exactly parallel, so their normalized scores tie in
          // exact arithmetic. Ties go to the lowest index; the relative slack
          // keeps fp rounding from flipping them.
          if (score > best_score * (1.0 + 1e-9)) {
            best_score = score;
            best = j;
          }
        }
        if (best < 0) break;

        selected[static_cast<std::size_t>(best)] = 1;
        support.push_back(best);
        const auto k = static_cast<Eigen::Index>(support.size());

        // least-squares refit on the support via the normal equations
        Eigen::MatrixXd gram_s(k, k);
        Eigen::VectorXd h_s(k);
        for (Eigen::Index a = 0; a < k; ++a) {
          h_s(a) = h(support[static_cast<std::size_t>(a)]);
          for (Eigen::Index b = 0; b < k; ++b) {
            gram_s(a, b) = cache.gram(support[static_cast<std::size_t>(a)],
                                      support[static_cast<std::size_t>(b)]);
          }
        }
        Eigen::LDLT<Eigen::MatrixXd> ldlt(gram_s);
        if (ldlt.info() != Eigen::Success) {
          support.pop_back();
          break;
        }
        coeffs = ldlt.solve(h_s);

        corr = h;
        for (Eigen::Index a = 0; a < k; ++a) {
          corr.noalias() -= coeffs(a) * cache.gram.col(support[static_cast<std::size_t>(a)]);
        }
      }

      for (std::size_t a = 0; a < support.size(); ++a) {
        const auto j = static_cast<std::size_t>(support[a]);
        const double c = coeffs(static_cast<Eigen::Index>(a));
        for (std::size_t k2 = 0; k2 < n_; ++k2) out[k2] += c * dct_atom(n_, j, k2);
      }
      return out;
    }
  }
  throw Error("unreachable codec kind");
}

Eigen::MatrixXd Codec::cs_sampling_matrix() const {
  if (kind_ != Kind::CS) throw InvalidArgument("sampling matrix: not a CS codec");
  Eigen::MatrixXd phi = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(m_),
                                              static_cast<Eigen::Index>(n_));
  const std::size_t block = n_ / m_;
  for (std::size_t i = 0; i < m_; ++i) {
    for (std::size_t k = i * block; k < (i + 1) * block; ++k) {
      phi(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = 1.0;
    }
  }
  return phi;
}

Bytes Codec::serialize() const {
  ByteWriter w;
  w.u8('P');
  w.u8('Q');
  w.u8('S');
  w.u8('1');
  w.u16(1);
  w.u8(static_cast<std::uint8_t>(kind_));
  w.u32(static_cast<std::uint32_t>(n_));
  w.u32(static_cast<std::uint32_t>(m_));
  if (kind_ == Kind::LinearAE) {
    for (std::size_t i = 0; i < n_; ++i) w.f64(mean_(static_cast<Eigen::Index>(i)));
    for (std::size_t r = 0; r < m_; ++r) {
      for (std::size_t c = 0; c < n_; ++c) {
        w.f64(basis_(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)));
      }
    }
  }
  return w.take();
}

Codec Codec::deserialize(ByteSpan bytes) {
  ByteReader r(bytes);
  if (r.remaining() < 15) throw DecodeError("model file too short");
  if (r.u8() != 'P' || r.u8() != 'Q' || r.u8() != 'S' || r.u8() != '1') {
    throw DecodeError("bad model magic");
  }
  if (r.u16() != 1) throw DecodeError("unsupported model version");
  const std::uint8_t kind = r.u8();
  const std::uint32_t n = r.u32();
  const std::uint32_t m = r.u32();
  if (n == 0 || m == 0 || m > n) throw DecodeError("bad model dimensions");

  switch (static_cast<Kind>(kind)) {
    case Kind::Identity:
      if (m != n) throw DecodeError("identity model requires m == n");
      if (!r.done()) throw DecodeError("trailing bytes in model file");
      return identity(n);
    case Kind::CS: {
      if (n % m != 0) throw DecodeError("cs model requires n divisible by m");
      if (!r.done()) throw DecodeError("trailing bytes in model file");
      return cs_build(n, m);
    }
    case Kind::LinearAE: {
      Codec c(Kind::LinearAE, n, m);
      c.mean_.resize(n);
      for (std::uint32_t i = 0; i < n; ++i) c.mean_(i) = r.f64();
      c.basis_.resize(m, n);
      for (std::uint32_t i = 0; i < m; ++i) {
        for (std::uint32_t j = 0; j < n; ++j) c.basis_(i, j) = r.f64();
      }
      if (!r.done()) throw DecodeError("trailing bytes in model file");
      return c;
    }
    default:
      throw DecodeError("unknown model kind");
  }
}

void Codec::save(const std::string& path) const {
  const Bytes bytes = serialize();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed: " + path);
}

Codec Codec::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open: " + path);
  Bytes data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize(data);
}

std::uint64_t Codec::content_hash() const {
  if (hash_cache_ == 0) hash_cache_ = fnv1a64(serialize());
  return hash_cache_;
}

}  // namespace pqz::stage1
