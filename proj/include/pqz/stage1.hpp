#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pqz/common.hpp"
#include "pqz/signal.hpp"

namespace pqz::stage1 {

enum class Kind : std::uint8_t { Identity = 0, CS = 1, LinearAE = 2 };

/// Stage-1 output: n/CR values plus the identity of the codec that made it.
struct Latent {
  std::vector<double> values;
  std::uint64_t codec_id = 0;
};

/// First-stage dimensionality reduction. None of these bound the
/// reconstruction error; the residual stage owns that guarantee.
///
/// CS measures block sums (binary block-diagonal sampling matrix) and
/// reconstructs with orthogonal matching pursuit over the DCT-II dictionary.
/// LinearAE projects onto the top principal directions of a training set.
class Codec {
 public:
  static Codec identity(std::size_t n);

  /// Deterministic, training-free; requires n divisible by m.
  static Codec cs_build(std::size_t n, std::size_t m);

  /// Optimal linear autoencoder: train mean plus top-m principal directions
  /// (rows orthonormal, descending variance, sign fixed so each row's
  /// largest-magnitude entry is positive). Rejects m > #samples.
  static Codec ae_train(const Eigen::MatrixXd& train_rows, std::size_t m);
  static Codec ae_train(const std::vector<Signal>& train, std::size_t m);

  Kind kind() const { return kind_; }
  std::size_t n() const { return n_; }
  std::size_t m() const { return m_; }

  Latent encode(std::span<const double> x) const;

  /// sparsity_k applies to CS only (0 = default m/10, floor 1).
  std::vector<double> decode(const Latent& latent, std::size_t sparsity_k = 0) const;
  std::vector<double> decode_values(std::span<const double> values,
                                    std::size_t sparsity_k = 0) const;

  Bytes serialize() const;
  static Codec deserialize(ByteSpan bytes);
  void save(const std::string& path) const;
  static Codec load(const std::string& path);

  /// FNV-1a over the serialized model; containers reference models by it.
  std::uint64_t content_hash() const;

  // introspection (tests, tooling)
  Eigen::MatrixXd cs_sampling_matrix() const;  // Φ, m×n dense
  const Eigen::MatrixXd& ae_basis() const { return basis_; }
  const Eigen::VectorXd& ae_mean() const { return mean_; }

 private:
  Codec(Kind kind, std::size_t n, std::size_t m) : kind_(kind), n_(n), m_(m) {}

  struct CsCache;
  const CsCache& cs_cache() const;

  Kind kind_;
  std::size_t n_;
  std::size_t m_;
  Eigen::VectorXd mean_;   // LinearAE
  Eigen::MatrixXd basis_;  // LinearAE, m×n, rows orthonormal
  std::shared_ptr<CsCache> cs_cache_;
  mutable std::uint64_t hash_cache_ = 0;
};

/// DCT-II analysis atom j of length n, orthonormal scaling.
double dct_atom(std::size_t n, std::size_t j, std::size_t k);

}  // namespace pqz::stage1
