#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pqz/common.hpp"
#include "pqz/lossless.hpp"
#include "pqz/residual.hpp"
#include "pqz/signal.hpp"
#include "pqz/stage1.hpp"

namespace pqz::pipeline {

enum class Stage1Sel : std::uint8_t {
  Identity = 0,
  CS8 = 1,
  CS16 = 2,
  LinearAE8 = 3,
  LinearAE16 = 4,
};

enum class Stage2Sel : std::uint8_t { None = 0, UniformQ = 1, Predictive = 2 };

const char* stage1_name(Stage1Sel sel);
const char* stage2_name(Stage2Sel sel);
Stage1Sel stage1_from_name(const std::string& name);
Stage2Sel stage2_from_name(const std::string& name);

/// Latent length for each stage-1 selection at the fixed 2560-sample frame.
std::size_t latent_length(Stage1Sel sel);

struct PipelineConfig {
  Stage1Sel stage1 = Stage1Sel::Identity;
  Stage2Sel stage2 = Stage2Sel::UniformQ;
  double e_bound = 0.01;

  // latent-domain bound = e_bound × scale (stage-2 internal bound)
  double uniform_bound_scale = 1.0;
  double predictive_bound_scale = 1.0;

  // uniform quantizer interval in latent units
  double quant_lo = -64.0;
  double quant_hi = 64.0;

  std::size_t cs_sparsity = 0;  // 0 = m/10

  /// e_bound > 0; stage2 None is only valid with Identity stage 1.
  void validate() const;

  std::string scheme_name() const;  // e.g. "cs8+uniform"
};

struct BlockHeader {
  std::uint16_t version = 1;
  Stage1Sel stage1 = Stage1Sel::Identity;
  Stage2Sel stage2 = Stage2Sel::None;
  residual::Strategy residual_strategy = residual::Strategy::DiffIndexed;
  std::uint8_t lossless_flags = 0;  // bit0: signal backend, bit1: residual backend
  double e_bound = 0.0;
  std::uint32_t n = 0;
  std::uint32_t m = 0;
  std::uint32_t signal_len = 0;
  std::uint32_t residual_len = 0;
};

inline constexpr std::size_t kHeaderBytes = 34;

/// Self-describing container; serialized form is header + two lossless-packed
/// sections, 34 + signal_len + residual_len bytes exactly.
struct CompressedBlock {
  BlockHeader header;
  Bytes signal_payload;
  Bytes residual_payload;

  lossless::Backend signal_backend() const {
    return static_cast<lossless::Backend>(header.lossless_flags & 1);
  }
  lossless::Backend residual_backend() const {
    return static_cast<lossless::Backend>((header.lossless_flags >> 1) & 1);
  }
};

std::size_t serialized_size(const CompressedBlock& block);
Bytes serialize(const CompressedBlock& block);
CompressedBlock deserialize(ByteSpan bytes);

void write_block(const CompressedBlock& block, const std::string& path);
CompressedBlock read_block(const std::string& path);

/// Immutable registry of stage-1 codecs. Identity and CS are parameter-built;
/// LinearAE models come from training or model files.
class ModelStore {
 public:
  ModelStore();

  static ModelStore load_dir(const std::string& dir);

  void add(stage1::Codec codec);
  const stage1::Codec& codec_for(Stage1Sel sel) const;
  bool has(Stage1Sel sel) const;

 private:
  std::map<Stage1Sel, stage1::Codec> codecs_;
};

/// Runs stage 1/2, reconstructs immediately, retains out-of-bound residuals,
/// and packs both sections through the dual lossless stage. Deterministic.
CompressedBlock compress(std::span<const double> x, const PipelineConfig& cfg,
                         const ModelStore& store);
CompressedBlock compress(const Signal& signal, const PipelineConfig& cfg,
                         const ModelStore& store);

/// Inverse; for the signal that produced the block the max-norm error is
/// ≤ header.e_bound.
std::vector<double> decompress(const CompressedBlock& block, const ModelStore& store);

struct CorpusResult {
  std::vector<CompressedBlock> blocks;
};

/// Batch kernel over signals; Parallel is bit-identical to Serial.
std::vector<CompressedBlock> compress_corpus(std::span<const Signal> signals,
                                             const PipelineConfig& cfg,
                                             const ModelStore& store,
                                             Exec exec = Exec::Parallel);

}  // namespace pqz::pipeline
