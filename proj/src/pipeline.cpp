#include "pqz/pipeline.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

#include <omp.h>

#include "pqz/stage2.hpp"

namespace pqz::pipeline {

const char* stage1_name(Stage1Sel sel) {
  switch (sel) {
    case Stage1Sel::Identity: return "identity";
    case Stage1Sel::CS8: return "cs8";
    case Stage1Sel::CS16: return "cs16";
    case Stage1Sel::LinearAE8: return "ae8";
    case Stage1Sel::LinearAE16: return "ae16";
  }
  return "?";
}

const char* stage2_name(Stage2Sel sel) {
  switch (sel) {
    case Stage2Sel::None: return "none";
    case Stage2Sel::UniformQ: return "uniform";
    case Stage2Sel::Predictive: return "predictive";
  }
  return "?";
}

Stage1Sel stage1_from_name(const std::string& name) {
  for (auto sel : {Stage1Sel::Identity, Stage1Sel::CS8, Stage1Sel::CS16,
                   Stage1Sel::LinearAE8, Stage1Sel::LinearAE16}) {
    if (name == stage1_name(sel)) return sel;
  }
  throw InvalidArgument("unknown stage1 scheme: " + name);
}

Stage2Sel stage2_from_name(const std::string& name) {
  for (auto sel : {Stage2Sel::None, Stage2Sel::UniformQ, Stage2Sel::Predictive}) {
    if (name == stage2_name(sel)) return sel;
  }
  throw InvalidArgument("unknown stage2 scheme: " + name);
}

std::size_t latent_length(Stage1Sel sel) {
  switch (sel) {
    case Stage1Sel::Identity: return kSignalLength;
    case Stage1Sel::CS8:
    case Stage1Sel::LinearAE8: return kSignalLength / 8;
    case Stage1Sel::CS16:
    case Stage1Sel::LinearAE16: return kSignalLength / 16;
  }
  throw InvalidArgument("unknown stage1 selection");
}

void PipelineConfig::validate() const {
  if (!(e_bound > 0.0) || !std::isfinite(e_bound)) {
    throw InvalidArgument("e_bound must be positive and finite");
  }
  if (stage2 == Stage2Sel::None && stage1 != Stage1Sel::Identity) {
    throw InvalidArgument("stage2=none is only valid with stage1=identity");
  }
  if (!(uniform_bound_scale > 0.0) || !(predictive_bound_scale > 0.0)) {
    throw InvalidArgument("latent bound scales must be positive");
  }
  if (!(quant_hi > quant_lo)) throw InvalidArgument("quantizer interval empty");
}

std::string PipelineConfig::scheme_name() const {
  return std::string(stage1_name(stage1)) + "+" + stage2_name(stage2);
}

std::size_t serialized_size(const CompressedBlock& block) {
  return kHeaderBytes + block.signal_payload.size() + block.residual_payload.size();
}

Bytes serialize(const CompressedBlock& block) {
  ByteWriter w;
  w.u8('P');
  w.u8('Q');
  w.u8('Z');
  w.u8('1');
  w.u16(block.header.version);
  w.u8(static_cast<std::uint8_t>(block.header.stage1));
  w.u8(static_cast<std::uint8_t>(block.header.stage2));
  w.u8(static_cast<std::uint8_t>(block.header.residual_strategy));
  w.u8(block.header.lossless_flags);
  w.f64(block.header.e_bound);
  w.u32(block.header.n);
  w.u32(block.header.m);
  w.u32(block.header.signal_len);
  w.u32(block.header.residual_len);
  w.raw(block.signal_payload);
  w.raw(block.residual_payload);
  return w.take();
}

CompressedBlock deserialize(ByteSpan bytes) {
  ByteReader r(bytes);
  if (r.remaining() < kHeaderBytes) throw DecodeError("block too short for header");
  if (r.u8() != 'P' || r.u8() != 'Q' || r.u8() != 'Z' || r.u8() != '1') {
    throw DecodeError("bad block magic");
  }
  CompressedBlock block;
  block.header.version = r.u16();
  if (block.header.version != 1) throw DecodeError("unsupported block version");
  const std::uint8_t s1 = r.u8();
  const std::uint8_t s2 = r.u8();
  const std::uint8_t rs = r.u8();
  if (s1 > 4) throw DecodeError("bad stage1 id");
  if (s2 > 2) throw DecodeError("bad stage2 id");
  if (rs > 2) throw DecodeError("bad residual strategy id");
  block.header.stage1 = static_cast<Stage1Sel>(s1);
  block.header.stage2 = static_cast<Stage2Sel>(s2);
  block.header.residual_strategy = static_cast<residual::Strategy>(rs);
  block.header.lossless_flags = r.u8();
  if (block.header.lossless_flags > 3) throw DecodeError("bad lossless flags");
  block.header.e_bound = r.f64();
  if (!(block.header.e_bound > 0.0) || !std::isfinite(block.header.e_bound)) {
    throw DecodeError("bad e_bound in header");
  }
  block.header.n = r.u32();
  block.header.m = r.u32();
  block.header.signal_len = r.u32();
  block.header.residual_len = r.u32();
  if (r.remaining() != std::size_t{block.header.signal_len} + block.header.residual_len) {
    throw DecodeError("section lengths inconsistent with block size");
  }
  ByteSpan sig = r.raw(block.header.signal_len);
  ByteSpan res = r.raw(block.header.residual_len);
  block.signal_payload.assign(sig.begin(), sig.end());
  block.residual_payload.assign(res.begin(), res.end());
  return block;
}

void write_block(const CompressedBlock& block, const std::string& path) {
  const Bytes bytes = serialize(block);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed: " + path);
}

CompressedBlock read_block(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open: " + path);
  Bytes data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize(data);
}

ModelStore::ModelStore() {
  codecs_.emplace(Stage1Sel::Identity, stage1::Codec::identity(kSignalLength));
  codecs_.emplace(Stage1Sel::CS8, stage1::Codec::cs_build(kSignalLength, kSignalLength / 8));
  codecs_.emplace(Stage1Sel::CS16, stage1::Codec::cs_build(kSignalLength, kSignalLength / 16));
}

ModelStore ModelStore::load_dir(const std::string& dir) {
  ModelStore store;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.path().extension() == ".pqs1") store.add(stage1::Codec::load(entry.path()));
  }
  return store;
}

void ModelStore::add(stage1::Codec codec) {
  if (codec.kind() == stage1::Kind::LinearAE) {
    if (codec.n() != kSignalLength) throw InvalidArgument("model store: n must be 2560");
    if (codec.m() == kSignalLength / 8) {
      codecs_.insert_or_assign(Stage1Sel::LinearAE8, std::move(codec));
    } else if (codec.m() == kSignalLength / 16) {
      codecs_.insert_or_assign(Stage1Sel::LinearAE16, std::move(codec));
    } else {
      throw InvalidArgument("model store: LinearAE latent length must be 320 or 160");
    }
  }
  // Identity/CS codecs are parameter-built in the constructor
}

bool ModelStore::has(Stage1Sel sel) const { return codecs_.count(sel) != 0; }

const stage1::Codec& ModelStore::codec_for(Stage1Sel sel) const {
  auto it = codecs_.find(sel);
  if (it == codecs_.end()) {
    throw Error(std::string("model not available: ") + stage1_name(sel) +
                " (train and load a model directory first)");
  }
  return it->second;
}

namespace {

std::size_t effective_sparsity(const stage1::Codec& codec, std::size_t cfg_sparsity) {
  if (cfg_sparsity != 0) return cfg_sparsity;
  return std::max<std::size_t>(1, codec.m() / 10);
}

bool is_ae(Stage1Sel sel) {
  return sel == Stage1Sel::LinearAE8 || sel == Stage1Sel::LinearAE16;
}

bool is_cs(Stage1Sel sel) { return sel == Stage1Sel::CS8 || sel == Stage1Sel::CS16; }

}  // namespace

CompressedBlock compress(std::span<const double> x, const PipelineConfig& cfg,
                         const ModelStore& store) {
  cfg.validate();
  if (x.size() != kSignalLength) {
    throw InvalidArgument("compress: signals must have exactly 2560 samples");
  }
  for (double v : x) {
    if (!std::isfinite(v)) throw InvalidArgument("compress: non-finite sample");
  }

  const stage1::Codec& codec = store.codec_for(cfg.stage1);
  const stage1::Latent latent = codec.encode(x);
  const std::size_t sparsity = effective_sparsity(codec, cfg.cs_sparsity);

  ByteWriter sig;
  if (is_ae(cfg.stage1)) sig.u64(codec.content_hash());
  if (is_cs(cfg.stage1)) sig.varint(sparsity);

  std::vector<double> latent_hat;
  switch (cfg.stage2) {
    case Stage2Sel::None: {
      latent_hat = latent.values;
      for (double v : latent.values) sig.f64(v);
      break;
    }
    case Stage2Sel::UniformQ: {
      const double e_lat = cfg.e_bound * cfg.uniform_bound_scale;
      stage2::QuantizerConfig qc{cfg.quant_lo, cfg.quant_hi, stage2::step_for_bound(e_lat)};
      std::uint64_t saturated = 0;
      const auto codes = stage2::quantize(latent.values, qc, &saturated);
      const auto deltas = stage2::diff_encode(codes);
      sig.f64(qc.lo);
      sig.f64(qc.step);
      for (std::int64_t d : deltas) sig.svarint(d);
      latent_hat = stage2::dequantize(codes, qc);
      break;
    }
    case Stage2Sel::Predictive: {
      const double e_lat = cfg.e_bound * cfg.predictive_bound_scale;
      const auto stream = stage2::predictive_encode(latent.values, e_lat);
      sig.f64(stream.quant_step);
      for (std::int64_t c : stream.codes) sig.svarint(c);
      latent_hat = stage2::predictive_decode(stream);
      break;
    }
  }

  // reconstruct right away; whatever stages 1+2 lost shows up in the residuals
  const std::vector<double> x_rec = codec.decode_values(latent_hat, sparsity);
  const auto r = residual::compute_residuals(x, x_rec);
  const auto set =
      residual::quantize_residuals(residual::mask_residuals(r, cfg.e_bound), cfg.e_bound,
                                   static_cast<std::uint32_t>(x.size()));
  residual::StrategyChoice res_choice = residual::choose_strategy(set);
  lossless::Choice sig_choice = lossless::compress_dual(sig.bytes());

  CompressedBlock block;
  block.header.version = 1;
  block.header.stage1 = cfg.stage1;
  block.header.stage2 = cfg.stage2;
  block.header.residual_strategy = res_choice.strategy;
  block.header.lossless_flags =
      static_cast<std::uint8_t>(static_cast<std::uint8_t>(sig_choice.backend) |
                                (static_cast<std::uint8_t>(res_choice.packed.backend) << 1));
  block.header.e_bound = cfg.e_bound;
  block.header.n = static_cast<std::uint32_t>(x.size());
  block.header.m = static_cast<std::uint32_t>(codec.m());
  block.signal_payload = std::move(sig_choice.payload);
  block.residual_payload = std::move(res_choice.packed.payload);
  block.header.signal_len = static_cast<std::uint32_t>(block.signal_payload.size());
  block.header.residual_len = static_cast<std::uint32_t>(block.residual_payload.size());
  return block;
}

CompressedBlock compress(const Signal& signal, const PipelineConfig& cfg,
                         const ModelStore& store) {
  return compress(std::span<const double>(signal.samples), cfg, store);
}

std::vector<double> decompress(const CompressedBlock& block, const ModelStore& store) {
  const BlockHeader& h = block.header;
  if (h.version != 1) throw DecodeError("unsupported block version");
  if (h.n != kSignalLength) throw DecodeError("unsupported signal length");
  if (h.stage2 == Stage2Sel::None && h.stage1 != Stage1Sel::Identity) {
    throw DecodeError("invalid scheme combination in header");
  }

  const stage1::Codec& codec = store.codec_for(h.stage1);
  if (codec.m() != h.m) throw DecodeError("model mismatch: latent length");

  const Bytes sig_bytes = lossless::decompress({block.signal_backend(), block.signal_payload});
  ByteReader rd(sig_bytes);

  if (is_ae(h.stage1)) {
    const std::uint64_t hash = rd.u64();
    if (hash != codec.content_hash()) {
      throw DecodeError("model hash mismatch: block was compressed with a different model");
    }
  }
  std::size_t sparsity = 0;
  if (is_cs(h.stage1)) {
    sparsity = rd.varint();
    if (sparsity == 0 || sparsity > h.m) throw DecodeError("bad sparsity in signal payload");
  }

  std::vector<double> latent_hat(h.m);
  switch (h.stage2) {
    case Stage2Sel::None: {
      for (auto& v : latent_hat) v = rd.f64();
      break;
    }
    case Stage2Sel::UniformQ: {
      stage2::QuantizerConfig qc;
      qc.lo = rd.f64();
      qc.step = rd.f64();
      qc.hi = qc.lo;  // hi is not needed to invert; keep interval formally valid
      if (!(qc.step > 0.0) || !std::isfinite(qc.step) || !std::isfinite(qc.lo)) {
        throw DecodeError("bad quantizer parameters");
      }
      std::vector<std::int64_t> deltas(h.m);
      for (auto& d : deltas) d = rd.svarint();
      const auto codes = stage2::diff_decode(deltas);
      latent_hat.assign(codes.size(), 0.0);
      for (std::size_t i = 0; i < codes.size(); ++i) {
        latent_hat[i] = qc.lo + static_cast<double>(codes[i]) * qc.step;
      }
      break;
    }
    case Stage2Sel::Predictive: {
      stage2::PredictiveStream stream;
      stream.quant_step = rd.f64();
      if (!(stream.quant_step > 0.0) || !std::isfinite(stream.quant_step)) {
        throw DecodeError("bad predictive step");
      }
      stream.codes.resize(h.m);
      for (auto& c : stream.codes) c = rd.svarint();
      latent_hat = stage2::predictive_decode(stream);
      break;
    }
  }
  if (!rd.done()) throw DecodeError("trailing bytes in signal payload");

  const std::vector<double> x_rec = codec.decode_values(latent_hat, sparsity);

  const Bytes res_bytes =
      lossless::decompress({block.residual_backend(), block.residual_payload});
  const residual::ResidualSet set = residual::decode_residuals(res_bytes);
  if (set.strategy != h.residual_strategy) {
    throw DecodeError("residual strategy disagrees between header and section");
  }
  if (set.n != h.n) throw DecodeError("residual section length mismatch");

  return residual::apply_residuals(x_rec, set);
}

std::vector<CompressedBlock> compress_corpus(std::span<const Signal> signals,
                                             const PipelineConfig& cfg,
                                             const ModelStore& store, Exec exec) {
  std::vector<CompressedBlock> blocks(signals.size());
  const auto total = static_cast<std::int64_t>(signals.size());
  if (exec == Exec::Parallel) {
#pragma omp parallel for schedule(dynamic, 8)
    for (std::int64_t i = 0; i < total; ++i) {
      blocks[i] = compress(signals[i], cfg, store);
    }
  } else {
    for (std::int64_t i = 0; i < total; ++i) {
      blocks[i] = compress(signals[i], cfg, store);
    }
  }
  return blocks;
}

}  // namespace pqz::pipeline
