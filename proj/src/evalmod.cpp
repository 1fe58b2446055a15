#include "pqz/evalmod.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <sstream>

#include <omp.h>

#include "pqz/rng.hpp"
#include "pqz/siggen.hpp"
#include "pqz/stage2.hpp"

namespace pqz::eval {

double compression_rate(std::size_t compressed_bytes) {
  if (compressed_bytes == 0) throw InvalidArgument("compression_rate: zero size");
  return static_cast<double>(kUncompressedBytes) / static_cast<double>(compressed_bytes);
}

double nmse(std::span<const double> x, std::span<const double> x_hat) {
  if (x.size() != x_hat.size()) throw InvalidArgument("nmse: length mismatch");
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - x_hat[i];
    num += d * d;
    den += x[i] * x[i];
  }
  if (den == 0.0) throw InvalidArgument("nmse: zero-norm reference");
  return num / den;
}

double max_error(std::span<const double> x, std::span<const double> x_hat) {
  if (x.size() != x_hat.size()) throw InvalidArgument("max_error: length mismatch");
  double m = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) m = std::max(m, std::abs(x[i] - x_hat[i]));
  return m;
}

std::string SchemeConfig::name() const {
  return std::string(pipeline::stage1_name(stage1)) + "+" + pipeline::stage2_name(stage2);
}

Grid default_grid() {
  using pipeline::Stage1Sel;
  using pipeline::Stage2Sel;
  Grid g;
  for (auto s1 : {Stage1Sel::CS8, Stage1Sel::CS16, Stage1Sel::LinearAE8,
                  Stage1Sel::LinearAE16, Stage1Sel::Identity}) {
    for (auto s2 : {Stage2Sel::UniformQ, Stage2Sel::Predictive}) {
      g.schemes.push_back({s1, s2});
    }
  }
  g.schemes.push_back({Stage1Sel::Identity, Stage2Sel::None});  // direct-lossless baseline
  g.bounds = {0.001, 0.01, 0.1};
  g.noise_levels = {std::nullopt, 50.0, 40.0};
  return g;
}

const Aggregate* Experiment::find(const std::string& scheme, double bound,
                                  std::optional<double> snr, int class_id) const {
  AggKey key{scheme, bound, snr.value_or(0.0), class_id};
  auto it = aggregates.find(key);
  return it == aggregates.end() ? nullptr : &it->second;
}

namespace {

Signal noisy_variant(const Signal& clean, std::optional<double> snr) {
  if (!snr) return clean;
  const std::uint64_t seed =
      derive_seed(clean.seed, std::bit_cast<std::uint64_t>(*snr), 0, SeedPurpose::Noise);
  return siggen::add_awgn(clean, *snr, seed);
}

ReportRow evaluate_one(const Signal& signal, std::int64_t signal_index,
                       const SchemeConfig& scheme, double bound,
                       std::optional<double> snr, const Grid& grid,
                       const pipeline::ModelStore& store) {
  ReportRow row;
  row.scheme = scheme.name();
  row.stage1 = scheme.stage1;
  row.stage2 = scheme.stage2;
  row.e_bound = bound;
  row.snr_db = snr;
  row.class_id = static_cast<int>(signal.label);
  row.signal_index = signal_index;

  try {
    pipeline::PipelineConfig cfg;
    cfg.stage1 = scheme.stage1;
    cfg.stage2 = scheme.stage2;
    cfg.e_bound = bound;
    cfg.uniform_bound_scale = grid.uniform_bound_scale;
    cfg.predictive_bound_scale = grid.predictive_bound_scale;

    const pipeline::CompressedBlock block = pipeline::compress(signal, cfg, store);
    const std::vector<double> x_hat = pipeline::decompress(block, store);

    row.compressed_bytes = pipeline::serialized_size(block);
    row.compression_rate = compression_rate(row.compressed_bytes);
    row.nmse = nmse(signal.samples, x_hat);
    row.max_error = max_error(signal.samples, x_hat);
    row.overhead_fraction =
        static_cast<double>(block.residual_payload.size()) /
        static_cast<double>(block.signal_payload.size() + block.residual_payload.size());
    const Bytes res_section =
        lossless::decompress({block.residual_backend(), block.residual_payload});
    const residual::ResidualSet set = residual::decode_residuals(res_section);
    row.retained_fraction =
        static_cast<double>(set.entries.size()) / static_cast<double>(set.n);
    row.residual_strategy = static_cast<int>(block.header.residual_strategy);
    row.signal_backend = static_cast<int>(block.signal_backend());
    row.residual_backend = static_cast<int>(block.residual_backend());
  } catch (const std::exception& e) {
    row.ok = false;
    row.error = e.what();
  }
  return row;
}

}  // namespace

Experiment run_experiment(const Grid& grid, std::span<const Signal> clean_eval,
                          const pipeline::ModelStore& store, Exec exec) {
  Experiment out;

  struct Task {
    std::size_t noise_idx, bound_idx, scheme_idx;
    std::int64_t signal_idx;
  };
  std::vector<Task> tasks;
  tasks.reserve(grid.noise_levels.size() * grid.bounds.size() * grid.schemes.size() *
                clean_eval.size());
  for (std::size_t ni = 0; ni < grid.noise_levels.size(); ++ni) {
    for (std::size_t bi = 0; bi < grid.bounds.size(); ++bi) {
      for (std::size_t si = 0; si < grid.schemes.size(); ++si) {
        for (std::size_t gi = 0; gi < clean_eval.size(); ++gi) {
          tasks.push_back({ni, bi, si, static_cast<std::int64_t>(gi)});
        }
      }
    }
  }

  // noisy corpora are shared across configs; build once per level
  std::vector<std::vector<Signal>> corpora(grid.noise_levels.size());
  for (std::size_t ni = 0; ni < grid.noise_levels.size(); ++ni) {
    corpora[ni].resize(clean_eval.size());
    const auto total = static_cast<std::int64_t>(clean_eval.size());
    if (exec == Exec::Parallel) {
#pragma omp parallel for schedule(static)
      for (std::int64_t i = 0; i < total; ++i) {
        corpora[ni][i] = noisy_variant(clean_eval[i], grid.noise_levels[ni]);
      }
    } else {
      for (std::int64_t i = 0; i < total; ++i) {
        corpora[ni][i] = noisy_variant(clean_eval[i], grid.noise_levels[ni]);
      }
    }
  }

  out.rows.resize(tasks.size());
  const auto total_tasks = static_cast<std::int64_t>(tasks.size());
  auto run_task = [&](std::int64_t t) {
    const Task& task = tasks[static_cast<std::size_t>(t)];
    const Signal& sig = corpora[task.noise_idx][static_cast<std::size_t>(task.signal_idx)];
    out.rows[static_cast<std::size_t>(t)] =
        evaluate_one(sig, task.signal_idx, grid.schemes[task.scheme_idx],
                     grid.bounds[task.bound_idx], grid.noise_levels[task.noise_idx], grid,
                     store);
  };
  if (exec == Exec::Parallel) {
#pragma omp parallel for schedule(dynamic, 16)
    for (std::int64_t t = 0; t < total_tasks; ++t) run_task(t);
  } else {
    for (std::int64_t t = 0; t < total_tasks; ++t) run_task(t);
  }

  // aggregate means, per class and across classes
  for (const ReportRow& row : out.rows) {
    if (!row.ok) continue;
    for (int cls : {row.class_id, -1}) {
      AggKey key{row.scheme, row.e_bound, row.snr_db.value_or(0.0), cls};
      Aggregate& agg = out.aggregates[key];
      ++agg.count;
      agg.mean_rate += row.compression_rate;
      agg.mean_nmse += row.nmse;
      agg.mean_max_error += row.max_error;
      agg.mean_retained_fraction += row.retained_fraction;
      agg.mean_overhead_fraction += row.overhead_fraction;
      if (row.max_error > row.e_bound) ++agg.bound_violations;
    }
  }
  for (auto& [key, agg] : out.aggregates) {
    const auto c = static_cast<double>(agg.count);
    agg.mean_rate /= c;
    agg.mean_nmse /= c;
    agg.mean_max_error /= c;
    agg.mean_retained_fraction /= c;
    agg.mean_overhead_fraction /= c;
  }

  // one aggregate row per (scheme, bound, noise); per-class means stay in the map
  for (const auto& [key, agg] : out.aggregates) {
    if (key.class_id != -1) continue;
    ReportRow row;
    row.aggregate = true;
    row.scheme = key.scheme;
    row.e_bound = key.e_bound;
    if (key.snr_key != 0.0) row.snr_db = key.snr_key;
    row.class_id = key.class_id;
    row.compression_rate = agg.mean_rate;
    row.nmse = agg.mean_nmse;
    row.max_error = agg.mean_max_error;
    row.retained_fraction = agg.mean_retained_fraction;
    row.overhead_fraction = agg.mean_overhead_fraction;
    out.rows.push_back(std::move(row));
  }
  return out;
}

void write_csv(const Experiment& experiment, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << "# pqzip-report v1\n";
  out << "row_type,scheme,e_bound,snr_db,class,signal,compressed_bytes,"
         "compression_rate,nmse,max_error,retained_fraction,overhead_fraction,"
         "residual_strategy,signal_backend,residual_backend,ok,error\n";
  out.precision(12);
  for (const ReportRow& r : experiment.rows) {
    out << (r.aggregate ? "aggregate" : "signal") << ',' << r.scheme << ',' << r.e_bound
        << ',';
    if (r.snr_db) out << *r.snr_db;
    out << ',';
    if (r.class_id >= 0) out << kClassNames[static_cast<std::size_t>(r.class_id)];
    out << ',';
    if (r.signal_index >= 0) out << r.signal_index;
    out << ',' << r.compressed_bytes << ',' << r.compression_rate << ',' << r.nmse << ','
        << r.max_error << ',' << r.retained_fraction << ',' << r.overhead_fraction << ','
        << r.residual_strategy << ',' << r.signal_backend << ',' << r.residual_backend
        << ',' << (r.ok ? 1 : 0) << ',' << r.error << '\n';
  }
  if (!out) throw IoError("write failed: " + path);
}

std::vector<double> reconstruct_through(std::span<const double> x, const TransformSpec& spec,
                                        const pipeline::ModelStore& store) {
  const stage1::Codec& codec = store.codec_for(spec.stage1);
  const stage1::Latent latent = codec.encode(x);

  std::vector<double> latent_hat;
  switch (spec.stage2) {
    case pipeline::Stage2Sel::None:
      latent_hat = latent.values;
      break;
    case pipeline::Stage2Sel::UniformQ: {
      stage2::QuantizerConfig qc{-64.0, 64.0,
                                 stage2::step_for_bound(spec.e_bound * spec.uniform_bound_scale)};
      latent_hat = stage2::dequantize(stage2::quantize(latent.values, qc), qc);
      break;
    }
    case pipeline::Stage2Sel::Predictive: {
      latent_hat = stage2::predictive_decode(stage2::predictive_encode(
          latent.values, spec.e_bound * spec.predictive_bound_scale));
      break;
    }
  }
  return codec.decode_values(latent_hat);
}

std::pair<double, double> count_added_residuals(std::span<const double> x,
                                                const TransformSpec& scheme_a,
                                                const TransformSpec& scheme_b,
                                                double threshold,
                                                const pipeline::ModelStore& store) {
  if (!(threshold > 0.0)) throw InvalidArgument("threshold must be positive");
  auto fraction = [&](const TransformSpec& spec) {
    const std::vector<double> x_hat = reconstruct_through(x, spec, store);
    std::size_t over = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (std::abs(x[i] - x_hat[i]) > threshold) ++over;
    }
    return static_cast<double>(over) / static_cast<double>(x.size());
  };
  return {fraction(scheme_a), fraction(scheme_b)};
}

}  // namespace pqz::eval
