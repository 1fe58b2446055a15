#include "pqz/siggen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include <omp.h>

namespace pqz::siggen {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kOmega = 2.0 * kPi * kFundamentalHz;

double sign_of(double v) { return (v > 0.0) - (v < 0.0); }

/// Trapezoidal gate: 0 outside [start, start+duration], linear ramps inside.
double gate(double t, const DisturbanceParams& p) {
  if (p.duration <= 0.0) return 0.0;
  const double end = p.start_time + p.duration;
  if (t < p.start_time || t >= end) return 0.0;
  double w = 1.0;
  if (p.ramp_up > 0.0 && t < p.start_time + p.ramp_up) {
    w = (t - p.start_time) / p.ramp_up;
  } else if (p.ramp_down > 0.0 && t > end - p.ramp_down) {
    w = (end - t) / p.ramp_down;
  }
  return std::clamp(w, 0.0, 1.0);
}

bool in_gate(double t, const DisturbanceParams& p) {
  return p.duration > 0.0 && t >= p.start_time && t < p.start_time + p.duration;
}

RangeTable make_default_ranges() {
  RangeTable t;
  t.version = 1;
  auto set = [&](DisturbanceClass c, ClassRanges r) {
    t.classes[static_cast<std::size_t>(c)] = r;
  };
  const Range none{0.0, 0.0};
  const Range h3{0.05, 0.2}, h5{0.05, 0.15}, h7{0.05, 0.1};
  const Range env_dur{0.02, 0.2}, env_ramp{0.0, 0.02};
  const Range flick_amp{0.05, 0.2}, flick_freq{10.0, 20.0}, flick_dur{0.1, 0.2};

  set(DisturbanceClass::Normal,
      {.amplitude = {1.0, 1.0}, .secondary = none, .duration = none, .ramp = none,
       .freq = none, .h3 = none, .h5 = none, .h7 = none});
  set(DisturbanceClass::Sag,
      {.amplitude = {0.1, 0.9}, .secondary = none, .duration = env_dur, .ramp = env_ramp,
       .freq = none, .h3 = none, .h5 = none, .h7 = none});
  set(DisturbanceClass::Swell,
      {.amplitude = {0.1, 0.8}, .secondary = none, .duration = env_dur, .ramp = env_ramp,
       .freq = none, .h3 = none, .h5 = none, .h7 = none});
  set(DisturbanceClass::Interruption,
      {.amplitude = {0.9, 1.0}, .secondary = none, .duration = env_dur, .ramp = env_ramp,
       .freq = none, .h3 = none, .h5 = none, .h7 = none});
  set(DisturbanceClass::Flicker,
      {.amplitude = flick_amp, .secondary = none, .duration = flick_dur, .ramp = none,
       .freq = flick_freq, .h3 = none, .h5 = none, .h7 = none});
  set(DisturbanceClass::OscillatoryTransient,
      {.amplitude = {0.1, 0.8}, .secondary = none, .duration = {0.02, 0.1}, .ramp = none,
       .freq = {300.0, 2000.0}, .h3 = none, .h5 = none, .h7 = none});
  set(DisturbanceClass::ImpulsiveTransient,
      {.amplitude = {0.5, 1.5}, .secondary = none, .duration = {0.002, 0.01}, .ramp = none,
       .freq = {500.0, 2000.0}, .h3 = none, .h5 = none, .h7 = none});
  set(DisturbanceClass::Harmonics,
      {.amplitude = {1.0, 1.0}, .secondary = none, .duration = {0.2, 0.2}, .ramp = none,
       .freq = none, .h3 = h3, .h5 = h5, .h7 = h7});
  set(DisturbanceClass::Notch,
      {.amplitude = {0.1, 0.4}, .secondary = none, .duration = flick_dur, .ramp = none,
       .freq = {500.0, 2500.0}, .h3 = none, .h5 = none, .h7 = none});
  set(DisturbanceClass::Spike,
      {.amplitude = {0.1, 0.4}, .secondary = none, .duration = flick_dur, .ramp = none,
       .freq = {500.0, 2500.0}, .h3 = none, .h5 = none, .h7 = none});
  set(DisturbanceClass::SagHarmonics,
      {.amplitude = {0.1, 0.9}, .secondary = none, .duration = env_dur, .ramp = env_ramp,
       .freq = none, .h3 = h3, .h5 = h5, .h7 = h7});
  set(DisturbanceClass::SwellHarmonics,
      {.amplitude = {0.1, 0.8}, .secondary = none, .duration = env_dur, .ramp = env_ramp,
       .freq = none, .h3 = h3, .h5 = h5, .h7 = h7});
  set(DisturbanceClass::InterruptionHarmonics,
      {.amplitude = {0.9, 1.0}, .secondary = none, .duration = env_dur, .ramp = env_ramp,
       .freq = none, .h3 = h3, .h5 = h5, .h7 = h7});
  set(DisturbanceClass::FlickerSag,
      {.amplitude = {0.1, 0.9}, .secondary = flick_amp, .duration = flick_dur,
       .ramp = env_ramp, .freq = flick_freq, .h3 = none, .h5 = none, .h7 = none});
  set(DisturbanceClass::FlickerSwell,
      {.amplitude = {0.1, 0.8}, .secondary = flick_amp, .duration = flick_dur,
       .ramp = env_ramp, .freq = flick_freq, .h3 = none, .h5 = none, .h7 = none});
  return t;
}

bool uses_pulse_train(DisturbanceClass c) {
  return c == DisturbanceClass::Notch || c == DisturbanceClass::Spike;
}

}  // namespace

const RangeTable& default_ranges() {
  static const RangeTable table = make_default_ranges();
  return table;
}

DisturbanceClass class_from_name(const std::string& name) {
  for (std::size_t i = 0; i < kNumClasses; ++i) {
    if (name == kClassNames[i]) return static_cast<DisturbanceClass>(i);
  }
  throw InvalidArgument("unknown disturbance class: " + name);
}

DisturbanceParams draw_params(DisturbanceClass cls, std::uint64_t seed,
                              const RangeTable& table) {
  const ClassRanges& r = table.classes[static_cast<std::size_t>(cls)];
  Rng rng(seed);
  auto draw = [&rng](const Range& rg) { return rg.lo + (rg.hi - rg.lo) * rng.u01(); };

  DisturbanceParams p;
  p.amplitude = draw(r.amplitude);
  p.secondary_amplitude = draw(r.secondary);
  p.duration = draw(r.duration);
  const double ramp_cap = std::min(r.ramp.hi, p.duration / 2.0);
  p.ramp_up = ramp_cap * rng.u01();
  p.ramp_down = ramp_cap * rng.u01();
  p.start_time = (kSignalDurationS - p.duration) * rng.u01();
  p.phase = 2.0 * kPi * rng.u01();
  p.transient_freq = draw(r.freq);
  p.harmonic_weights = {draw(r.h3), draw(r.h5), draw(r.h7)};
  p.pulse_phase = uses_pulse_train(cls) ? 2.8 * rng.u01() : 0.0;
  return p;
}

void validate_params(DisturbanceClass cls, const DisturbanceParams& p,
                     const RangeTable& table) {
  const ClassRanges& r = table.classes[static_cast<std::size_t>(cls)];
  std::ostringstream why;
  const double eps = 1e-9;

  for (double v : {p.amplitude, p.secondary_amplitude, p.start_time, p.duration,
                   p.ramp_up, p.ramp_down, p.transient_freq, p.phase, p.pulse_phase,
                   p.harmonic_weights[0], p.harmonic_weights[1], p.harmonic_weights[2]}) {
    if (!std::isfinite(v)) {
      why << "non-finite parameter for class " << class_name(cls);
      throw InvalidArgument(why.str());
    }
  }
  if (p.amplitude < r.amplitude.lo - eps || p.amplitude > r.amplitude.hi + eps) {
    why << class_name(cls) << ": amplitude " << p.amplitude << " outside ["
        << r.amplitude.lo << ", " << r.amplitude.hi << "]";
    throw InvalidArgument(why.str());
  }
  if (p.start_time < -eps || p.duration < -eps ||
      p.start_time + p.duration > kSignalDurationS + eps) {
    why << class_name(cls) << ": window [" << p.start_time << ", "
        << p.start_time + p.duration << "] outside 200 ms frame";
    throw InvalidArgument(why.str());
  }
  if (p.ramp_up < -eps || p.ramp_down < -eps ||
      p.ramp_up + p.ramp_down > p.duration + eps) {
    why << class_name(cls) << ": ramps (" << p.ramp_up << ", " << p.ramp_down
        << ") exceed duration " << p.duration;
    throw InvalidArgument(why.str());
  }
  if (p.transient_freq < 0.0 || p.transient_freq > kSampleRateHz / 2.0) {
    why << class_name(cls) << ": transient_freq " << p.transient_freq
        << " outside [0, Nyquist]";
    throw InvalidArgument(why.str());
  }
  for (double h : p.harmonic_weights) {
    if (std::abs(h) > 0.5) {
      why << class_name(cls) << ": harmonic weight " << h << " above 0.5";
      throw InvalidArgument(why.str());
    }
  }
}

Signal generate_signal(DisturbanceClass cls, const DisturbanceParams& p,
                       std::uint64_t seed, const RangeTable& table) {
  validate_params(cls, p, table);

  Signal sig;
  sig.samples.resize(kSignalLength);
  sig.label = cls;
  sig.seed = seed;

  const double a = p.amplitude;
  const double a2 = p.secondary_amplitude;
  const double f = p.transient_freq;
  const double h3 = p.harmonic_weights[0];
  const double h5 = p.harmonic_weights[1];
  const double h7 = p.harmonic_weights[2];
  const double tau_osc = p.duration / 4.0;
  const double pulse_width_phase = f > 0.0 ? kPi * kFundamentalHz / f : 0.0;

  for (std::size_t k = 0; k < kSignalLength; ++k) {
    const double t = static_cast<double>(k) / kSampleRateHz;
    const double theta = kOmega * t + p.phase;
    const double base = std::sin(theta);
    const double w = gate(t, p);
    // harmonic content is gated like every other disturbance component
    const double harm =
        base + w * (h3 * std::sin(3.0 * theta) + h5 * std::sin(5.0 * theta) +
                    h7 * std::sin(7.0 * theta));
    double y = base;

    switch (cls) {
      case DisturbanceClass::Normal:
        y = a * base;
        break;
      case DisturbanceClass::Sag:
      case DisturbanceClass::Interruption:
        y = (1.0 - a * w) * base;
        break;
      case DisturbanceClass::Swell:
        y = (1.0 + a * w) * base;
        break;
      case DisturbanceClass::Flicker:
        y = (1.0 + a * w * std::sin(2.0 * kPi * f * t)) * base;
        break;
      case DisturbanceClass::OscillatoryTransient:
        y = base;
        if (in_gate(t, p) && tau_osc > 0.0) {
          const double dt = t - p.start_time;
          y += a * std::exp(-dt / tau_osc) * std::sin(2.0 * kPi * f * dt);
        }
        break;
      case DisturbanceClass::ImpulsiveTransient:
        y = base;
        if (in_gate(t, p) && f > 0.0) {
          y += a * std::exp(-(t - p.start_time) * f);
        }
        break;
      case DisturbanceClass::Harmonics:
        y = a * harm;
        break;
      case DisturbanceClass::Notch:
      case DisturbanceClass::Spike: {
        y = base;
        if (in_gate(t, p) && pulse_width_phase > 0.0) {
          double chi = std::fmod(theta, kPi);
          if (chi < 0.0) chi += kPi;
          if (chi >= p.pulse_phase && chi < p.pulse_phase + pulse_width_phase) {
            const double pulse = a * sign_of(base);
            y += (cls == DisturbanceClass::Spike) ? pulse : -pulse;
          }
        }
        break;
      }
      case DisturbanceClass::SagHarmonics:
      case DisturbanceClass::InterruptionHarmonics:
        y = (1.0 - a * w) * harm;
        break;
      case DisturbanceClass::SwellHarmonics:
        y = (1.0 + a * w) * harm;
        break;
      case DisturbanceClass::FlickerSag:
        y = (1.0 + a2 * w * std::sin(2.0 * kPi * f * t)) * (1.0 - a * w) * base;
        break;
      case DisturbanceClass::FlickerSwell:
        y = (1.0 + a2 * w * std::sin(2.0 * kPi * f * t)) * (1.0 + a * w) * base;
        break;
    }
    sig.samples[k] = y;
  }
  return sig;
}

Signal add_awgn(const Signal& signal, double snr_db, std::uint64_t seed) {
  if (std::isinf(snr_db)) return signal;
  if (!std::isfinite(snr_db)) throw InvalidArgument("snr_db must be finite or +inf");

  double power = 0.0;
  for (double v : signal.samples) power += v * v;
  power /= static_cast<double>(signal.samples.size());
  const double sigma = std::sqrt(power * std::pow(10.0, -snr_db / 10.0));

  Signal out = signal;
  out.snr_db = snr_db;
  Rng rng(seed);
  for (double& v : out.samples) v += sigma * rng.gaussian();
  return out;
}

std::pair<std::size_t, std::size_t> split_counts(const DatasetSpec& spec) {
  if (spec.signals_per_class < 1) throw InvalidArgument("signals_per_class must be >= 1");
  if (spec.train_fraction < 0.0 || spec.train_fraction > 1.0) {
    throw InvalidArgument("train_fraction must be in [0, 1]");
  }
  const auto n_train = static_cast<std::size_t>(
      std::llround(spec.train_fraction * static_cast<double>(spec.signals_per_class)));
  return {n_train, spec.signals_per_class - n_train};
}

Dataset generate_dataset(const DatasetSpec& spec, Exec exec, const RangeTable& table) {
  const auto [n_train, n_eval] = split_counts(spec);

  Dataset ds;
  ds.train.resize(n_train * kNumClasses);
  ds.eval.resize(n_eval * kNumClasses);

  auto make_one = [&](std::size_t cls_idx, std::size_t sig_idx, SeedPurpose split) {
    const auto cls = static_cast<DisturbanceClass>(cls_idx);
    const std::uint64_t seed = derive_seed(spec.master_seed, cls_idx, sig_idx, split);
    Signal sig = generate_signal(cls, draw_params(cls, seed, table), seed, table);
    if (spec.snr_db) {
      sig = add_awgn(sig, *spec.snr_db, derive_seed(seed, 0, 0, SeedPurpose::Noise));
    }
    return sig;
  };

  const auto total_train = static_cast<std::int64_t>(ds.train.size());
  const auto total_eval = static_cast<std::int64_t>(ds.eval.size());

  if (exec == Exec::Parallel) {
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < total_train; ++i) {
      ds.train[i] = make_one(i / n_train, i % n_train, SeedPurpose::TrainSplit);
    }
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < total_eval; ++i) {
      ds.eval[i] = make_one(i / n_eval, i % n_eval, SeedPurpose::EvalSplit);
    }
  } else {
    for (std::int64_t i = 0; i < total_train; ++i) {
      ds.train[i] = make_one(i / n_train, i % n_train, SeedPurpose::TrainSplit);
    }
    for (std::int64_t i = 0; i < total_eval; ++i) {
      ds.eval[i] = make_one(i / n_eval, i % n_eval, SeedPurpose::EvalSplit);
    }
  }
  return ds;
}

void write_dataset(const std::vector<Signal>& signals, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);

  ByteWriter header;
  header.u8('P');
  header.u8('Q');
  header.u8('D');
  header.u8('S');
  header.u16(1);
  header.u32(static_cast<std::uint32_t>(signals.size()));
  header.u32(static_cast<std::uint32_t>(kSignalLength));
  out.write(reinterpret_cast<const char*>(header.bytes().data()),
            static_cast<std::streamsize>(header.size()));

  for (const Signal& sig : signals) {
    if (sig.samples.size() != kSignalLength) {
      throw InvalidArgument("dataset signals must have 2560 samples");
    }
    ByteWriter rec;
    rec.u8(static_cast<std::uint8_t>(sig.label));
    rec.u8(sig.snr_db ? 1 : 0);
    rec.f32(sig.snr_db ? static_cast<float>(*sig.snr_db) : 0.0f);
    rec.u64(sig.seed);
    for (double v : sig.samples) rec.f64(v);
    out.write(reinterpret_cast<const char*>(rec.bytes().data()),
              static_cast<std::streamsize>(rec.size()));
  }
  if (!out) throw IoError("write failed: " + path);
}

std::vector<Signal> read_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open: " + path);
  Bytes data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  ByteReader r(data);
  if (r.remaining() < 14) throw DecodeError("dataset file too short");
  if (r.u8() != 'P' || r.u8() != 'Q' || r.u8() != 'D' || r.u8() != 'S') {
    throw DecodeError("bad dataset magic");
  }
  const std::uint16_t version = r.u16();
  if (version != 1) throw DecodeError("unsupported dataset version");
  const std::uint32_t count = r.u32();
  const std::uint32_t samples = r.u32();
  if (samples != kSignalLength) throw DecodeError("unexpected samples_per_signal");

  std::vector<Signal> out(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    Signal& sig = out[i];
    const std::uint8_t cls = r.u8();
    if (cls >= kNumClasses) throw DecodeError("bad class id in dataset record");
    sig.label = static_cast<DisturbanceClass>(cls);
    const std::uint8_t snr_flag = r.u8();
    const float snr = r.f32();
    if (snr_flag) sig.snr_db = snr;
    sig.seed = r.u64();
    sig.samples.resize(kSignalLength);
    for (double& v : sig.samples) v = r.f64();
  }
  if (!r.done()) throw DecodeError("trailing bytes in dataset file");
  return out;
}

namespace {

nlohmann::json range_to_json(const Range& r) { return {r.lo, r.hi}; }

Range range_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 2) throw InvalidArgument("range must be [lo, hi]");
  Range r{j[0].get<double>(), j[1].get<double>()};
  if (r.hi < r.lo) throw InvalidArgument("range lo > hi");
  return r;
}

}  // namespace

void save_ranges(const RangeTable& table, const std::string& json_path) {
  nlohmann::json j;
  j["version"] = table.version;
  for (std::size_t i = 0; i < kNumClasses; ++i) {
    const ClassRanges& c = table.classes[i];
    nlohmann::json jc;
    jc["amplitude"] = range_to_json(c.amplitude);
    jc["secondary"] = range_to_json(c.secondary);
    jc["duration"] = range_to_json(c.duration);
    jc["ramp"] = range_to_json(c.ramp);
    jc["freq"] = range_to_json(c.freq);
    jc["h3"] = range_to_json(c.h3);
    jc["h5"] = range_to_json(c.h5);
    jc["h7"] = range_to_json(c.h7);
    j["classes"][kClassNames[i]] = jc;
  }
  std::ofstream out(json_path);
  if (!out) throw IoError("cannot open for writing: " + json_path);
  out << j.dump(2) << "\n";
}

RangeTable load_ranges(const std::string& json_path) {
  std::ifstream in(json_path);
  if (!in) throw IoError("cannot open: " + json_path);
  nlohmann::json j;
  in >> j;

  RangeTable t;
  t.version = j.at("version").get<std::uint32_t>();
  for (std::size_t i = 0; i < kNumClasses; ++i) {
    const nlohmann::json& jc = j.at("classes").at(kClassNames[i]);
    ClassRanges& c = t.classes[i];
    c.amplitude = range_from_json(jc.at("amplitude"));
    c.secondary = range_from_json(jc.at("secondary"));
    c.duration = range_from_json(jc.at("duration"));
    c.ramp = range_from_json(jc.at("ramp"));
    c.freq = range_from_json(jc.at("freq"));
    c.h3 = range_from_json(jc.at("h3"));
    c.h5 = range_from_json(jc.at("h5"));
    c.h7 = range_from_json(jc.at("h7"));
  }
  return t;
}

}  // namespace pqz::siggen
