#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pqz/common.hpp"

namespace pqz {

inline constexpr std::size_t kSignalLength = 2560;
inline constexpr double kSampleRateHz = 12800.0;
inline constexpr double kFundamentalHz = 50.0;
inline constexpr std::size_t kSamplesPerCycle = 256;  // 12800 / 50
inline constexpr std::size_t kCyclesPerSignal = 10;
inline constexpr double kSignalDurationS = 0.2;

/// 10 individual disturbance patterns plus 5 combined ones. Values are
/// wire-format ids (dataset records, report CSVs).
enum class DisturbanceClass : std::uint8_t {
  Normal = 0,
  Sag = 1,
  Swell = 2,
  Interruption = 3,
  Flicker = 4,
  OscillatoryTransient = 5,
  ImpulsiveTransient = 6,
  Harmonics = 7,
  Notch = 8,
  Spike = 9,
  SagHarmonics = 10,
  SwellHarmonics = 11,
  InterruptionHarmonics = 12,
  FlickerSag = 13,
  FlickerSwell = 14,
};

inline constexpr std::size_t kNumClasses = 15;

inline constexpr std::array<const char*, kNumClasses> kClassNames = {
    "normal",
    "sag",
    "swell",
    "interruption",
    "flicker",
    "oscillatory_transient",
    "impulsive_transient",
    "harmonics",
    "notch",
    "spike",
    "sag_harmonics",
    "swell_harmonics",
    "interruption_harmonics",
    "flicker_sag",
    "flicker_swell",
};

inline const char* class_name(DisturbanceClass c) {
  return kClassNames[static_cast<std::size_t>(c)];
}

DisturbanceClass class_from_name(const std::string& name);

/// One 200 ms waveform frame: 2560 samples at 12.8 kHz in per-unit.
struct Signal {
  std::vector<double> samples;
  DisturbanceClass label = DisturbanceClass::Normal;
  std::optional<double> snr_db;  // empty = noiseless
  std::uint64_t seed = 0;
};

}  // namespace pqz
