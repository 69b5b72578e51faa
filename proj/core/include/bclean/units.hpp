#pragma once

#include <limits>

namespace bclean {

/// Level used for zero linear power. Every dB consumer must test for it
/// with is_silent() before doing arithmetic on levels.
inline constexpr double kSilentDb = -std::numeric_limits<double>::infinity();

inline constexpr double kDefaultSpeedOfSound = 343.0;  // m/s

[[nodiscard]] constexpr bool is_silent(double level_db) noexcept {
  return level_db == kSilentDb;
}

/// He = f D / a. Throws DomainError unless every argument is positive.
[[nodiscard]] double helmholtz(double frequency_hz, double aperture_m,
                               double speed_of_sound = kDefaultSpeedOfSound);

/// 10 log10(p / p_ref); p == 0 maps to kSilentDb.
[[nodiscard]] double to_db(double power, double reference_power = 1.0);

/// Inverse of to_db; kSilentDb maps back to 0.
[[nodiscard]] double from_db(double level_db, double reference_power = 1.0);

}  // namespace bclean
