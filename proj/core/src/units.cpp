#include "bclean/units.hpp"

#include <cmath>
#include <string>

#include "bclean/errors.hpp"

namespace bclean {

double helmholtz(double frequency_hz, double aperture_m,
                 double speed_of_sound) {
  if (!(frequency_hz > 0.0) || !(aperture_m > 0.0) ||
      !(speed_of_sound > 0.0)) {
    throw DomainError("helmholtz: frequency, aperture and speed of sound "
                      "must be positive");
  }
  return frequency_hz * aperture_m / speed_of_sound;
}

double to_db(double power, double reference_power) {
  if (!(reference_power > 0.0)) {
    throw DomainError("to_db: reference power must be positive");
  }
  if (std::isnan(power) || power < 0.0) {
    throw DomainError("to_db: negative power " + std::to_string(power));
  }
  if (power == 0.0) return kSilentDb;
  return 10.0 * std::log10(power / reference_power);
}

double from_db(double level_db, double reference_power) {
  if (is_silent(level_db)) return 0.0;
  if (std::isnan(level_db)) throw DomainError("from_db: NaN level");
  return reference_power * std::pow(10.0, level_db / 10.0);
}

}  // namespace bclean
