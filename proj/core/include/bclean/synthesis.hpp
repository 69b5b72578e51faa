#pragma once

#include <Eigen/Core>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "bclean/types.hpp"
#include "bclean/units.hpp"

namespace bclean {

/// Constant level in every bin.
struct FlatSpectrum {
  double level_db = 0.0;
};

/// Level interpolated linearly in dB over the bin index, from the first
/// bin to the last.
struct LinearDbSpectrum {
  double start_db = 0.0;
  double end_db = 0.0;
};

/// Constant level inside [f_lo, f_hi] (inclusive), silent elsewhere.
struct BandSpectrum {
  double f_lo = 0.0;
  double f_hi = 0.0;
  double level_db = 0.0;
};

using Spectrum = std::variant<FlatSpectrum, LinearDbSpectrum, BandSpectrum>;

/// Level of `spectrum` at bin `i` in dB, kSilentDb where it is absent.
[[nodiscard]] double spectrum_level_db(const Spectrum& spectrum,
                                       const FrequencyGrid& freqs,
                                       std::size_t i);

/// Incoherent monopole. The spectrum is the PSD received at the array
/// reference point.
struct SourceSpec {
  std::string label;
  Vec3 position = Vec3::Zero();
  Spectrum spectrum = FlatSpectrum{};
};

struct SceneSpec {
  MicArray array;
  FocusGrid grid;
  FrequencyGrid freqs;
  std::vector<SourceSpec> sources;
  std::optional<Spectrum> mic_self_noise;
  double speed_of_sound = kDefaultSpeedOfSound;
};

/// Throws ConfigError for non-finite source positions or band limits
/// outside the frequency grid.
void validate(const SceneSpec& scene);

/// Free-field monopole transfer vector normalised to the array reference
/// point: g_m = (r0 / r_m) exp(-i 2 pi f (r_m - r0) / a).
[[nodiscard]] Eigen::VectorXcd transfer_vector(const Vec3& source,
                                               const MicArray& array,
                                               double frequency_hz,
                                               double speed_of_sound);

/// Exact CSM of mutually incoherent monopoles plus diagonal self-noise.
[[nodiscard]] SpectralMatrixSet synthesize_csm(const SceneSpec& scene);

/// Per-source ground-truth PSD in dB, [source][bin].
[[nodiscard]] std::vector<std::vector<double>> ground_truth_db(
    const SceneSpec& scene);

/// Line array with three sources, one of them narrowband. 256 bins of
/// 32 Hz up to 8192 Hz and a 501-point focus line.
[[nodiscard]] SceneSpec case1_scene(std::size_t mic_count = 64);

struct Case2AnalogOptions {
  Spectrum s1 = LinearDbSpectrum{-20.0, 0.0};
  Spectrum s2 = FlatSpectrum{-6.0};
  Spectrum s3 = LinearDbSpectrum{0.0, -20.0};
  std::optional<Spectrum> self_noise = FlatSpectrum{0.0};
  double grid_step = 0.005;
};

/// 7x7 planar array under a 2D focus plane with three broadband sources
/// and microphone self-noise. 128 bins of 512 Hz.
[[nodiscard]] SceneSpec case2_analog_scene(const Case2AnalogOptions& options = {});

}  // namespace bclean
