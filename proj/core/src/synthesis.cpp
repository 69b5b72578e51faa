#include "bclean/synthesis.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "bclean/errors.hpp"

namespace bclean {
namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void validate_spectrum(const Spectrum& s, const FrequencyGrid& freqs,
                       const std::string& what) {
  if (const auto* band = std::get_if<BandSpectrum>(&s)) {
    const double lo = freqs.frequencies().front();
    const double hi = freqs.frequencies().back();
    if (!(band->f_lo <= band->f_hi) || band->f_lo < lo || band->f_hi > hi) {
      throw ConfigError(what + ": band limits must lie inside the frequency "
                               "grid");
    }
  }
}

}  // namespace

double spectrum_level_db(const Spectrum& spectrum, const FrequencyGrid& freqs,
                         std::size_t i) {
  return std::visit(
      overloaded{
          [](const FlatSpectrum& s) { return s.level_db; },
          [&](const LinearDbSpectrum& s) {
            if (freqs.size() < 2) return s.start_db;
            const double t = static_cast<double>(i) /
                             static_cast<double>(freqs.size() - 1);
            return s.start_db + (s.end_db - s.start_db) * t;
          },
          [&](const BandSpectrum& s) {
            const double f = freqs[i];
            return (f >= s.f_lo && f <= s.f_hi) ? s.level_db : kSilentDb;
          }},
      spectrum);
}

void validate(const SceneSpec& scene) {
  for (std::size_t s = 0; s < scene.sources.size(); ++s) {
    const auto& src = scene.sources[s];
    const std::string what = "source " + (src.label.empty() ? std::to_string(s)
                                                            : src.label);
    if (!src.position.allFinite()) {
      throw ConfigError(what + ": non-finite position");
    }
    validate_spectrum(src.spectrum, scene.freqs, what);
  }
  if (scene.mic_self_noise) {
    validate_spectrum(*scene.mic_self_noise, scene.freqs, "self noise");
  }
  if (!(scene.speed_of_sound > 0.0)) {
    throw ConfigError("speed of sound must be positive");
  }
}

Eigen::VectorXcd transfer_vector(const Vec3& source, const MicArray& array,
                                 double frequency_hz, double speed_of_sound) {
  const double r0 = (source - array.reference_point()).norm();
  if (r0 == 0.0) {
    throw SingularityError("transfer vector: source at the reference point");
  }
  const double k = 2.0 * std::numbers::pi * frequency_hz / speed_of_sound;
  const auto& mics = array.positions();
  Eigen::VectorXcd g(static_cast<Eigen::Index>(mics.size()));
  for (std::size_t m = 0; m < mics.size(); ++m) {
    const double rm = (source - mics[m]).norm();
    if (rm == 0.0) {
      throw SingularityError("transfer vector: source coincides with "
                             "microphone " + std::to_string(m));
    }
    g[static_cast<Eigen::Index>(m)] = std::polar(r0 / rm, -k * (rm - r0));
  }
  return g;
}

SpectralMatrixSet synthesize_csm(const SceneSpec& scene) {
  validate(scene);
  const auto n_mics = static_cast<Eigen::Index>(scene.array.size());
  SpectralMatrixSet csm(scene.array.size(), scene.freqs.size());
  for (std::size_t i = 0; i < scene.freqs.size(); ++i) {
    Eigen::MatrixXcd& c = csm[i];
    for (const auto& src : scene.sources) {
      const double q = from_db(spectrum_level_db(src.spectrum, scene.freqs, i));
      if (q == 0.0) continue;
      const Eigen::VectorXcd g = transfer_vector(
          src.position, scene.array, scene.freqs[i], scene.speed_of_sound);
      // Elementwise outer product keeps C exactly Hermitian.
      for (Eigen::Index n = 0; n < n_mics; ++n) {
        for (Eigen::Index m = 0; m < n_mics; ++m) {
          c(m, n) += q * (g[m] * std::conj(g[n]));
        }
      }
    }
    if (scene.mic_self_noise) {
      const double sigma2 =
          from_db(spectrum_level_db(*scene.mic_self_noise, scene.freqs, i));
      c.diagonal().array() += Complex(sigma2, 0.0);
    }
  }
  return csm;
}

std::vector<std::vector<double>> ground_truth_db(const SceneSpec& scene) {
  std::vector<std::vector<double>> gt;
  gt.reserve(scene.sources.size());
  for (const auto& src : scene.sources) {
    std::vector<double> levels(scene.freqs.size());
    for (std::size_t i = 0; i < levels.size(); ++i) {
      levels[i] = spectrum_level_db(src.spectrum, scene.freqs, i);
    }
    gt.push_back(std::move(levels));
  }
  return gt;
}

SceneSpec case1_scene(std::size_t mic_count) {
  SceneSpec scene{
      .array = MicArray::line(Vec3(-0.5, 0.0, 0.0), Vec3(0.5, 0.0, 0.0),
                              mic_count),
      .grid = FocusGrid::line(-1.0, 1.0, 0.004, 0.5, 0.0),
      .freqs = FrequencyGrid::uniform(32.0, 32.0, 256),
      .sources =
          {
              {"S1", Vec3(0.0, 0.5, 0.0), LinearDbSpectrum{-10.0, 0.0}},
              {"S2", Vec3(0.1, 0.5, 0.0), LinearDbSpectrum{0.0, -10.0}},
              {"S3", Vec3(0.5, 0.5, 0.0), BandSpectrum{3616.0, 3840.0, -10.0}},
          },
      .mic_self_noise = std::nullopt,
      .speed_of_sound = kDefaultSpeedOfSound,
  };
  return scene;
}

SceneSpec case2_analog_scene(const Case2AnalogOptions& options) {
  SceneSpec scene{
      .array = MicArray::rectangular(7, 7, 0.09, Vec3(0.0, 0.0, -0.65)),
      .grid = FocusGrid::plane(-0.3, 0.3, -0.3, 0.3, options.grid_step, 0.0),
      .freqs = FrequencyGrid::uniform(512.0, 512.0, 128),
      .sources =
          {
              {"S1", Vec3(-0.05, 0.1, 0.0), options.s1},
              {"S2", Vec3(0.1, 0.1, 0.0), options.s2},
              {"S3", Vec3(0.25, 0.1, 0.0), options.s3},
          },
      .mic_self_noise = options.self_noise,
      .speed_of_sound = kDefaultSpeedOfSound,
  };
  return scene;
}

}  // namespace bclean
