#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>
#include <cmath>
#include <random>

#include "bclean/errors.hpp"
#include "bclean/synthesis.hpp"
#include "oracles.hpp"

using namespace bclean;

namespace {

int numeric_rank(const Eigen::MatrixXcd& c, double rel_tol = 1e-9) {
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(c);
  const auto ev = es.eigenvalues();
  const double top = ev.cwiseAbs().maxCoeff();
  int rank = 0;
  for (Eigen::Index k = 0; k < ev.size(); ++k) {
    if (ev[k] > rel_tol * top) ++rank;
  }
  return rank;
}

SceneSpec small_scene(std::vector<SourceSpec> sources) {
  return SceneSpec{MicArray::line({-0.5, 0, 0}, {0.5, 0, 0}, 8),
                   FocusGrid::line(-1.0, 1.0, 0.1, 0.5, 0.0),
                   FrequencyGrid::uniform(500.0, 500.0, 6),
                   std::move(sources),
                   std::nullopt,
                   kDefaultSpeedOfSound};
}

}  // namespace

TEST(TransferVector, MicAtReferenceDistanceIsUnity) {
  const MicArray array({{1, 0, 0}}, Vec3(-1, 0, 0));
  const auto g = transfer_vector({0, 0, 0}, array, 1234.0, 343.0);
  EXPECT_NEAR(std::abs(g[0] - Complex(1, 0)), 0.0, 1e-15);
}

TEST(TransferVector, SymmetricMicsHaveEqualMagnitude) {
  const MicArray array({{-0.3, 0, 0}, {0.3, 0, 0}});
  const auto g = transfer_vector({0, 0.5, 0}, array, 2000.0, 343.0);
  EXPECT_DOUBLE_EQ(std::abs(g[0]), std::abs(g[1]));
}

TEST(TransferVector, HandGeometryOfLineScene) {
  const auto scene = case1_scene();
  const auto g = transfer_vector({0, 0.5, 0}, scene.array, 1000.0, 343.0);
  const double rm = std::sqrt(0.25 + 0.25);
  EXPECT_NEAR(std::abs(g[63]), 0.5 / rm, 1e-12);
  EXPECT_NEAR(rm, 0.70710678118654757, 1e-15);
}

TEST(TransferVector, MatchesLiteralFormula) {
  const auto scene = case1_scene(16);
  const Vec3 src(0.1, 0.5, 0.0);
  const auto g = transfer_vector(src, scene.array, 3000.0, 343.0);
  const auto ref = oracle::transfer(scene.array.positions(), scene.array.reference_point(),
                                    src, 3000.0, 343.0);
  for (std::size_t m = 0; m < ref.size(); ++m) {
    EXPECT_NEAR(std::abs(g[static_cast<Eigen::Index>(m)] - ref[m]), 0.0, 1e-12);
  }
}

TEST(TransferVector, SingularPositions) {
  const MicArray array({{-0.5, 0, 0}, {0.5, 0, 0}});
  EXPECT_THROW((void)transfer_vector({0, 0, 0}, array, 100.0, 343.0), SingularityError);
  EXPECT_THROW((void)transfer_vector({0.5, 0, 0}, array, 100.0, 343.0), SingularityError);
}

TEST(SynthesizeCsm, SingleSourceIsRankOne) {
  const auto scene = small_scene({{"a", {0.2, 0.5, 0}, FlatSpectrum{0.0}}});
  const auto csm = synthesize_csm(scene);
  for (std::size_t i = 0; i < csm.bins(); ++i) EXPECT_EQ(numeric_rank(csm[i]), 1);
}

TEST(SynthesizeCsm, NoiseOnlyIsIdentity) {
  auto scene = small_scene({});
  scene.mic_self_noise = FlatSpectrum{0.0};
  const auto csm = synthesize_csm(scene);
  for (std::size_t i = 0; i < csm.bins(); ++i) {
    EXPECT_EQ(csm[i], Eigen::MatrixXcd::Identity(8, 8));
  }
}

TEST(SynthesizeCsm, NarrowbandSourceRaisesRank) {
  const auto scene = case1_scene();
  const auto csm = synthesize_csm(scene);
  const std::size_t in_band = 3648 / 32 - 1;
  ASSERT_EQ(scene.freqs[in_band], 3648.0);
  EXPECT_EQ(numeric_rank(csm[in_band]), 3);
  EXPECT_EQ(numeric_rank(csm[in_band - 10]), 2);
}

TEST(SynthesizeCsm, ExactlyHermitianAndPositiveSemidefinite) {
  for (const auto& scene : {case1_scene(16), case1_scene(64)}) {
    const auto csm = synthesize_csm(scene);
    EXPECT_EQ(csm.hermitian_defect(), 0.0);
    EXPECT_GE(csm.min_relative_eigenvalue(), -1e-9);
  }
}

TEST(SynthesizeCsm, SuperpositionOfIncoherentSources) {
  const SourceSpec a{"a", {-0.2, 0.5, 0}, LinearDbSpectrum{-3.0, 2.0}};
  const SourceSpec b{"b", {0.4, 0.6, 0.1}, FlatSpectrum{-7.0}};
  const auto ca = synthesize_csm(small_scene({a}));
  const auto cb = synthesize_csm(small_scene({b}));
  const auto cab = synthesize_csm(small_scene({a, b}));
  for (std::size_t i = 0; i < cab.bins(); ++i) {
    const Eigen::MatrixXcd diff = cab[i] - ca[i] - cb[i];
    EXPECT_LE(oracle::max_abs(diff), 1e-12 * oracle::max_abs(cab[i]));
  }
}

TEST(SynthesizeCsm, LevelScalesLinearly) {
  const auto c0 = synthesize_csm(small_scene({{"a", {0.1, 0.5, 0}, FlatSpectrum{0.0}}}));
  const auto c10 = synthesize_csm(small_scene({{"a", {0.1, 0.5, 0}, FlatSpectrum{10.0}}}));
  for (std::size_t i = 0; i < c0.bins(); ++i) {
    const Eigen::MatrixXcd diff = c10[i] - 10.0 * c0[i];
    EXPECT_LE(oracle::max_abs(diff), 1e-12 * oracle::max_abs(c10[i]));
  }
}

TEST(SynthesizeCsm, ReferencePointPowerEqualsSourceLevel) {
  // A microphone at the reference distance receives exactly the source PSD.
  SceneSpec scene = small_scene({{"a", {0.0, 0.5, 0}, FlatSpectrum{-6.0}}});
  const auto csm = synthesize_csm(scene);
  const Vec3 ref = scene.array.reference_point();
  for (std::size_t m = 0; m < scene.array.size(); ++m) {
    const double r0 = (Vec3(0, 0.5, 0) - ref).norm();
    const double rm = (Vec3(0, 0.5, 0) - scene.array.positions()[m]).norm();
    const auto mm = static_cast<Eigen::Index>(m);
    EXPECT_NEAR(csm[0](mm, mm).real(), from_db(-6.0) * (r0 / rm) * (r0 / rm), 1e-14);
  }
}

TEST(SynthesizeCsm, BandLimitsOutsideGridAreRejected) {
  EXPECT_THROW((void)synthesize_csm(small_scene({{"a", {0, 0.5, 0}, BandSpectrum{100.0, 900.0, 0.0}}})),
               ConfigError);
  EXPECT_THROW((void)synthesize_csm(small_scene({{"a", {0, NAN, 0}, FlatSpectrum{}}})), ConfigError);
}

TEST(Spectrum, LinearInterpolatesOverBinIndex) {
  const auto f = FrequencyGrid::uniform(32.0, 32.0, 256);
  const LinearDbSpectrum s{0.0, -10.0};
  EXPECT_EQ(spectrum_level_db(s, f, 0), 0.0);
  EXPECT_EQ(spectrum_level_db(s, f, 255), -10.0);
  EXPECT_NEAR(spectrum_level_db(s, f, 51), -2.0, 1e-12);
}

TEST(Spectrum, BandIsSilentOutside) {
  const auto f = FrequencyGrid::uniform(32.0, 32.0, 256);
  const BandSpectrum s{3616.0, 3840.0, -10.0};
  EXPECT_TRUE(is_silent(spectrum_level_db(s, f, 3584 / 32 - 1)));
  EXPECT_EQ(spectrum_level_db(s, f, 3616 / 32 - 1), -10.0);
  EXPECT_EQ(spectrum_level_db(s, f, 3840 / 32 - 1), -10.0);
  EXPECT_TRUE(is_silent(spectrum_level_db(s, f, 3872 / 32 - 1)));
}

TEST(Presets, LineScene) {
  const auto scene = case1_scene();
  EXPECT_EQ(scene.grid.size(), 501u);
  EXPECT_EQ(scene.freqs.size(), 256u);
  for (std::size_t i = 0; i < 256; ++i) {
    EXPECT_EQ(scene.freqs[i], 32.0 * static_cast<double>(i + 1));
  }
  const auto gt = ground_truth_db(scene);
  ASSERT_EQ(gt.size(), 3u);
  EXPECT_EQ(gt[1].front(), 0.0);
  EXPECT_EQ(gt[1].back(), -10.0);
  EXPECT_EQ(gt[0].front(), -10.0);
  EXPECT_EQ(gt[0].back(), 0.0);
  EXPECT_EQ(scene.array.aperture(), 1.0);
}

TEST(Presets, PlaneScene) {
  const auto scene = case2_analog_scene();
  EXPECT_EQ(scene.array.size(), 49u);
  EXPECT_EQ(scene.grid.size(), 121u * 121u);
  EXPECT_EQ(scene.freqs.size(), 128u);
  EXPECT_EQ(scene.freqs.frequencies().back(), 65536.0);
  EXPECT_TRUE(scene.mic_self_noise.has_value());
}

TEST(Presets, SourcesLieOnTheirGrids) {
  for (const auto& scene : {case1_scene(), case2_analog_scene()}) {
    for (const auto& src : scene.sources) {
      double best = INFINITY;
      for (const auto& p : scene.grid.points()) best = std::min(best, (p - src.position).norm());
      EXPECT_LT(best, 1e-12) << src.label;
    }
  }
}
