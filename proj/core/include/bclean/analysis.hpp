#pragma once

#include <Eigen/Core>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "bclean/synthesis.hpp"
#include "bclean/types.hpp"

namespace bclean {

/// Inclusive x-interval; y and z are ignored (1D focus lines).
struct Segment {
  double x_lo = 0.0;
  double x_hi = 0.0;
};

/// Disc in the x-y plane, boundary inclusive.
struct Circle {
  double cx = 0.0;
  double cy = 0.0;
  double radius = 0.0;
};

/// Simple polygon in the x-y plane; points on an edge are inside.
struct Polygon {
  std::vector<Eigen::Vector2d> vertices;
};

using RoiShape = std::variant<Segment, Circle, Polygon>;

struct RegionOfInterest {
  std::string label;
  RoiShape shape;
  /// Index of the ground-truth source this region integrates, if any.
  std::optional<std::size_t> source;

  [[nodiscard]] bool contains(const Vec3& p) const;
};

/// One region per scene source, linked to it by index: a segment of
/// half-width `extent` on line grids, a circle of radius `extent` otherwise.
[[nodiscard]] std::vector<RegionOfInterest> rois_around_sources(
    const SceneSpec& scene, double extent);

/// Region index per focus point, or -1 for points outside every region.
/// ConfigError if a point falls into two regions.
[[nodiscard]] std::vector<int> assign_points(
    const FocusGrid& grid, const std::vector<RegionOfInterest>& rois);

struct RoiSpectra {
  /// [roi][bin] in dB; kSilentDb for empty sums.
  std::vector<std::vector<double>> roi_db;
  /// [bin] in dB, power outside every region.
  std::vector<double> noise_db;
  /// Linear counterparts of the above.
  std::vector<std::vector<double>> roi_linear;
  std::vector<double> noise_linear;
};

[[nodiscard]] RoiSpectra integrate_rois(const PowerMap& q, const FocusGrid& grid,
                                        const std::vector<RegionOfInterest>& rois);

/// Percentage of ground-truth bins whose estimate is within +-3 dB,
/// averaged over sources. Inputs are [source][bin] in dB, kSilentDb where
/// absent. Silent estimates at defined ground-truth bins count as wrong.
/// DomainError if some source has no defined ground-truth bin.
[[nodiscard]] double correct_psd(const std::vector<std::vector<double>>& psd,
                                 const std::vector<std::vector<double>>& gt);

/// Mean |PSD - GT| over bins where both are defined, averaged over the
/// sources that have such bins. nullopt when no source has one.
[[nodiscard]] std::optional<double> mean_error(
    const std::vector<std::vector<double>>& psd,
    const std::vector<std::vector<double>>& gt);

/// Mean over bins of (loudest source level - noise level), using only bins
/// where both are defined. nullopt when there are none.
[[nodiscard]] std::optional<double> snr_metric(
    const std::vector<std::vector<double>>& psd,
    const std::vector<double>& noise_db);

/// Per-point level of the bin-summed power.
[[nodiscard]] std::vector<double> oaspl_map(const PowerMap& q);

struct MetricsReport {
  std::vector<std::string> roi_labels;
  std::vector<std::vector<double>> roi_db;
  std::vector<double> noise_db;
  double correct_psd_percent = 0.0;
  std::optional<double> mean_error_db;
  std::optional<double> snr_db;
  std::vector<double> oaspl_db;
};

/// Integrates the regions and scores the ones linked to a source against
/// `gt` ([source][bin] dB).
[[nodiscard]] MetricsReport evaluate(const PowerMap& q, const FocusGrid& grid,
                                     const std::vector<RegionOfInterest>& rois,
                                     const std::vector<std::vector<double>>& gt);

}  // namespace bclean
