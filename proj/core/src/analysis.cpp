#include "bclean/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "bclean/errors.hpp"
#include "bclean/units.hpp"

namespace bclean {
namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

// Estimates exactly on the +-3 dB boundary must count as correct even after
// dB round-off.
constexpr double kMarginDb = 3.0;
constexpr double kMarginSlackDb = 1e-9;

bool on_segment(const Eigen::Vector2d& p, const Eigen::Vector2d& a,
                const Eigen::Vector2d& b) {
  const Eigen::Vector2d ab = b - a;
  const Eigen::Vector2d ap = p - a;
  const double cross = ab.x() * ap.y() - ab.y() * ap.x();
  const double scale = std::max(ab.norm(), 1e-300);
  if (std::abs(cross) / scale > 1e-12) return false;
  const double t = ap.dot(ab);
  return t >= -1e-12 && t <= ab.squaredNorm() + 1e-12;
}

bool in_polygon(const Polygon& poly, const Eigen::Vector2d& p) {
  const auto& v = poly.vertices;
  if (v.size() < 3) return false;
  bool inside = false;
  for (std::size_t a = 0, b = v.size() - 1; a < v.size(); b = a++) {
    if (on_segment(p, v[b], v[a])) return true;
    const bool crosses = (v[a].y() > p.y()) != (v[b].y() > p.y());
    if (crosses) {
      const double x = v[a].x() + (p.y() - v[a].y()) * (v[b].x() - v[a].x()) /
                                      (v[b].y() - v[a].y());
      if (p.x() < x) inside = !inside;
    }
  }
  return inside;
}

void check_same_shape(const std::vector<std::vector<double>>& psd,
                      const std::vector<std::vector<double>>& gt,
                      const char* what) {
  if (psd.size() != gt.size()) {
    throw DimensionError(std::string(what) + ": estimate and ground truth "
                                             "have different source counts");
  }
  for (std::size_t s = 0; s < psd.size(); ++s) {
    if (psd[s].size() != gt[s].size()) {
      throw DimensionError(std::string(what) + ": source " +
                           std::to_string(s) + " has mismatched bin counts");
    }
  }
}

}  // namespace

bool RegionOfInterest::contains(const Vec3& p) const {
  return std::visit(
      overloaded{
          [&](const Segment& s) { return p.x() >= s.x_lo && p.x() <= s.x_hi; },
          [&](const Circle& c) {
            const double dx = p.x() - c.cx;
            const double dy = p.y() - c.cy;
            return dx * dx + dy * dy <= c.radius * c.radius;
          },
          [&](const Polygon& poly) {
            return in_polygon(poly, Eigen::Vector2d(p.x(), p.y()));
          }},
      shape);
}

std::vector<RegionOfInterest> rois_around_sources(const SceneSpec& scene,
                                                  double extent) {
  if (!(extent > 0.0)) throw ConfigError("ROI extent must be positive");
  const bool line = scene.grid.shape() && scene.grid.shape()->ny == 1;
  std::vector<RegionOfInterest> rois;
  for (std::size_t s = 0; s < scene.sources.size(); ++s) {
    const auto& src = scene.sources[s];
    RoiShape shape = line ? RoiShape{Segment{src.position.x() - extent,
                                             src.position.x() + extent}}
                          : RoiShape{Circle{src.position.x(), src.position.y(),
                                            extent}};
    rois.push_back({src.label, std::move(shape), s});
  }
  return rois;
}

std::vector<int> assign_points(const FocusGrid& grid,
                               const std::vector<RegionOfInterest>& rois) {
  std::vector<int> owner(grid.size(), -1);
  for (std::size_t j = 0; j < grid.size(); ++j) {
    for (std::size_t r = 0; r < rois.size(); ++r) {
      if (!rois[r].contains(grid[j])) continue;
      if (owner[j] >= 0) {
        throw ConfigError("ROIs '" + rois[static_cast<std::size_t>(owner[j])].label +
                          "' and '" + rois[r].label + "' overlap at focus point " +
                          std::to_string(j));
      }
      owner[j] = static_cast<int>(r);
    }
  }
  return owner;
}

RoiSpectra integrate_rois(const PowerMap& q, const FocusGrid& grid,
                          const std::vector<RegionOfInterest>& rois) {
  if (q.points() != grid.size()) {
    throw DimensionError("integrate_rois: map has " + std::to_string(q.points()) +
                         " points, grid has " + std::to_string(grid.size()));
  }
  const std::vector<int> owner = assign_points(grid, rois);
  const std::size_t bins = q.bins();
  RoiSpectra out;
  out.roi_linear.assign(rois.size(), std::vector<double>(bins, 0.0));
  out.noise_linear.assign(bins, 0.0);
  for (std::size_t i = 0; i < bins; ++i) {
    for (std::size_t j = 0; j < grid.size(); ++j) {
      const double v = q.values(static_cast<Eigen::Index>(i),
                                static_cast<Eigen::Index>(j));
      if (v == 0.0) continue;
      if (owner[j] >= 0) {
        out.roi_linear[static_cast<std::size_t>(owner[j])][i] += v;
      } else {
        out.noise_linear[i] += v;
      }
    }
  }
  out.roi_db.resize(rois.size());
  for (std::size_t r = 0; r < rois.size(); ++r) {
    out.roi_db[r].resize(bins);
    std::transform(out.roi_linear[r].begin(), out.roi_linear[r].end(),
                   out.roi_db[r].begin(), [](double p) { return to_db(p); });
  }
  out.noise_db.resize(bins);
  std::transform(out.noise_linear.begin(), out.noise_linear.end(),
                 out.noise_db.begin(), [](double p) { return to_db(p); });
  return out;
}

double correct_psd(const std::vector<std::vector<double>>& psd,
                   const std::vector<std::vector<double>>& gt) {
  check_same_shape(psd, gt, "correct_psd");
  if (gt.empty()) throw DomainError("correct_psd: no sources");
  double sum = 0.0;
  for (std::size_t s = 0; s < gt.size(); ++s) {
    std::size_t defined = 0;
    std::size_t correct = 0;
    for (std::size_t i = 0; i < gt[s].size(); ++i) {
      if (is_silent(gt[s][i])) continue;
      ++defined;
      if (is_silent(psd[s][i])) continue;
      if (std::abs(psd[s][i] - gt[s][i]) <= kMarginDb + kMarginSlackDb) ++correct;
    }
    if (defined == 0) {
      throw DomainError("correct_psd: source " + std::to_string(s) +
                        " has no bins with defined ground truth");
    }
    sum += static_cast<double>(correct) / static_cast<double>(defined);
  }
  return 100.0 * sum / static_cast<double>(gt.size());
}

std::optional<double> mean_error(const std::vector<std::vector<double>>& psd,
                                 const std::vector<std::vector<double>>& gt) {
  check_same_shape(psd, gt, "mean_error");
  double sum = 0.0;
  std::size_t sources = 0;
  for (std::size_t s = 0; s < gt.size(); ++s) {
    double err = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < gt[s].size(); ++i) {
      if (is_silent(psd[s][i]) || is_silent(gt[s][i])) continue;
      err += std::abs(psd[s][i] - gt[s][i]);
      ++n;
    }
    if (n == 0) continue;
    sum += err / static_cast<double>(n);
    ++sources;
  }
  if (sources == 0) return std::nullopt;
  return sum / static_cast<double>(sources);
}

std::optional<double> snr_metric(const std::vector<std::vector<double>>& psd,
                                 const std::vector<double>& noise_db) {
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < noise_db.size(); ++i) {
    if (is_silent(noise_db[i])) continue;
    double loudest = kSilentDb;
    for (const auto& source : psd) {
      if (i >= source.size()) {
        throw DimensionError("snr_metric: source spectrum shorter than noise");
      }
      loudest = std::max(loudest, source[i]);
    }
    if (is_silent(loudest)) continue;
    sum += loudest - noise_db[i];
    ++n;
  }
  if (n == 0) return std::nullopt;
  return sum / static_cast<double>(n);
}

std::vector<double> oaspl_map(const PowerMap& q) {
  std::vector<double> out(q.points());
  for (std::size_t j = 0; j < out.size(); ++j) {
    out[j] = to_db(q.values.col(static_cast<Eigen::Index>(j)).sum());
  }
  return out;
}

MetricsReport evaluate(const PowerMap& q, const FocusGrid& grid,
                       const std::vector<RegionOfInterest>& rois,
                       const std::vector<std::vector<double>>& gt) {
  const RoiSpectra spectra = integrate_rois(q, grid, rois);
  MetricsReport report;
  for (const auto& roi : rois) report.roi_labels.push_back(roi.label);
  report.roi_db = spectra.roi_db;
  report.noise_db = spectra.noise_db;
  report.oaspl_db = oaspl_map(q);

  std::vector<std::vector<double>> est;
  std::vector<std::vector<double>> truth;
  for (std::size_t r = 0; r < rois.size(); ++r) {
    if (!rois[r].source) continue;
    const std::size_t s = *rois[r].source;
    if (s >= gt.size()) {
      throw ConfigError("ROI '" + rois[r].label + "' refers to unknown source " +
                        std::to_string(s));
    }
    est.push_back(spectra.roi_db[r]);
    truth.push_back(gt[s]);
  }
  if (est.empty()) throw ConfigError("evaluate: no ROI is linked to a source");
  report.correct_psd_percent = correct_psd(est, truth);
  report.mean_error_db = mean_error(est, truth);
  report.snr_db = snr_metric(est, spectra.noise_db);
  return report;
}

}  // namespace bclean
