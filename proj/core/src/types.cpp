#include "bclean/types.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "bclean/errors.hpp"

namespace bclean {
namespace {

bool finite(const Vec3& v) { return v.allFinite(); }

std::size_t steps_between(double lo, double hi, double step) {
  if (!(step > 0.0) || !(hi >= lo)) {
    throw ConfigError("grid: need step > 0 and max >= min");
  }
  return static_cast<std::size_t>(std::llround((hi - lo) / step)) + 1;
}

}  // namespace

double aperture(std::span<const Vec3> positions) {
  if (positions.size() < 2) {
    throw DomainError("aperture: at least two microphones required");
  }
  double best = 0.0;
  for (std::size_t a = 0; a < positions.size(); ++a) {
    for (std::size_t b = a + 1; b < positions.size(); ++b) {
      best = std::max(best, (positions[a] - positions[b]).norm());
    }
  }
  return best;
}

MicArray::MicArray(std::vector<Vec3> positions,
                   std::optional<Vec3> reference_point)
    : positions_(std::move(positions)) {
  if (positions_.empty()) throw ConfigError("mic array: no microphones");
  Vec3 centroid = Vec3::Zero();
  for (const auto& p : positions_) {
    if (!finite(p)) throw ConfigError("mic array: non-finite position");
    centroid += p;
  }
  centroid /= static_cast<double>(positions_.size());
  if (positions_.size() >= 2 && bclean::aperture(positions_) <= 0.0) {
    throw ConfigError("mic array: all microphones coincide (zero aperture)");
  }
  reference_ = reference_point.value_or(centroid);
  if (!finite(reference_)) {
    throw ConfigError("mic array: non-finite reference point");
  }
}

MicArray MicArray::line(const Vec3& start, const Vec3& end,
                        std::size_t count) {
  if (count == 0) throw ConfigError("mic array: count must be >= 1");
  std::vector<Vec3> pos;
  pos.reserve(count);
  for (std::size_t m = 0; m < count; ++m) {
    const double t =
        count == 1 ? 0.5 : static_cast<double>(m) / static_cast<double>(count - 1);
    pos.emplace_back(start + t * (end - start));
  }
  return MicArray(std::move(pos));
}

MicArray MicArray::rectangular(std::size_t nx, std::size_t ny, double spacing,
                               const Vec3& center) {
  if (nx == 0 || ny == 0 || !(spacing > 0.0)) {
    throw ConfigError("mic array: rectangular grid needs nx, ny >= 1 and "
                      "spacing > 0");
  }
  std::vector<Vec3> pos;
  pos.reserve(nx * ny);
  const double x0 = center.x() - 0.5 * spacing * static_cast<double>(nx - 1);
  const double y0 = center.y() - 0.5 * spacing * static_cast<double>(ny - 1);
  for (std::size_t iy = 0; iy < ny; ++iy) {
    for (std::size_t ix = 0; ix < nx; ++ix) {
      pos.emplace_back(x0 + spacing * static_cast<double>(ix),
                       y0 + spacing * static_cast<double>(iy), center.z());
    }
  }
  return MicArray(std::move(pos));
}

double MicArray::aperture() const { return bclean::aperture(positions_); }

FocusGrid::FocusGrid(std::vector<Vec3> points, std::optional<GridShape> shape,
                     Vec3 spacing)
    : points_(std::move(points)), shape_(shape), spacing_(spacing) {
  if (points_.empty()) throw ConfigError("focus grid: no points");
  for (const auto& p : points_) {
    if (!finite(p)) throw ConfigError("focus grid: non-finite point");
  }
  if (shape_ && shape_->nx * shape_->ny != points_.size()) {
    throw ConfigError("focus grid: shape does not match point count");
  }
}

FocusGrid FocusGrid::line(double x_min, double x_max, double step, double y,
                          double z) {
  const std::size_t n = steps_between(x_min, x_max, step);
  std::vector<Vec3> pts;
  pts.reserve(n);
  for (std::size_t j = 0; j < n; ++j) {
    pts.emplace_back(x_min + step * static_cast<double>(j), y, z);
  }
  return FocusGrid(std::move(pts), GridShape{n, 1}, Vec3(step, 0.0, 0.0));
}

FocusGrid FocusGrid::plane(double x_min, double x_max, double y_min,
                           double y_max, double step, double z) {
  const std::size_t nx = steps_between(x_min, x_max, step);
  const std::size_t ny = steps_between(y_min, y_max, step);
  std::vector<Vec3> pts;
  pts.reserve(nx * ny);
  for (std::size_t iy = 0; iy < ny; ++iy) {
    for (std::size_t ix = 0; ix < nx; ++ix) {
      pts.emplace_back(x_min + step * static_cast<double>(ix),
                       y_min + step * static_cast<double>(iy), z);
    }
  }
  return FocusGrid(std::move(pts), GridShape{nx, ny}, Vec3(step, step, 0.0));
}

FrequencyGrid::FrequencyGrid(std::vector<double> bin_frequencies,
                             double bin_width)
    : bins_(std::move(bin_frequencies)), width_(bin_width) {
  if (bins_.empty()) throw ConfigError("frequency grid: no bins");
  if (!(width_ > 0.0)) throw ConfigError("frequency grid: bin width <= 0");
  for (std::size_t i = 0; i < bins_.size(); ++i) {
    if (!(bins_[i] > 0.0) || !std::isfinite(bins_[i])) {
      throw ConfigError("frequency grid: bin frequencies must be positive");
    }
    if (i > 0) {
      const double step = bins_[i] - bins_[i - 1];
      if (!(step > 0.0) || std::abs(step - width_) > 1e-9 * width_) {
        throw ConfigError("frequency grid: bins are not uniformly spaced by "
                          "the bin width at index " + std::to_string(i));
      }
    }
  }
}

FrequencyGrid FrequencyGrid::uniform(double first_hz, double bin_width,
                                     std::size_t count) {
  std::vector<double> f(count);
  for (std::size_t i = 0; i < count; ++i) {
    f[i] = first_hz + bin_width * static_cast<double>(i);
  }
  return FrequencyGrid(std::move(f), bin_width);
}

SpectralMatrixSet::SpectralMatrixSet(std::size_t mics, std::size_t bins)
    : mics_(mics),
      matrices_(bins, Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(mics),
                                             static_cast<Eigen::Index>(mics))) {}

SpectralMatrixSet::SpectralMatrixSet(std::vector<Eigen::MatrixXcd> matrices)
    : matrices_(std::move(matrices)) {
  if (matrices_.empty()) return;
  mics_ = static_cast<std::size_t>(matrices_.front().rows());
  for (const auto& c : matrices_) {
    if (static_cast<std::size_t>(c.rows()) != mics_ ||
        static_cast<std::size_t>(c.cols()) != mics_) {
      throw DimensionError("spectral matrix set: all bins must be M x M");
    }
  }
}

double hermitian_defect(const Eigen::MatrixXcd& m) {
  const double scale = m.cwiseAbs().maxCoeff();
  if (scale == 0.0) return 0.0;
  return (m - m.adjoint()).cwiseAbs().maxCoeff() / scale;
}

double SpectralMatrixSet::hermitian_defect() const {
  double worst = 0.0;
  for (const auto& c : matrices_) worst = std::max(worst, bclean::hermitian_defect(c));
  return worst;
}

double SpectralMatrixSet::min_relative_eigenvalue() const {
  double worst = std::numeric_limits<double>::infinity();
  for (const auto& c : matrices_) {
    const Eigen::MatrixXcd herm = 0.5 * (c + c.adjoint());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(herm,
                                                       Eigen::EigenvaluesOnly);
    const auto& ev = es.eigenvalues();
    const double norm = std::max(std::abs(ev.minCoeff()), std::abs(ev.maxCoeff()));
    worst = std::min(worst, norm == 0.0 ? 0.0 : ev.minCoeff() / norm);
  }
  return matrices_.empty() ? 0.0 : worst;
}

bool operator==(const SpectralMatrixSet& a, const SpectralMatrixSet& b) {
  if (a.mics_ != b.mics_ || a.matrices_.size() != b.matrices_.size()) {
    return false;
  }
  for (std::size_t i = 0; i < a.matrices_.size(); ++i) {
    if (a.matrices_[i] != b.matrices_[i]) return false;
  }
  return true;
}

}  // namespace bclean
