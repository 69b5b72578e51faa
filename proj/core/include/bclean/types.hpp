#pragma once

#include <Eigen/Core>
#include <complex>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace bclean {

using Vec3 = Eigen::Vector3d;
using Complex = std::complex<double>;

/// Maximum pairwise distance among the given positions; 0 for a single
/// point or for fully coincident sets. Throws DomainError for fewer than
/// two positions.
[[nodiscard]] double aperture(std::span<const Vec3> positions);

/// Microphone positions plus the reference point that steering and
/// transfer vectors are normalised to.
class MicArray {
 public:
  /// Reference point defaults to the centroid.
  explicit MicArray(std::vector<Vec3> positions,
                    std::optional<Vec3> reference_point = std::nullopt);

  /// Equidistant microphones on the segment [start, end].
  static MicArray line(const Vec3& start, const Vec3& end, std::size_t count);
  /// nx * ny rectangular grid in the plane z = center.z(), row-major in y.
  static MicArray rectangular(std::size_t nx, std::size_t ny, double spacing,
                              const Vec3& center);

  [[nodiscard]] std::size_t size() const noexcept { return positions_.size(); }
  [[nodiscard]] const std::vector<Vec3>& positions() const noexcept {
    return positions_;
  }
  [[nodiscard]] const Vec3& reference_point() const noexcept {
    return reference_;
  }
  /// Maximum pairwise distance; DomainError for a single microphone.
  [[nodiscard]] double aperture() const;

 private:
  std::vector<Vec3> positions_;
  Vec3 reference_;
};

struct GridShape {
  std::size_t nx = 0;
  std::size_t ny = 0;
};

/// Ordered focus points. Line and plane grids keep their shape so maps can
/// be exported as images.
class FocusGrid {
 public:
  explicit FocusGrid(std::vector<Vec3> points,
                     std::optional<GridShape> shape = std::nullopt,
                     Vec3 spacing = Vec3::Zero());

  /// Points x_min, x_min + step, ..., x_max at fixed (y, z).
  static FocusGrid line(double x_min, double x_max, double step, double y,
                        double z);
  /// Square-step plane over [x_min, x_max] x [y_min, y_max] at height z.
  /// Points are ordered with x varying fastest.
  static FocusGrid plane(double x_min, double x_max, double y_min,
                         double y_max, double step, double z);

  [[nodiscard]] std::size_t size() const noexcept { return points_.size(); }
  [[nodiscard]] const std::vector<Vec3>& points() const noexcept {
    return points_;
  }
  [[nodiscard]] const Vec3& operator[](std::size_t j) const {
    return points_[j];
  }
  [[nodiscard]] const std::optional<GridShape>& shape() const noexcept {
    return shape_;
  }
  [[nodiscard]] const Vec3& spacing() const noexcept { return spacing_; }

 private:
  std::vector<Vec3> points_;
  std::optional<GridShape> shape_;
  Vec3 spacing_;
};

/// Uniformly spaced, strictly ascending, positive bin centre frequencies.
class FrequencyGrid {
 public:
  FrequencyGrid(std::vector<double> bin_frequencies, double bin_width);

  /// first, first + width, ..., first + (count - 1) * width.
  static FrequencyGrid uniform(double first_hz, double bin_width,
                               std::size_t count);

  [[nodiscard]] std::size_t size() const noexcept { return bins_.size(); }
  [[nodiscard]] double operator[](std::size_t i) const { return bins_[i]; }
  [[nodiscard]] const std::vector<double>& frequencies() const noexcept {
    return bins_;
  }
  [[nodiscard]] double bin_width() const noexcept { return width_; }

 private:
  std::vector<double> bins_;
  double width_;
};

/// One Hermitian cross-spectral matrix per frequency bin.
class SpectralMatrixSet {
 public:
  SpectralMatrixSet() = default;
  SpectralMatrixSet(std::size_t mics, std::size_t bins);
  explicit SpectralMatrixSet(std::vector<Eigen::MatrixXcd> matrices);

  [[nodiscard]] std::size_t mics() const noexcept { return mics_; }
  [[nodiscard]] std::size_t bins() const noexcept { return matrices_.size(); }

  [[nodiscard]] Eigen::MatrixXcd& operator[](std::size_t i) {
    return matrices_[i];
  }
  [[nodiscard]] const Eigen::MatrixXcd& operator[](std::size_t i) const {
    return matrices_[i];
  }

  /// max |C - C^H| / max(|C|, tiny) over all bins.
  [[nodiscard]] double hermitian_defect() const;
  /// Minimum over bins of lambda_min(C_i) / ||C_i||_2 (0 for a zero matrix).
  [[nodiscard]] double min_relative_eigenvalue() const;

  friend bool operator==(const SpectralMatrixSet& a,
                         const SpectralMatrixSet& b);

 private:
  std::size_t mics_ = 0;
  std::vector<Eigen::MatrixXcd> matrices_;
};

/// Relative Hermitian defect of a single matrix.
[[nodiscard]] double hermitian_defect(const Eigen::MatrixXcd& m);

enum class MapRole { dirty, clean };

/// Real power per (bin, focus point). Stored bins x points.
struct PowerMap {
  Eigen::MatrixXd values;
  MapRole role = MapRole::dirty;

  [[nodiscard]] std::size_t bins() const noexcept {
    return static_cast<std::size_t>(values.rows());
  }
  [[nodiscard]] std::size_t points() const noexcept {
    return static_cast<std::size_t>(values.cols());
  }
};

}  // namespace bclean
