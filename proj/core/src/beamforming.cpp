#include "bclean/beamforming.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "bclean/errors.hpp"

namespace bclean {

SteeringSet::SteeringSet(const MicArray& array, const FocusGrid& grid,
                         const FrequencyGrid& freqs, double speed_of_sound)
    : freqs_(freqs), speed_of_sound_(speed_of_sound) {
  if (!(speed_of_sound > 0.0)) {
    throw DomainError("steering: speed of sound must be positive");
  }
  const auto n_mics = static_cast<Eigen::Index>(array.size());
  const auto n_points = static_cast<Eigen::Index>(grid.size());
  magnitude_.resize(n_mics, n_points);
  path_difference_.resize(n_mics, n_points);

  Eigen::VectorXd r(n_mics);
  for (Eigen::Index j = 0; j < n_points; ++j) {
    const Vec3& x = grid[static_cast<std::size_t>(j)];
    const double r0 = (x - array.reference_point()).norm();
    if (r0 == 0.0) {
      throw SingularityError("steering: focus point " + std::to_string(j) +
                             " is the array reference point");
    }
    double inv_sq_sum = 0.0;
    for (Eigen::Index m = 0; m < n_mics; ++m) {
      r[m] = (x - array.positions()[static_cast<std::size_t>(m)]).norm();
      if (r[m] == 0.0) {
        throw SingularityError("steering: focus point " + std::to_string(j) +
                               " coincides with microphone " +
                               std::to_string(m));
      }
      inv_sq_sum += 1.0 / (r[m] * r[m]);
    }
    for (Eigen::Index m = 0; m < n_mics; ++m) {
      magnitude_(m, j) = 1.0 / (r[m] * r0 * inv_sq_sum);
      path_difference_(m, j) = r[m] - r0;
    }
  }
  squared_magnitude_ = magnitude_.array().square().matrix();
}

Eigen::MatrixXcd SteeringSet::weights(std::size_t bin) const {
  const double k = 2.0 * std::numbers::pi * freqs_[bin] / speed_of_sound_;
  Eigen::MatrixXcd w(magnitude_.rows(), magnitude_.cols());
  for (Eigen::Index j = 0; j < w.cols(); ++j) {
    for (Eigen::Index m = 0; m < w.rows(); ++m) {
      w(m, j) = std::polar(magnitude_(m, j), -k * path_difference_(m, j));
    }
  }
  return w;
}

Eigen::VectorXcd SteeringSet::weight(std::size_t bin, std::size_t point) const {
  const double k = 2.0 * std::numbers::pi * freqs_[bin] / speed_of_sound_;
  const auto j = static_cast<Eigen::Index>(point);
  Eigen::VectorXcd w(magnitude_.rows());
  for (Eigen::Index m = 0; m < w.size(); ++m) {
    w[m] = std::polar(magnitude_(m, j), -k * path_difference_(m, j));
  }
  return w;
}

Eigen::VectorXd dirty_map_bin(const Eigen::MatrixXcd& csm,
                              const Eigen::MatrixXcd& weights,
                              bool diag_removal) {
  if (csm.rows() != weights.rows() || csm.cols() != csm.rows()) {
    throw DimensionError("dirty map: CSM is " + std::to_string(csm.rows()) +
                         "x" + std::to_string(csm.cols()) +
                         " but steering vectors have " +
                         std::to_string(weights.rows()) + " entries");
  }
  Eigen::MatrixXcd c = csm;
  if (diag_removal) c.diagonal().setZero();
  const Eigen::MatrixXcd cw = c * weights;
  // Re(w^H C w) column by column: sum_m Re(conj(w_m) (Cw)_m).
  return (weights.conjugate().cwiseProduct(cw)).real().colwise().sum().transpose();
}

PowerMap dirty_map(const SpectralMatrixSet& csm, const SteeringSet& steering,
                   bool diag_removal) {
  if (csm.bins() != steering.bins() || csm.mics() != steering.mics()) {
    throw DimensionError("dirty map: CSM set and steering set disagree on "
                         "bins or microphones");
  }
  PowerMap map{Eigen::MatrixXd(static_cast<Eigen::Index>(csm.bins()),
                               static_cast<Eigen::Index>(steering.points())),
               MapRole::dirty};
  for (std::size_t i = 0; i < csm.bins(); ++i) {
    map.values.row(static_cast<Eigen::Index>(i)) =
        dirty_map_bin(csm[i], steering.weights(i), diag_removal).transpose();
  }
  return map;
}

double steered_coherence(const Eigen::MatrixXcd& csm,
                         const Eigen::VectorXcd& w_j,
                         const Eigen::VectorXcd& w_k) {
  if (csm.rows() != w_j.size() || csm.rows() != w_k.size()) {
    throw DimensionError("coherence: steering vector length mismatch");
  }
  const double a_jj = w_j.dot(csm * w_j).real();
  const double a_kk = w_k.dot(csm * w_k).real();
  if (!(a_jj > 0.0) || !(a_kk > 0.0)) {
    throw DomainError("coherence: autopower must be positive");
  }
  const Complex a_jk = w_j.dot(csm * w_k);
  return std::norm(a_jk) / (a_jj * a_kk);
}

}  // namespace bclean
