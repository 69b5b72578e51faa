#pragma once

#include <Eigen/Core>
#include <cstddef>

#include "bclean/types.hpp"
#include "bclean/units.hpp"

namespace bclean {

enum class SteeringFormulation { III };

/// Formulation-III steering vectors for every (bin, focus point).
///
/// Only the frequency-independent geometry is stored (an M x J magnitude
/// table and an M x J table of path differences r_jm - r_j0); the complex
/// weights of a bin are generated on request by weights(). Generation is a
/// pure function of the stored tables, so two calls for the same bin return
/// bitwise-identical matrices and callers may cache them freely.
///
///   w_m(j, f) = exp(-i 2 pi f (r_jm - r_j0) / a) / (r_jm r_j0 sum_l r_jl^-2)
class SteeringSet {
 public:
  /// Throws SingularityError if a focus point coincides with a microphone
  /// or with the array reference point.
  SteeringSet(const MicArray& array, const FocusGrid& grid,
              const FrequencyGrid& freqs,
              double speed_of_sound = kDefaultSpeedOfSound);

  [[nodiscard]] std::size_t mics() const noexcept {
    return static_cast<std::size_t>(magnitude_.rows());
  }
  [[nodiscard]] std::size_t points() const noexcept {
    return static_cast<std::size_t>(magnitude_.cols());
  }
  [[nodiscard]] std::size_t bins() const noexcept { return freqs_.size(); }
  [[nodiscard]] const FrequencyGrid& freqs() const noexcept { return freqs_; }
  [[nodiscard]] SteeringFormulation formulation() const noexcept {
    return SteeringFormulation::III;
  }

  /// M x J matrix whose column j is w_j for bin i.
  [[nodiscard]] Eigen::MatrixXcd weights(std::size_t bin) const;
  /// w_j for a single bin and point.
  [[nodiscard]] Eigen::VectorXcd weight(std::size_t bin, std::size_t point) const;

  /// |w_mj|^2, M x J; identical for every bin.
  [[nodiscard]] const Eigen::MatrixXd& squared_magnitudes() const noexcept {
    return squared_magnitude_;
  }

  /// Bytes held by weights() for one bin.
  [[nodiscard]] std::size_t bytes_per_bin() const noexcept {
    return mics() * points() * sizeof(Complex);
  }

 private:
  FrequencyGrid freqs_;
  double speed_of_sound_;
  Eigen::MatrixXd magnitude_;
  Eigen::MatrixXd squared_magnitude_;
  Eigen::MatrixXd path_difference_;
};

/// Conventional beamforming map of one bin, Re(w_j^H C w_j) for every
/// column of `weights`. With diagonal removal the diagonal of C is ignored
/// and values may be negative.
[[nodiscard]] Eigen::VectorXd dirty_map_bin(const Eigen::MatrixXcd& csm,
                                            const Eigen::MatrixXcd& weights,
                                            bool diag_removal);

/// Dirty map over all bins (bins x points).
[[nodiscard]] PowerMap dirty_map(const SpectralMatrixSet& csm,
                                 const SteeringSet& steering,
                                 bool diag_removal);

/// |w_j^H C w_k|^2 / (A_jj A_kk). DomainError if either autopower is not
/// positive.
[[nodiscard]] double steered_coherence(const Eigen::MatrixXcd& csm,
                                       const Eigen::VectorXcd& w_j,
                                       const Eigen::VectorXcd& w_k);

}  // namespace bclean
