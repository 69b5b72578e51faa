#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "bclean/beamforming.hpp"
#include "bclean/types.hpp"

namespace bclean {

/// How bins are grouped for the broadband solver.
class IntervalSpec {
 public:
  enum class Kind { bins, hz, all };

  static IntervalSpec bins(std::size_t count);
  static IntervalSpec hz(double width_hz);
  static IntervalSpec all();

  [[nodiscard]] Kind kind() const noexcept { return kind_; }
  [[nodiscard]] std::size_t bin_count() const noexcept { return bins_; }
  [[nodiscard]] double width_hz() const noexcept { return hz_; }

  /// Number of bins per interval on a given grid.
  [[nodiscard]] std::size_t resolve(const FrequencyGrid& freqs) const;

 private:
  IntervalSpec(Kind kind, std::size_t bins, double hz)
      : kind_(kind), bins_(bins), hz_(hz) {}
  Kind kind_;
  std::size_t bins_;
  double hz_;
};

struct BinRange {
  std::size_t first = 0;
  std::size_t count = 0;
  friend bool operator==(const BinRange&, const BinRange&) = default;
};

/// Contiguous ascending ranges covering every bin; the last may be shorter.
[[nodiscard]] std::vector<BinRange> partition_bins(const FrequencyGrid& freqs,
                                                   const IntervalSpec& interval);

/// Reported after every applied per-bin subtraction.
struct IterationEvent {
  std::size_t bin;
  std::size_t iteration;
  std::size_t marker;
  const Eigen::MatrixXcd& residual_csm;
};
using IterationObserver = std::function<void(const IterationEvent&)>;

struct SolverConfig {
  double loop_gain = 0.9;
  std::size_t max_iterations = 1;
  bool diag_removal = true;
  /// Stop once the dirty-map peak has dropped by this many dB.
  std::optional<double> ssr_stop_db;
  /// Ignored by clean_sc.
  IntervalSpec interval = IntervalSpec::bins(1);
  std::size_t threads = 1;
  /// Upper bound on cached steering matrices per worker; beyond it the
  /// weights of a bin are regenerated each time they are needed.
  std::size_t steering_cache_bytes = std::size_t{2} << 30;
  /// Must be thread-safe when threads > 1.
  IterationObserver observer;

  /// Throws ConfigError unless 0 < gain <= 1, iterations >= 1 and the
  /// interval has at least one bin.
  void validate() const;

  /// DR, 3 iterations per source and bin, gain 0.9.
  static SolverConfig clean_sc_defaults(std::size_t source_count);
  /// DR, 10 iterations per source and interval, gain 0.1, intervals of
  /// `interval`.
  static SolverConfig b_clean_sc_defaults(std::size_t source_count,
                                          IntervalSpec interval);
};

enum class StopReason : std::uint8_t {
  max_iterations,
  ssr_reached,
  non_positive_peak,
  degenerate,
};

enum class StepStatus : std::uint8_t {
  applied,
  skipped_non_positive,
  skipped_degenerate,
};

/// One marker selection. For clean_sc the range holds a single bin.
struct IterationRecord {
  BinRange range;
  std::size_t iteration = 0;
  std::size_t marker = 0;
  /// A_ikk per bin in the range, before the subtraction.
  std::vector<double> sampled_power;
  std::vector<StepStatus> status;
};

struct StopRecord {
  BinRange range;
  std::size_t iterations = 0;
  StopReason reason = StopReason::max_iterations;
};

struct Trace {
  std::vector<IterationRecord> iterations;
  std::vector<StopRecord> stops;
};

struct CleanResult {
  PowerMap clean;
  /// Residual CSMs; with diagonal removal their diagonal is held at zero.
  SpectralMatrixSet residual_csm;
  PowerMap original_dirty;
  PowerMap residual_dirty;
  Trace trace;
};

/// Per-bin CLEAN-SC: each bin picks its own marker at the map maximum.
[[nodiscard]] CleanResult clean_sc(const SpectralMatrixSet& csm,
                                   const SteeringSet& steering,
                                   const SolverConfig& config);

/// Broadband CLEAN-SC: every iteration picks one marker shared by all bins
/// of an interval from the normalised, bin-averaged dirty map, then runs the
/// CLEAN-SC subtraction in each bin at that marker.
[[nodiscard]] CleanResult b_clean_sc(const SpectralMatrixSet& csm,
                                     const SteeringSet& steering,
                                     const SolverConfig& config);

/// Source-vector correction for diagonal removal (one fixed-point step).
/// Returns nullopt when w^H C w is not positive.
[[nodiscard]] std::optional<Eigen::VectorXcd> dr_steering_update(
    const Eigen::VectorXcd& h, const Eigen::VectorXcd& w_k,
    const Eigen::MatrixXcd& csm);

/// Index of the maximum of the bin average of current[i, :] / max_j
/// original[i, j]. Bins whose original maximum is not positive are left out
/// of the average; DomainError if none remain. Ties go to the lowest index.
[[nodiscard]] std::size_t bclean_marker(const Eigen::MatrixXd& current,
                                        const Eigen::MatrixXd& original);

/// Threshold commonly used with ssr_stop.
inline constexpr double kDefaultSsrStopDb = 30.0;

/// 10 log10(original / current) in dB; +inf when current <= 0.
[[nodiscard]] double ssr_db(double current_peak, double original_peak);

/// True once ssr_db reaches the threshold. Always false without one.
[[nodiscard]] bool ssr_stop(double current_peak, double original_peak,
                            std::optional<double> threshold_db);

}  // namespace bclean
