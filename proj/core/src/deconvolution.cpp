#include "bclean/deconvolution.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "bclean/errors.hpp"
#include "parallel.hpp"

namespace bclean {

// ---------------------------------------------------------------------------
// Configuration

IntervalSpec IntervalSpec::bins(std::size_t count) {
  return IntervalSpec(Kind::bins, count, 0.0);
}

IntervalSpec IntervalSpec::hz(double width_hz) {
  return IntervalSpec(Kind::hz, 0, width_hz);
}

IntervalSpec IntervalSpec::all() { return IntervalSpec(Kind::all, 0, 0.0); }

std::size_t IntervalSpec::resolve(const FrequencyGrid& freqs) const {
  switch (kind_) {
    case Kind::bins:
      if (bins_ == 0) throw ConfigError("interval: size must be >= 1 bin");
      return bins_;
    case Kind::hz: {
      if (!(hz_ > 0.0)) throw ConfigError("interval: width must be > 0 Hz");
      const auto n = std::llround(hz_ / freqs.bin_width());
      return static_cast<std::size_t>(std::max<long long>(n, 1));
    }
    case Kind::all:
      return freqs.size();
  }
  return 1;
}

std::vector<BinRange> partition_bins(const FrequencyGrid& freqs,
                                     const IntervalSpec& interval) {
  const std::size_t size = interval.resolve(freqs);
  std::vector<BinRange> ranges;
  for (std::size_t first = 0; first < freqs.size(); first += size) {
    ranges.push_back({first, std::min(size, freqs.size() - first)});
  }
  return ranges;
}

void SolverConfig::validate() const {
  if (!(loop_gain > 0.0 && loop_gain <= 1.0)) {
    throw ConfigError("solver: loop gain must satisfy 0 < alpha <= 1 (got " +
                      std::to_string(loop_gain) + ")");
  }
  if (max_iterations < 1) {
    throw ConfigError("solver: max_iterations must be >= 1");
  }
  if (interval.kind() == IntervalSpec::Kind::bins && interval.bin_count() < 1) {
    throw ConfigError("solver: interval must hold at least one bin");
  }
  if (interval.kind() == IntervalSpec::Kind::hz && !(interval.width_hz() > 0.0)) {
    throw ConfigError("solver: interval width must be positive");
  }
  if (ssr_stop_db && !std::isfinite(*ssr_stop_db)) {
    throw ConfigError("solver: SSR threshold must be finite");
  }
}

SolverConfig SolverConfig::clean_sc_defaults(std::size_t source_count) {
  SolverConfig cfg;
  cfg.loop_gain = 0.9;
  cfg.max_iterations = 3 * std::max<std::size_t>(source_count, 1);
  cfg.diag_removal = true;
  return cfg;
}

SolverConfig SolverConfig::b_clean_sc_defaults(std::size_t source_count,
                                               IntervalSpec interval) {
  SolverConfig cfg;
  cfg.loop_gain = 0.1;
  cfg.max_iterations = 10 * std::max<std::size_t>(source_count, 1);
  cfg.diag_removal = true;
  cfg.interval = interval;
  return cfg;
}

// ---------------------------------------------------------------------------
// Building blocks

std::optional<Eigen::VectorXcd> dr_steering_update(const Eigen::VectorXcd& h,
                                                   const Eigen::VectorXcd& w_k,
                                                   const Eigen::MatrixXcd& csm) {
  const Eigen::VectorXcd cw = csm * w_k;
  const double wcw = w_k.dot(cw).real();
  if (!(wcw > 0.0)) return std::nullopt;
  // H = I o (h h^H) is diagonal with entries |h_m|^2.
  const Eigen::VectorXd h_sq = h.cwiseAbs2();
  const Eigen::VectorXcd hw = h_sq.cast<Complex>().cwiseProduct(w_k);
  const double whw = w_k.dot(hw).real();
  return ((cw / wcw) + hw) / (1.0 + whw);
}

double ssr_db(double current_peak, double original_peak) {
  if (!(original_peak > 0.0)) {
    throw DomainError("ssr: original peak must be positive");
  }
  if (!(current_peak > 0.0)) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(original_peak / current_peak);
}

bool ssr_stop(double current_peak, double original_peak,
              std::optional<double> threshold_db) {
  if (!threshold_db) return false;
  return ssr_db(current_peak, original_peak) >= *threshold_db;
}

namespace {

struct Peak {
  double value;
  Eigen::Index index;
};

// First maximum wins, so ties go to the lowest index.
Peak find_peak(const Eigen::VectorXd& v) {
  Peak p{v[0], 0};
  for (Eigen::Index j = 1; j < v.size(); ++j) {
    if (v[j] > p.value) p = {v[j], j};
  }
  return p;
}

// Normalised bin average over the rows listed in `active`, summed in
// ascending row order.
Eigen::VectorXd averaged_map(const std::vector<Eigen::VectorXd>& maps,
                             const std::vector<double>& norms,
                             const std::vector<std::size_t>& active) {
  Eigen::VectorXd avg = Eigen::VectorXd::Zero(maps[active.front()].size());
  for (std::size_t i : active) avg += maps[i] / norms[i];
  avg /= static_cast<double>(active.size());
  return avg;
}

struct BinState {
  Eigen::MatrixXcd csm;
  Eigen::VectorXd map;
};

BinState make_state(const Eigen::MatrixXcd& csm, const Eigen::MatrixXcd& weights,
                    bool diag_removal) {
  BinState s{csm, {}};
  if (diag_removal) s.csm.diagonal().setZero();
  s.map = dirty_map_bin(s.csm, weights, false);
  return s;
}

// One CLEAN-SC subtraction at marker k. Adds the removed power to `q`.
StepStatus clean_step(BinState& s, const Eigen::MatrixXcd& weights,
                      const Eigen::MatrixXd& weights_sq, Eigen::Index k,
                      double gain, bool diag_removal, double& q) {
  const double a_kk = s.map[k];
  if (!(a_kk > 0.0)) return StepStatus::skipped_non_positive;

  const Eigen::VectorXcd w_k = weights.col(k);
  Eigen::VectorXcd h = (s.csm * w_k) / a_kk;
  if (diag_removal) {
    auto updated = dr_steering_update(h, w_k, s.csm);
    if (!updated) return StepStatus::skipped_degenerate;
    h = std::move(*updated);
  }

  // G = A_kk h h^H, written elementwise so that G(n, m) == conj(G(m, n))
  // bit for bit and the residual stays exactly Hermitian.
  const Eigen::Index n_mics = h.size();
  Eigen::MatrixXcd g(n_mics, n_mics);
  for (Eigen::Index n = 0; n < n_mics; ++n) {
    for (Eigen::Index m = 0; m < n_mics; ++m) {
      g(m, n) = a_kk * (h[m] * std::conj(h[n]));
    }
  }
  if (diag_removal) g.diagonal().setZero();
  s.csm -= gain * g;

  // w_j^H G w_j = A_kk |w_j^H h|^2, minus the diagonal part under DR.
  Eigen::VectorXd removed = a_kk * (weights.adjoint() * h).cwiseAbs2();
  if (diag_removal) {
    removed -= weights_sq.transpose() * (a_kk * h.cwiseAbs2());
  }
  s.map -= gain * removed;
  q += gain * a_kk;
  return StepStatus::applied;
}

// Steering matrices for a bin range, cached when they fit the budget.
class SteeringWindow {
 public:
  SteeringWindow(const SteeringSet& steering, BinRange range,
                 std::size_t budget_bytes)
      : steering_(steering), range_(range) {
    if (range.count * steering.bytes_per_bin() <= budget_bytes) {
      cache_.reserve(range.count);
      for (std::size_t b = 0; b < range.count; ++b) {
        cache_.push_back(steering.weights(range.first + b));
      }
    }
  }

  // Returns a reference into the cache, or into `scratch` when uncached.
  const Eigen::MatrixXcd& get(std::size_t offset, Eigen::MatrixXcd& scratch) const {
    if (!cache_.empty()) return cache_[offset];
    scratch = steering_.weights(range_.first + offset);
    return scratch;
  }

 private:
  const SteeringSet& steering_;
  BinRange range_;
  std::vector<Eigen::MatrixXcd> cache_;
};

void check_inputs(const SpectralMatrixSet& csm, const SteeringSet& steering,
                  const SolverConfig& config) {
  config.validate();
  if (csm.bins() != steering.bins() || csm.mics() != steering.mics()) {
    throw DimensionError("solver: CSM set (" + std::to_string(csm.bins()) +
                         " bins, " + std::to_string(csm.mics()) +
                         " mics) does not match steering set (" +
                         std::to_string(steering.bins()) + " bins, " +
                         std::to_string(steering.mics()) + " mics)");
  }
}

CleanResult empty_result(const SpectralMatrixSet& csm,
                         const SteeringSet& steering) {
  const auto bins = static_cast<Eigen::Index>(csm.bins());
  const auto points = static_cast<Eigen::Index>(steering.points());
  CleanResult r;
  r.clean = {Eigen::MatrixXd::Zero(bins, points), MapRole::clean};
  r.original_dirty = {Eigen::MatrixXd::Zero(bins, points), MapRole::dirty};
  r.residual_dirty = {Eigen::MatrixXd::Zero(bins, points), MapRole::dirty};
  r.residual_csm = SpectralMatrixSet(csm.mics(), csm.bins());
  return r;
}

void merge_traces(std::vector<Trace>& parts, Trace& out) {
  for (auto& t : parts) {
    std::move(t.iterations.begin(), t.iterations.end(),
              std::back_inserter(out.iterations));
    std::move(t.stops.begin(), t.stops.end(), std::back_inserter(out.stops));
  }
}

// Runs the shared iteration loop on one interval. An interval of one bin
// reproduces per-bin CLEAN-SC.
void solve_interval(const SpectralMatrixSet& csm, const SteeringSet& steering,
                    const SolverConfig& cfg, BinRange range,
                    std::size_t cache_budget, CleanResult& result,
                    Trace& trace) {
  const SteeringWindow window(steering, range, cache_budget);
  Eigen::MatrixXcd scratch;

  std::vector<BinState> states;
  std::vector<double> norms(range.count);
  std::vector<std::size_t> active;
  states.reserve(range.count);
  for (std::size_t b = 0; b < range.count; ++b) {
    const std::size_t i = range.first + b;
    states.push_back(make_state(csm[i], window.get(b, scratch), cfg.diag_removal));
    result.original_dirty.values.row(static_cast<Eigen::Index>(i)) =
        states.back().map.transpose();
    norms[b] = states.back().map.maxCoeff();
    if (norms[b] > 0.0) active.push_back(b);
  }

  auto finish = [&](std::size_t iterations, StopReason reason) {
    trace.stops.push_back({range, iterations, reason});
    for (std::size_t b = 0; b < range.count; ++b) {
      const std::size_t i = range.first + b;
      result.residual_csm[i] = std::move(states[b].csm);
      result.residual_dirty.values.row(static_cast<Eigen::Index>(i)) =
          states[b].map.transpose();
    }
  };

  if (active.empty()) {
    finish(0, StopReason::non_positive_peak);
    return;
  }

  // With a single bin the normalisation is a positive constant, so the raw
  // map gives the same argmax and SSR without rounding from the division.
  const bool single = range.count == 1;
  std::vector<Eigen::VectorXd> maps(range.count);
  auto selection_map = [&]() -> Eigen::VectorXd {
    if (single) return states[0].map;
    for (std::size_t b : active) maps[b] = states[b].map;
    return averaged_map(maps, norms, active);
  };

  const double original_peak = find_peak(selection_map()).value;
  const double gain = cfg.loop_gain;
  const Eigen::MatrixXd& weights_sq = steering.squared_magnitudes();

  for (std::size_t n = 0; n < cfg.max_iterations; ++n) {
    const Peak peak = find_peak(selection_map());
    if (!(peak.value > 0.0)) {
      finish(n, StopReason::non_positive_peak);
      return;
    }
    if (ssr_stop(peak.value, original_peak, cfg.ssr_stop_db)) {
      finish(n, StopReason::ssr_reached);
      return;
    }

    IterationRecord rec{range, n, static_cast<std::size_t>(peak.index),
                        std::vector<double>(range.count),
                        std::vector<StepStatus>(range.count)};
    bool any_applied = false;
    for (std::size_t b = 0; b < range.count; ++b) {
      const std::size_t i = range.first + b;
      rec.sampled_power[b] = states[b].map[peak.index];
      double& q = result.clean.values(static_cast<Eigen::Index>(i), peak.index);
      rec.status[b] = clean_step(states[b], window.get(b, scratch), weights_sq,
                                 peak.index, gain, cfg.diag_removal, q);
      if (rec.status[b] == StepStatus::applied) {
        any_applied = true;
        if (cfg.observer) {
          cfg.observer({i, n, rec.marker, states[b].csm});
        }
      }
    }
    const bool degenerate =
        !any_applied && std::any_of(rec.status.begin(), rec.status.end(),
                                    [](StepStatus s) {
                                      return s == StepStatus::skipped_degenerate;
                                    });
    trace.iterations.push_back(std::move(rec));
    if (!any_applied) {
      // Nothing changed, so every further iteration would repeat this one.
      finish(n + 1, degenerate ? StopReason::degenerate
                               : StopReason::non_positive_peak);
      return;
    }
  }
  finish(cfg.max_iterations, StopReason::max_iterations);
}

CleanResult run(const SpectralMatrixSet& csm, const SteeringSet& steering,
                const SolverConfig& config, const std::vector<BinRange>& ranges) {
  check_inputs(csm, steering, config);
  CleanResult result = empty_result(csm, steering);
  const std::size_t workers = std::max<std::size_t>(config.threads, 1);
  const std::size_t budget = config.steering_cache_bytes / workers;
  std::vector<Trace> traces(ranges.size());
  detail::parallel_for(ranges.size(), workers, [&](std::size_t t) {
    solve_interval(csm, steering, config, ranges[t], budget, result, traces[t]);
  });
  merge_traces(traces, result.trace);
  return result;
}

}  // namespace

std::size_t bclean_marker(const Eigen::MatrixXd& current,
                          const Eigen::MatrixXd& original) {
  if (current.rows() != original.rows() || current.cols() != original.cols() ||
      current.size() == 0) {
    throw DimensionError("bclean_marker: current and original maps differ "
                         "in shape or are empty");
  }
  const auto bins = static_cast<std::size_t>(current.rows());
  std::vector<Eigen::VectorXd> maps(bins);
  std::vector<double> norms(bins);
  std::vector<std::size_t> active;
  for (std::size_t b = 0; b < bins; ++b) {
    const auto r = static_cast<Eigen::Index>(b);
    maps[b] = current.row(r).transpose();
    norms[b] = original.row(r).maxCoeff();
    if (norms[b] > 0.0) active.push_back(b);
  }
  if (active.empty()) {
    throw DomainError("bclean_marker: every bin has a non-positive original "
                      "maximum");
  }
  if (bins == 1) return static_cast<std::size_t>(find_peak(maps[0]).index);
  return static_cast<std::size_t>(find_peak(averaged_map(maps, norms, active)).index);
}

CleanResult clean_sc(const SpectralMatrixSet& csm, const SteeringSet& steering,
                     const SolverConfig& config) {
  check_inputs(csm, steering, config);
  return run(csm, steering, config,
             partition_bins(steering.freqs(), IntervalSpec::bins(1)));
}

CleanResult b_clean_sc(const SpectralMatrixSet& csm, const SteeringSet& steering,
                       const SolverConfig& config) {
  check_inputs(csm, steering, config);
  return run(csm, steering, config,
             partition_bins(steering.freqs(), config.interval));
}

}  // namespace bclean
