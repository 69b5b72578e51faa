#pragma once

// Subcommands of the bclean tool. Each one reads its inputs from disk,
// writes its results into an output directory and prints a short report.

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "bclean/csm_io.hpp"
#include "bclean/deconvolution.hpp"
#include "config.hpp"

namespace bclean::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitDomain = 3;

/// Fixed "%.17g" rendering; -inf for silent levels.
[[nodiscard]] std::string format_double(double v);

struct SynthOptions {
  std::optional<std::string> preset;  // case1 | case2-analog
  std::optional<std::filesystem::path> scene;
  std::optional<std::size_t> mics;    // case1 only
  std::filesystem::path out_dir = ".";
};

/// Writes csm.bin, ground_truth.json, scene.json and rois.json.
void run_synth(const SynthOptions& opt, std::ostream& log);

/// Scene preset by name; ConfigError for unknown names.
[[nodiscard]] SceneSpec preset_scene(const std::string& name,
                                     std::optional<std::size_t> mics);
/// Default regions for a preset: +-0.02 m segments on the line of case1,
/// 0.03 m circles on the plane of case2-analog.
[[nodiscard]] std::vector<RegionOfInterest> preset_rois(const SceneSpec& scene);

struct SolverFlags {
  std::optional<std::filesystem::path> config;
  std::optional<std::string> solver;
  std::optional<double> alpha;
  std::optional<std::size_t> iters;
  std::optional<bool> diag_removal;
  std::optional<double> ssr_db;
  std::optional<double> interval_hz;
  std::optional<std::size_t> interval_bins;
  bool interval_all = false;
  std::size_t threads = 1;
};

/// Config file (if any) first, then individual flags on top.
[[nodiscard]] SolverChoice resolve_solver(const SolverFlags& flags,
                                          std::size_t source_count);

struct SolveOptions {
  std::filesystem::path csm;
  /// Defaults to scene.json next to the CSM file.
  std::optional<std::filesystem::path> scene;
  SolverFlags solver;
  std::filesystem::path out_dir = ".";
};

/// Writes clean_map.csv, trace.csv, stops.csv, residual_summary.csv,
/// residual_csm.bin and manifest.json.
void run_solve(const SolveOptions& opt, std::ostream& log);

[[nodiscard]] CleanResult solve(const SolverChoice& choice, const CsmFile& csm,
                                const FocusGrid& grid, double speed_of_sound);

void write_clean_map_csv(const std::filesystem::path& path, const PowerMap& q,
                         const FocusGrid& grid, const FrequencyGrid& freqs,
                         double aperture, double speed_of_sound);
/// Rebuilds the dense map. ConfigError if a row does not match the grid or
/// the frequencies.
[[nodiscard]] PowerMap read_clean_map_csv(const std::filesystem::path& path,
                                          const FocusGrid& grid,
                                          const FrequencyGrid& freqs);

struct MetricsOptions {
  std::filesystem::path clean_map;
  std::filesystem::path gt;
  std::filesystem::path rois;
  /// Defaults to scene.json next to the ground-truth file.
  std::optional<std::filesystem::path> scene;
  std::filesystem::path out_dir = ".";
};

/// Writes metrics.json and prints the metrics table.
void run_metrics(const MetricsOptions& opt, std::ostream& out);

[[nodiscard]] Json metrics_to_json(const MetricsReport& report,
                                   const std::vector<double>& frequencies,
                                   double aperture, double speed_of_sound);

struct SweepOptions {
  std::filesystem::path csm;
  std::optional<std::filesystem::path> scene;
  std::optional<std::filesystem::path> gt;
  std::optional<std::filesystem::path> rois;
  SolverFlags solver;
  /// Interval sizes in bins; 0 stands for "all". Empty: 1, 2, 4, ..., all.
  std::vector<std::size_t> sizes;
  std::filesystem::path out_dir = ".";
};

struct SweepRow {
  std::size_t interval_bins = 0;
  bool all = false;
  MetricsReport report;
};

/// Parses "1,2,4,all"; "all" maps to 0.
[[nodiscard]] std::vector<std::size_t> parse_sizes(const std::string& text);

/// Runs B-CLEAN-SC once per interval size with otherwise identical settings.
[[nodiscard]] std::vector<SweepRow> sweep(
    const SolverConfig& base, const CsmFile& csm, const FocusGrid& grid,
    double speed_of_sound, const std::vector<RegionOfInterest>& rois,
    const std::vector<std::vector<double>>& gt, std::vector<std::size_t> sizes);

/// Writes sweep.csv and prints the table.
void run_sweep(const SweepOptions& opt, std::ostream& out);

}  // namespace bclean::cli
