#pragma once

// JSON scene, ROI, solver and ground-truth files used by the bclean tool.
// Key reference: docs/config_format.md.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "bclean/analysis.hpp"
#include "bclean/deconvolution.hpp"
#include "bclean/synthesis.hpp"
#include "json.hpp"

namespace bclean::cli {

using Json = nlohmann::json;

/// Parses a file as JSON; ConfigError carries the file name and the
/// parser's line/column.
[[nodiscard]] Json load_json(const std::filesystem::path& path);
void save_json(const std::filesystem::path& path, const Json& doc);

[[nodiscard]] SceneSpec scene_from_json(const Json& doc);
/// Explicit positions and points, so the file reproduces the scene exactly.
[[nodiscard]] Json scene_to_json(const SceneSpec& scene);

/// `sources` resolves `"source": "<label>"` links to indices.
[[nodiscard]] std::vector<RegionOfInterest> rois_from_json(
    const Json& doc, const std::vector<std::string>& source_labels);
[[nodiscard]] Json rois_to_json(const std::vector<RegionOfInterest>& rois,
                                const std::vector<std::string>& source_labels);

enum class SolverKind { clean_sc, b_clean_sc };

struct SolverChoice {
  SolverKind kind = SolverKind::clean_sc;
  SolverConfig config;
};

/// Keys: solver, alpha, iterations, diag_removal, ssr_stop_db, interval
/// ({"bins": n} | {"hz": w} | "all"), threads.
[[nodiscard]] SolverChoice solver_from_json(const Json& doc,
                                            std::size_t source_count);
[[nodiscard]] Json solver_to_json(const SolverChoice& choice);
[[nodiscard]] std::string to_string(SolverKind kind);
[[nodiscard]] SolverKind solver_kind_from_string(const std::string& name);

/// Per-source spectra and positions of a synthesized scene.
struct GroundTruth {
  double speed_of_sound = kDefaultSpeedOfSound;
  double aperture = 0.0;
  std::vector<double> frequencies;
  std::vector<std::string> labels;
  std::vector<Vec3> positions;
  /// [source][bin] dB, kSilentDb where the source is absent.
  std::vector<std::vector<double>> psd_db;
};

[[nodiscard]] GroundTruth ground_truth_of(const SceneSpec& scene);
[[nodiscard]] Json ground_truth_to_json(const GroundTruth& gt);
[[nodiscard]] GroundTruth ground_truth_from_json(const Json& doc);

}  // namespace bclean::cli
