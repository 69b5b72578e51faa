#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>
#include <thread>

#include "bclean/beamforming.hpp"
#include "bclean/errors.hpp"
#include "bclean/units.hpp"

namespace bclean::cli {
namespace fs = std::filesystem;
namespace {

constexpr double kCase1RoiHalfWidth = 0.02;
constexpr double kCase2RoiRadius = 0.03;

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::trunc | std::ios::binary);
  if (!out) throw ConfigError("cannot open '" + path.string() + "' for writing");
  return out;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw ConfigError("cannot create output directory '" + dir.string() + "'");
  }
}

fs::path sibling(const fs::path& file, const char* name) {
  return file.parent_path() / name;
}

fs::path scene_path(const std::optional<fs::path>& given, const fs::path& next_to) {
  if (given) return *given;
  const fs::path p = sibling(next_to, "scene.json");
  if (!fs::exists(p)) {
    throw ConfigError("no --scene given and '" + p.string() + "' does not exist");
  }
  return p;
}

double aperture_of(const MicArray& array) {
  return array.size() >= 2 ? array.aperture() : 0.0;
}

// Helmholtz number, or 0 for degenerate apertures so exports stay finite.
double he_of(double f, double aperture, double speed) {
  return aperture > 0.0 ? helmholtz(f, aperture, speed) : 0.0;
}

Json optional_json(const std::optional<double>& v) {
  return v ? Json(*v) : Json(nullptr);
}

Json levels_json(const std::vector<double>& db) {
  Json out = Json::array();
  for (double v : db) out.push_back(is_silent(v) ? Json(nullptr) : Json(v));
  return out;
}

std::string cell(const std::optional<double>& v, int precision = 2) {
  if (!v) return "undef";
  std::ostringstream s;
  s << std::fixed << std::setprecision(precision) << *v;
  return s.str();
}

std::string status_name(StepStatus s) {
  switch (s) {
    case StepStatus::applied: return "applied";
    case StepStatus::skipped_non_positive: return "skipped_non_positive";
    case StepStatus::skipped_degenerate: return "skipped_degenerate";
  }
  return "?";
}

std::string reason_name(StopReason r) {
  switch (r) {
    case StopReason::max_iterations: return "max_iterations";
    case StopReason::ssr_reached: return "ssr_reached";
    case StopReason::non_positive_peak: return "non_positive_peak";
    case StopReason::degenerate: return "degenerate";
  }
  return "?";
}

void write_trace(const fs::path& dir, const Trace& trace, const FrequencyGrid& freqs) {
  auto out = open_out(dir / "trace.csv");
  out << "range_first,range_count,iteration,marker,bin,bin_hz,sampled_power,status\n";
  for (const auto& rec : trace.iterations) {
    for (std::size_t k = 0; k < rec.range.count; ++k) {
      const std::size_t bin = rec.range.first + k;
      out << rec.range.first << ',' << rec.range.count << ',' << rec.iteration << ','
          << rec.marker << ',' << bin << ',' << format_double(freqs[bin]) << ','
          << format_double(rec.sampled_power[k]) << ',' << status_name(rec.status[k])
          << '\n';
    }
  }
  auto stops = open_out(dir / "stops.csv");
  stops << "range_first,range_count,iterations,reason\n";
  for (const auto& s : trace.stops) {
    stops << s.range.first << ',' << s.range.count << ',' << s.iterations << ','
          << reason_name(s.reason) << '\n';
  }
}

void write_residual_summary(const fs::path& path, const CleanResult& r,
                            const FrequencyGrid& freqs, double aperture, double speed) {
  auto out = open_out(path);
  out << "bin_hz,he,original_peak,residual_peak,ssr_db,clean_power,residual_trace,"
         "hermitian_defect\n";
  for (std::size_t i = 0; i < freqs.size(); ++i) {
    const auto row = static_cast<Eigen::Index>(i);
    const double orig = r.original_dirty.values.row(row).maxCoeff();
    const double resid = r.residual_dirty.values.row(row).maxCoeff();
    const double ssr = orig > 0.0 ? ssr_db(resid, orig) : 0.0;
    out << format_double(freqs[i]) << ',' << format_double(he_of(freqs[i], aperture, speed))
        << ',' << format_double(orig) << ',' << format_double(resid) << ','
        << format_double(ssr) << ',' << format_double(r.clean.values.row(row).sum())
        << ',' << format_double(r.residual_csm[i].trace().real()) << ','
        << format_double(hermitian_defect(r.residual_csm[i])) << '\n';
  }
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) out.push_back(field);
  return out;
}

double parse_number(const std::string& s, const std::string& where) {
  if (s == "-inf") return kSilentDb;
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != s.size() || s.empty()) {
    throw ConfigError(where + ": '" + s + "' is not a number");
  }
  return v;
}

void print_metrics_table(std::ostream& out, const MetricsReport& report,
                         const std::vector<RegionOfInterest>& rois,
                         const std::vector<std::vector<double>>& gt) {
  out << std::left << std::setw(12) << "region" << std::right << std::setw(16)
      << "correct PSD %" << std::setw(16) << "mean error dB" << '\n';
  for (std::size_t r = 0; r < rois.size(); ++r) {
    out << std::left << std::setw(12) << rois[r].label << std::right;
    if (!rois[r].source) {
      out << std::setw(16) << "-" << std::setw(16) << "-" << '\n';
      continue;
    }
    const auto& truth = gt[*rois[r].source];
    std::optional<double> pct;
    try {
      pct = correct_psd({report.roi_db[r]}, {truth});
    } catch (const DomainError&) {
    }
    out << std::setw(16) << cell(pct, 1) << std::setw(16)
        << cell(mean_error({report.roi_db[r]}, {truth})) << '\n';
  }
  out << std::left << std::setw(12) << "overall" << std::right << std::setw(16)
      << cell(report.correct_psd_percent, 1) << std::setw(16)
      << cell(report.mean_error_db) << '\n';
  out << "SNR dB: " << cell(report.snr_db) << '\n';
  const auto defined = std::count_if(report.noise_db.begin(), report.noise_db.end(),
                                     [](double v) { return !is_silent(v); });
  out << "noise bins: " << defined << " of " << report.noise_db.size() << '\n';
}

}  // namespace

std::string format_double(double v) {
  if (std::isinf(v)) return v < 0 ? "-inf" : "inf";
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

SceneSpec preset_scene(const std::string& name, std::optional<std::size_t> mics) {
  if (name == "case1") return case1_scene(mics.value_or(64));
  if (name == "case2-analog") {
    if (mics) throw ConfigError("--mics only applies to the case1 preset");
    return case2_analog_scene();
  }
  throw ConfigError("unknown preset '" + name + "' (case1, case2-analog)");
}

std::vector<RegionOfInterest> preset_rois(const SceneSpec& scene) {
  const bool line = scene.grid.shape() && scene.grid.shape()->ny == 1;
  return rois_around_sources(scene, line ? kCase1RoiHalfWidth : kCase2RoiRadius);
}

void run_synth(const SynthOptions& opt, std::ostream& log) {
  if (opt.preset.has_value() == opt.scene.has_value()) {
    throw ConfigError("synth needs exactly one of --preset or --scene");
  }
  const SceneSpec scene =
      opt.preset ? preset_scene(*opt.preset, opt.mics) : scene_from_json(load_json(*opt.scene));
  if (opt.scene && opt.mics) throw ConfigError("--mics only applies to presets");
  ensure_dir(opt.out_dir);

  const CsmFile file{scene.array, scene.freqs, synthesize_csm(scene)};
  write_csm(opt.out_dir / "csm.bin", file);
  save_json(opt.out_dir / "ground_truth.json", ground_truth_to_json(ground_truth_of(scene)));
  save_json(opt.out_dir / "scene.json", scene_to_json(scene));

  std::vector<std::string> labels;
  for (const auto& s : scene.sources) labels.push_back(s.label);
  if (!scene.sources.empty()) {
    save_json(opt.out_dir / "rois.json", rois_to_json(preset_rois(scene), labels));
  }
  log << "synth: " << scene.array.size() << " mics, " << scene.freqs.size() << " bins, "
      << scene.grid.size() << " focus points, " << scene.sources.size()
      << " sources -> " << opt.out_dir.string() << '\n';
}

SolverChoice resolve_solver(const SolverFlags& flags, std::size_t source_count) {
  Json doc = flags.config ? load_json(*flags.config) : Json::object();
  if (!doc.is_object()) throw ConfigError("solver config must be a JSON object");
  if (flags.solver) doc["solver"] = *flags.solver;
  SolverChoice choice = solver_from_json(doc, source_count);
  auto& cfg = choice.config;
  if (flags.alpha) cfg.loop_gain = *flags.alpha;
  if (flags.iters) cfg.max_iterations = *flags.iters;
  if (flags.diag_removal) cfg.diag_removal = *flags.diag_removal;
  if (flags.ssr_db) cfg.ssr_stop_db = *flags.ssr_db;
  const int interval_flags = static_cast<int>(flags.interval_hz.has_value()) +
                             static_cast<int>(flags.interval_bins.has_value()) +
                             static_cast<int>(flags.interval_all);
  if (interval_flags > 1) {
    throw ConfigError("use only one of --interval-hz, --interval-bins, --interval-all");
  }
  if (flags.interval_hz) cfg.interval = IntervalSpec::hz(*flags.interval_hz);
  if (flags.interval_bins) cfg.interval = IntervalSpec::bins(*flags.interval_bins);
  if (flags.interval_all) cfg.interval = IntervalSpec::all();
  if (interval_flags > 0 && choice.kind == SolverKind::clean_sc) {
    throw ConfigError("interval options apply to b-clean-sc only");
  }
  cfg.threads = flags.threads == 0
                    ? std::max<std::size_t>(std::thread::hardware_concurrency(), 1)
                    : flags.threads;
  cfg.validate();
  return choice;
}

CleanResult solve(const SolverChoice& choice, const CsmFile& csm, const FocusGrid& grid,
                  double speed_of_sound) {
  const SteeringSet steering(csm.array, grid, csm.freqs, speed_of_sound);
  return choice.kind == SolverKind::clean_sc ? clean_sc(csm.csm, steering, choice.config)
                                             : b_clean_sc(csm.csm, steering, choice.config);
}

void write_clean_map_csv(const fs::path& path, const PowerMap& q, const FocusGrid& grid,
                         const FrequencyGrid& freqs, double aperture,
                         double speed_of_sound) {
  if (q.bins() != freqs.size() || q.points() != grid.size()) {
    throw DimensionError("clean map does not match grid and frequencies");
  }
  auto out = open_out(path);
  out << "bin_hz,he,point_index,x,y,z,psd_db\n";
  for (std::size_t i = 0; i < q.bins(); ++i) {
    const std::string f = format_double(freqs[i]);
    const std::string he = format_double(he_of(freqs[i], aperture, speed_of_sound));
    for (std::size_t j = 0; j < q.points(); ++j) {
      const double v = q.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      if (v == 0.0) continue;
      const Vec3& p = grid[j];
      out << f << ',' << he << ',' << j << ',' << format_double(p.x()) << ','
          << format_double(p.y()) << ',' << format_double(p.z()) << ','
          << format_double(to_db(v)) << '\n';
    }
  }
}

PowerMap read_clean_map_csv(const fs::path& path, const FocusGrid& grid,
                            const FrequencyGrid& freqs) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open '" + path.string() + "'");
  std::string line;
  if (!std::getline(in, line) || line != "bin_hz,he,point_index,x,y,z,psd_db") {
    throw ConfigError(path.string() + ": not a clean-map CSV (bad header)");
  }
  PowerMap q{Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(freqs.size()),
                                   static_cast<Eigen::Index>(grid.size())),
             MapRole::clean};
  const double bin_tol = 1e-6 * freqs.bin_width();
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const std::string where = path.string() + ":" + std::to_string(lineno);
    const auto f = split_csv(line);
    if (f.size() != 7) throw ConfigError(where + ": expected 7 fields");
    const double hz = parse_number(f[0], where);
    const double idx = parse_number(f[2], where);
    const Vec3 p(parse_number(f[3], where), parse_number(f[4], where),
                 parse_number(f[5], where));
    const double db = parse_number(f[6], where);

    const auto bin_it = std::lower_bound(freqs.frequencies().begin(),
                                         freqs.frequencies().end(), hz - bin_tol);
    if (bin_it == freqs.frequencies().end() || std::abs(*bin_it - hz) > bin_tol) {
      throw ConfigError(where + ": frequency " + f[0] + " Hz is not a bin of the grid");
    }
    if (idx < 0 || idx != std::floor(idx) || idx >= static_cast<double>(grid.size())) {
      throw ConfigError(where + ": point index " + f[2] + " outside the focus grid");
    }
    const auto j = static_cast<std::size_t>(idx);
    if ((grid[j] - p).norm() > 1e-9 * std::max(1.0, grid[j].norm())) {
      throw ConfigError(where + ": point " + f[2] + " does not match the focus grid");
    }
    const auto i = static_cast<Eigen::Index>(bin_it - freqs.frequencies().begin());
    q.values(i, static_cast<Eigen::Index>(j)) += from_db(db);
  }
  return q;
}

void run_solve(const SolveOptions& opt, std::ostream& log) {
  const fs::path scene_file = scene_path(opt.scene, opt.csm);
  const SceneSpec scene = scene_from_json(load_json(scene_file));
  const CsmFile csm = read_csm(opt.csm);
  const SolverChoice choice = resolve_solver(opt.solver, scene.sources.size());
  ensure_dir(opt.out_dir);

  const CleanResult result = solve(choice, csm, scene.grid, scene.speed_of_sound);
  const double aperture = aperture_of(csm.array);

  write_clean_map_csv(opt.out_dir / "clean_map.csv", result.clean, scene.grid, csm.freqs,
                      aperture, scene.speed_of_sound);
  write_trace(opt.out_dir, result.trace, csm.freqs);
  write_residual_summary(opt.out_dir / "residual_summary.csv", result, csm.freqs,
                         aperture, scene.speed_of_sound);
  write_csm(opt.out_dir / "residual_csm.bin", CsmFile{csm.array, csm.freqs,
                                                      result.residual_csm});

  Json manifest = {
      {"tool", "bclean"},
      {"command", "solve"},
      {"inputs", {{"csm", opt.csm.generic_string()}, {"scene", scene_file.generic_string()}}},
      {"solver", solver_to_json(choice)},
      {"mics", csm.csm.mics()},
      {"bins", csm.freqs.size()},
      {"focus_points", scene.grid.size()},
      {"speed_of_sound", scene.speed_of_sound},
      {"deterministic", true},
      {"outputs", Json::array({"clean_map.csv", "trace.csv", "stops.csv",
                               "residual_summary.csv", "residual_csm.bin"})},
  };
  save_json(opt.out_dir / "manifest.json", manifest);

  std::size_t nonzero = 0;
  for (Eigen::Index i = 0; i < result.clean.values.size(); ++i) {
    if (result.clean.values.data()[i] != 0.0) ++nonzero;
  }
  log << "solve: " << to_string(choice.kind) << ", alpha " << choice.config.loop_gain
      << ", " << choice.config.max_iterations << " iterations, "
      << (choice.config.diag_removal ? "DR" : "no DR") << "; "
      << result.trace.iterations.size() << " marker selections, " << nonzero
      << " nonzero map entries -> " << opt.out_dir.string() << '\n';
}

Json metrics_to_json(const MetricsReport& report, const std::vector<double>& frequencies,
                     double aperture, double speed_of_sound) {
  Json he = Json::array();
  for (double f : frequencies) he.push_back(he_of(f, aperture, speed_of_sound));
  Json rois = Json::array();
  for (std::size_t r = 0; r < report.roi_labels.size(); ++r) {
    rois.push_back({{"label", report.roi_labels[r]}, {"psd_db", levels_json(report.roi_db[r])}});
  }
  // Total integrated power: every region plus the noise.
  std::vector<double> total(frequencies.size(), 0.0);
  for (std::size_t i = 0; i < total.size(); ++i) {
    double sum = is_silent(report.noise_db[i]) ? 0.0 : from_db(report.noise_db[i]);
    for (const auto& roi : report.roi_db) {
      if (!is_silent(roi[i])) sum += from_db(roi[i]);
    }
    total[i] = to_db(sum);
  }
  return {{"correct_psd_percent", report.correct_psd_percent},
          {"mean_error_db", optional_json(report.mean_error_db)},
          {"snr_db", optional_json(report.snr_db)},
          {"frequencies", frequencies},
          {"helmholtz", he},
          {"rois", rois},
          {"noise_db", levels_json(report.noise_db)},
          {"total_db", levels_json(total)},
          {"oaspl_db", levels_json(report.oaspl_db)}};
}

void run_metrics(const MetricsOptions& opt, std::ostream& out) {
  const SceneSpec scene = scene_from_json(load_json(scene_path(opt.scene, opt.gt)));
  const GroundTruth gt = ground_truth_from_json(load_json(opt.gt));
  if (gt.frequencies != scene.freqs.frequencies()) {
    throw ConfigError("ground truth and scene have different frequency grids");
  }
  const auto rois = rois_from_json(load_json(opt.rois), gt.labels);
  const PowerMap q = read_clean_map_csv(opt.clean_map, scene.grid, scene.freqs);
  const MetricsReport report = evaluate(q, scene.grid, rois, gt.psd_db);

  ensure_dir(opt.out_dir);
  save_json(opt.out_dir / "metrics.json",
            metrics_to_json(report, gt.frequencies, gt.aperture, gt.speed_of_sound));
  print_metrics_table(out, report, rois, gt.psd_db);
}

std::vector<std::size_t> parse_sizes(const std::string& text) {
  std::vector<std::size_t> out;
  std::istringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (item == "all") {
      out.push_back(0);
      continue;
    }
    std::size_t used = 0;
    long long v = 0;
    try {
      v = std::stoll(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != item.size() || item.empty() || v < 1) {
      throw ConfigError("--sizes: '" + item + "' is neither a positive integer nor 'all'");
    }
    out.push_back(static_cast<std::size_t>(v));
  }
  if (out.empty()) throw ConfigError("--sizes: empty list");
  return out;
}

std::vector<SweepRow> sweep(const SolverConfig& base, const CsmFile& csm,
                            const FocusGrid& grid, double speed_of_sound,
                            const std::vector<RegionOfInterest>& rois,
                            const std::vector<std::vector<double>>& gt,
                            std::vector<std::size_t> sizes) {
  if (sizes.empty()) {
    for (std::size_t s = 1; s < csm.freqs.size(); s *= 2) sizes.push_back(s);
    sizes.push_back(0);
  }
  const SteeringSet steering(csm.array, grid, csm.freqs, speed_of_sound);
  std::vector<SweepRow> rows;
  for (std::size_t size : sizes) {
    SolverConfig cfg = base;
    cfg.interval = size == 0 ? IntervalSpec::all() : IntervalSpec::bins(size);
    cfg.validate();
    const CleanResult r = b_clean_sc(csm.csm, steering, cfg);
    rows.push_back({size == 0 ? csm.freqs.size() : size, size == 0,
                    evaluate(r.clean, grid, rois, gt)});
  }
  return rows;
}

void run_sweep(const SweepOptions& opt, std::ostream& out) {
  const SceneSpec scene = scene_from_json(load_json(scene_path(opt.scene, opt.csm)));
  const CsmFile csm = read_csm(opt.csm);
  const GroundTruth gt =
      ground_truth_from_json(load_json(opt.gt.value_or(sibling(opt.csm, "ground_truth.json"))));
  const auto rois =
      rois_from_json(load_json(opt.rois.value_or(sibling(opt.csm, "rois.json"))), gt.labels);
  if (gt.frequencies != csm.freqs.frequencies()) {
    throw ConfigError("ground truth and CSM have different frequency grids");
  }

  SolverFlags flags = opt.solver;
  if (flags.solver && *flags.solver != "b-clean-sc") {
    throw ConfigError("sweep always runs b-clean-sc");
  }
  if (flags.interval_hz || flags.interval_bins || flags.interval_all) {
    throw ConfigError("sweep sets the interval itself; use --sizes");
  }
  flags.solver = "b-clean-sc";
  const SolverChoice base = resolve_solver(flags, scene.sources.size());
  const auto rows = sweep(base.config, csm, scene.grid, scene.speed_of_sound, rois,
                          gt.psd_db, opt.sizes);

  ensure_dir(opt.out_dir);
  auto csv = open_out(opt.out_dir / "sweep.csv");
  csv << "interval_bins,all,correct_psd_percent,mean_error_db,snr_db\n";
  auto opt_cell = [](const std::optional<double>& v) {
    return v ? format_double(*v) : std::string();
  };
  for (const auto& row : rows) {
    csv << row.interval_bins << ',' << (row.all ? 1 : 0) << ','
        << format_double(row.report.correct_psd_percent) << ','
        << opt_cell(row.report.mean_error_db) << ',' << opt_cell(row.report.snr_db) << '\n';
  }

  out << std::left << std::setw(18) << "interval (bins)" << std::right;
  for (const auto& row : rows) {
    out << std::setw(9) << (row.all ? std::string("all") : std::to_string(row.interval_bins));
  }
  out << '\n' << std::left << std::setw(18) << "correct PSD %" << std::right;
  for (const auto& row : rows) out << std::setw(9) << cell(row.report.correct_psd_percent, 1);
  out << '\n' << std::left << std::setw(18) << "mean error dB" << std::right;
  for (const auto& row : rows) out << std::setw(9) << cell(row.report.mean_error_db);
  out << '\n' << std::left << std::setw(18) << "SNR dB" << std::right;
  for (const auto& row : rows) out << std::setw(9) << cell(row.report.snr_db);
  out << '\n';
}

}  // namespace bclean::cli
