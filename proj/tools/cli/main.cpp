#include <exception>
#include <iostream>

#include "CLI11.hpp"
#include "bclean/errors.hpp"
#include "commands.hpp"

namespace {

using namespace bclean::cli;

void add_solver_flags(CLI::App* cmd, SolverFlags& f) {
  cmd->add_option("--config", f.config, "Solver config file (JSON)");
  cmd->add_option("--alpha", f.alpha, "Loop gain, 0 < alpha <= 1");
  cmd->add_option("--iters", f.iters, "Iterations per bin (clean-sc) or interval");
  cmd->add_flag_function(
      "--dr{true},--no-dr{false}",
      [&f](std::int64_t count) { f.diag_removal = count > 0; },
      "Diagonal removal on/off");
  cmd->add_option("--ssr-db", f.ssr_db, "Stop once the map peak has dropped this far");
  cmd->add_option("--threads", f.threads, "Worker threads (0: one per core)")
      ->capture_default_str();
}

void add_interval_flags(CLI::App* cmd, SolverFlags& f) {
  cmd->add_option("--interval-hz", f.interval_hz, "Interval width in Hz");
  cmd->add_option("--interval-bins", f.interval_bins, "Interval width in bins");
  cmd->add_flag("--interval-all", f.interval_all, "One interval over all bins");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"CLEAN-SC and B-CLEAN-SC deconvolution of microphone-array data"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "bclean 0.1.0");

  SynthOptions synth;
  auto* synth_cmd = app.add_subcommand("synth", "Synthesize a CSM and its ground truth");
  synth_cmd->add_option("--preset", synth.preset, "case1 | case2-analog");
  synth_cmd->add_option("--scene", synth.scene, "Scene config file (JSON)");
  synth_cmd->add_option("--mics", synth.mics, "Microphone count for case1");
  synth_cmd->add_option("--out-dir", synth.out_dir, "Output directory");

  SolveOptions solve;
  std::string solver_name = "clean-sc";
  auto* solve_cmd = app.add_subcommand("solve", "Deconvolve a CSM file");
  solve_cmd->add_option("--csm", solve.csm, "CSM file")->required();
  solve_cmd->add_option("--scene", solve.scene, "Scene file (default: next to the CSM)");
  solve_cmd->add_option("--solver", solver_name, "clean-sc | b-clean-sc")
      ->capture_default_str();
  add_solver_flags(solve_cmd, solve.solver);
  add_interval_flags(solve_cmd, solve.solver);
  solve_cmd->add_option("--out-dir", solve.out_dir, "Output directory");

  MetricsOptions metrics;
  auto* metrics_cmd = app.add_subcommand("metrics", "Score a clean map against ground truth");
  metrics_cmd->add_option("--clean-map", metrics.clean_map, "clean_map.csv")->required();
  metrics_cmd->add_option("--gt", metrics.gt, "ground_truth.json")->required();
  metrics_cmd->add_option("--rois", metrics.rois, "rois.json")->required();
  metrics_cmd->add_option("--scene", metrics.scene,
                          "Scene file (default: next to the ground truth)");
  metrics_cmd->add_option("--out-dir", metrics.out_dir, "Output directory");

  SweepOptions sweep;
  std::string sizes;
  auto* sweep_cmd = app.add_subcommand("sweep", "B-CLEAN-SC metrics over interval sizes");
  sweep_cmd->add_option("--csm", sweep.csm, "CSM file")->required();
  sweep_cmd->add_option("--scene", sweep.scene, "Scene file (default: next to the CSM)");
  sweep_cmd->add_option("--gt", sweep.gt, "Ground truth (default: next to the CSM)");
  sweep_cmd->add_option("--rois", sweep.rois, "Regions (default: next to the CSM)");
  sweep_cmd->add_option("--sizes", sizes, "Comma list of bin counts or 'all'");
  add_solver_flags(sweep_cmd, sweep.solver);
  sweep_cmd->add_option("--out-dir", sweep.out_dir, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (synth_cmd->parsed()) {
      run_synth(synth, std::cout);
    } else if (solve_cmd->parsed()) {
      solve.solver.solver = solver_name;
      run_solve(solve, std::cout);
    } else if (metrics_cmd->parsed()) {
      run_metrics(metrics, std::cout);
    } else if (sweep_cmd->parsed()) {
      if (!sizes.empty()) sweep.sizes = parse_sizes(sizes);
      run_sweep(sweep, std::cout);
    }
  } catch (const bclean::DomainError& e) {
    std::cerr << "bclean: numerical error: " << e.what() << '\n';
    return kExitDomain;
  } catch (const std::exception& e) {
    // Config, dimension and I/O problems all stem from the inputs.
    std::cerr << "bclean: " << e.what() << '\n';
    return kExitConfig;
  }
  return kExitOk;
}
