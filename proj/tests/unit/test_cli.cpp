#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <iterator>
#include <sstream>

#include "bclean/errors.hpp"
#include "commands.hpp"
#include "config.hpp"

using namespace bclean;
using namespace bclean::cli;
namespace fs = std::filesystem;

namespace {

class TempDir {
 public:
  TempDir() {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    path_ = fs::temp_directory_path() /
            ("bclean_" + std::string(info->test_suite_name()) + "_" + info->name());
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  [[nodiscard]] const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Json small_scene_json(std::size_t bins = 16) {
  return Json::parse(R"({
    "speed_of_sound": 343,
    "array": {"line": {"start": [-0.5, 0, 0], "end": [0.5, 0, 0], "count": 8}},
    "focus_grid": {"line": {"x_min": -0.5, "x_max": 0.5, "step": 0.05, "y": 0.5, "z": 0}},
    "frequencies": {"first_hz": 1000, "bin_width_hz": 250, "count": )" +
                     std::to_string(bins) + R"(},
    "sources": [
      {"label": "A", "position": [-0.2, 0.5, 0], "spectrum": {"type": "flat", "level_db": 0}},
      {"label": "B", "position": [0.25, 0.5, 0], "spectrum": {"type": "linear_db", "start_db": -3, "end_db": -9}}
    ]
  })");
}

std::string config_error(const Json& doc) {
  try {
    (void)scene_from_json(doc);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

int run_tool(const std::string& args) {
  const std::string cmd = std::string(BCLEAN_TOOL_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

void write_small_scene(const fs::path& dir, std::size_t bins = 16) {
  save_json(dir / "scene.json", small_scene_json(bins));
  std::ostringstream log;
  run_synth({std::nullopt, dir / "scene.json", std::nullopt, dir}, log);
}

}  // namespace

TEST(SceneConfig, MissingKeyIsNamed) {
  Json doc = small_scene_json();
  doc["sources"][1].erase("position");
  EXPECT_NE(config_error(doc).find("sources[1].position"), std::string::npos) << config_error(doc);
  doc = small_scene_json();
  doc["frequencies"].erase("count");
  EXPECT_NE(config_error(doc).find("frequencies.count"), std::string::npos);
}

TEST(SceneConfig, WrongTypesAreNamed) {
  Json doc = small_scene_json();
  doc["sources"][0]["spectrum"]["type"] = "pink";
  EXPECT_NE(config_error(doc).find("sources[0].spectrum.type"), std::string::npos);
  doc = small_scene_json();
  doc["array"]["line"]["count"] = -3;
  EXPECT_NE(config_error(doc).find("array.line.count"), std::string::npos);
  doc = small_scene_json();
  doc["sources"][0]["position"] = Json::array({1, 2});
  EXPECT_NE(config_error(doc).find("sources[0].position"), std::string::npos);
}

TEST(SceneConfig, ParseErrorsCarryLineNumbers) {
  TempDir tmp;
  std::ofstream(tmp.path() / "bad.json") << "{\n  \"array\": {\n    \"positions\": [1, 2,]\n}";
  try {
    (void)load_json(tmp.path() / "bad.json");
    FAIL() << "expected a parse error";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
  }
}

TEST(SceneConfig, RoundTripReproducesTheCsm) {
  for (const auto& scene : {scene_from_json(small_scene_json()), case1_scene(8)}) {
    const SceneSpec back = scene_from_json(scene_to_json(scene));
    EXPECT_TRUE(synthesize_csm(back) == synthesize_csm(scene));
    EXPECT_EQ(back.grid.points(), scene.grid.points());
    EXPECT_EQ(back.freqs.frequencies(), scene.freqs.frequencies());
    EXPECT_EQ(ground_truth_db(back), ground_truth_db(scene));
  }
}

TEST(RoiConfig, RoundTripAndLabelLinks) {
  const std::vector<std::string> labels{"A", "B"};
  const std::vector<RegionOfInterest> rois{{"A", Segment{-0.3, -0.1}, 0},
                                           {"B", Circle{0.2, 0.5, 0.05}, 1},
                                           {"P", Polygon{{{0, 0}, {1, 0}, {0, 1}}}, std::nullopt}};
  const auto back = rois_from_json(rois_to_json(rois, labels), labels);
  ASSERT_EQ(back.size(), 3u);
  EXPECT_EQ(back[0].source, 0u);
  EXPECT_EQ(back[1].source, 1u);
  EXPECT_FALSE(back[2].source.has_value());
  EXPECT_EQ(std::get<Circle>(back[1].shape).radius, 0.05);
  EXPECT_THROW((void)rois_from_json(Json::parse(R"({"rois":[{"segment":[0,1],"source":"Z"}]})"), labels),
               ConfigError);
}

TEST(SolverFlags, ValidationAndPrecedence) {
  SolverFlags f;
  f.solver = "clean-sc";
  f.alpha = 1.5;
  EXPECT_THROW((void)resolve_solver(f, 3), ConfigError);
  f.alpha = 0.9;
  f.interval_hz = 2048.0;
  EXPECT_THROW((void)resolve_solver(f, 3), ConfigError);
  f.solver = "b-clean-sc";
  const auto c = resolve_solver(f, 3);
  EXPECT_EQ(c.kind, SolverKind::b_clean_sc);
  EXPECT_EQ(c.config.loop_gain, 0.9);
  EXPECT_EQ(c.config.max_iterations, 30u);
  EXPECT_EQ(c.config.interval.kind(), IntervalSpec::Kind::hz);
  f.interval_bins = 4;
  EXPECT_THROW((void)resolve_solver(f, 3), ConfigError);
  f.solver = "dirty";
  f.interval_bins.reset();
  EXPECT_THROW((void)resolve_solver(f, 3), ConfigError);
}

TEST(SolverFlags, ConfigFileThenFlags) {
  TempDir tmp;
  save_json(tmp.path() / "solver.json",
            Json::parse(R"({"solver":"b-clean-sc","alpha":0.2,"iterations":7,"interval":{"bins":8}})"));
  SolverFlags f;
  f.config = tmp.path() / "solver.json";
  f.iters = 11;
  const auto c = resolve_solver(f, 3);
  EXPECT_EQ(c.kind, SolverKind::b_clean_sc);
  EXPECT_EQ(c.config.loop_gain, 0.2);
  EXPECT_EQ(c.config.max_iterations, 11u);
  EXPECT_EQ(c.config.interval.bin_count(), 8u);
  const auto again = solver_from_json(solver_to_json(c), 3);
  EXPECT_EQ(again.config.interval.bin_count(), 8u);
  EXPECT_EQ(again.config.max_iterations, 11u);
}

TEST(Synth, PresetsWriteExpectedContainers) {
  TempDir tmp;
  std::ostringstream log;
  run_synth({"case1", std::nullopt, 16, tmp.path() / "c1"}, log);
  const auto c1 = read_csm(tmp.path() / "c1" / "csm.bin");
  EXPECT_EQ(c1.freqs.size(), 256u);
  EXPECT_EQ(c1.csm.mics(), 16u);
  EXPECT_TRUE(c1.csm == synthesize_csm(case1_scene(16)));
  for (const char* f : {"ground_truth.json", "scene.json", "rois.json"}) {
    EXPECT_TRUE(fs::exists(tmp.path() / "c1" / f)) << f;
  }
  const auto gt = ground_truth_from_json(load_json(tmp.path() / "c1" / "ground_truth.json"));
  EXPECT_EQ(gt.psd_db, ground_truth_db(case1_scene(16)));

  run_synth({"case2-analog", std::nullopt, std::nullopt, tmp.path() / "c2"}, log);
  const auto c2 = read_csm(tmp.path() / "c2" / "csm.bin");
  EXPECT_EQ(c2.freqs.size(), 128u);
  EXPECT_EQ(c2.csm.mics(), 49u);
}

TEST(Synth, NeedsExactlyOneInput) {
  std::ostringstream log;
  EXPECT_THROW(run_synth({}, log), ConfigError);
  EXPECT_THROW(run_synth({"case3", std::nullopt, std::nullopt, "."}, log), ConfigError);
}

TEST(Solve, OutputsAreByteIdenticalAcrossRunsAndThreads) {
  TempDir tmp;
  write_small_scene(tmp.path());
  std::ostringstream log;
  auto run = [&](const std::string& name, std::size_t threads) {
    SolveOptions opt;
    opt.csm = tmp.path() / "csm.bin";
    opt.solver.solver = "b-clean-sc";
    opt.solver.interval_bins = 4;
    opt.solver.threads = threads;
    opt.out_dir = tmp.path() / name;
    run_solve(opt, log);
  };
  run("a", 1);
  run("b", 1);
  run("c", 3);
  for (const char* f : {"clean_map.csv", "trace.csv", "stops.csv", "residual_summary.csv",
                        "residual_csm.bin"}) {
    const auto a = slurp(tmp.path() / "a" / f);
    EXPECT_FALSE(a.empty()) << f;
    EXPECT_EQ(a, slurp(tmp.path() / "b" / f)) << f;
    EXPECT_EQ(a, slurp(tmp.path() / "c" / f)) << f;
  }
  EXPECT_EQ(slurp(tmp.path() / "a" / "manifest.json"), slurp(tmp.path() / "b" / "manifest.json"));
}

TEST(Solve, CleanMapCsvRoundTrip) {
  TempDir tmp;
  const auto scene = scene_from_json(small_scene_json());
  SolverChoice choice{SolverKind::clean_sc, SolverConfig::clean_sc_defaults(2)};
  const CsmFile csm{scene.array, scene.freqs, synthesize_csm(scene)};
  const auto r = solve(choice, csm, scene.grid, scene.speed_of_sound);
  write_clean_map_csv(tmp.path() / "q.csv", r.clean, scene.grid, scene.freqs, 1.0, 343.0);
  const auto back = read_clean_map_csv(tmp.path() / "q.csv", scene.grid, scene.freqs);
  EXPECT_LE((back.values - r.clean.values).cwiseAbs().maxCoeff(),
            1e-14 * r.clean.values.maxCoeff());
  EXPECT_EQ((back.values.array() != 0.0).count(), (r.clean.values.array() != 0.0).count());

  const std::string header = slurp(tmp.path() / "q.csv").substr(0, 35);
  EXPECT_EQ(header, "bin_hz,he,point_index,x,y,z,psd_db\n");
}

TEST(Solve, FormatsSeventeenDigits) {
  EXPECT_EQ(format_double(0.1), "0.10000000000000001");
  EXPECT_EQ(format_double(kSilentDb), "-inf");
  EXPECT_EQ(std::stod(format_double(1.0 / 3.0)), 1.0 / 3.0);
}

TEST(Metrics, PerfectAndShiftedFixtures) {
  TempDir tmp;
  write_small_scene(tmp.path());
  const auto scene = scene_from_json(load_json(tmp.path() / "scene.json"));
  const auto gt = ground_truth_db(scene);
  PowerMap q{Eigen::MatrixXd::Zero(16, static_cast<Eigen::Index>(scene.grid.size())), MapRole::clean};
  for (Eigen::Index i = 0; i < 16; ++i) {
    q.values(i, 6) = from_db(gt[0][static_cast<std::size_t>(i)]);   // x = -0.2
    q.values(i, 15) = from_db(gt[1][static_cast<std::size_t>(i)]);  // x = 0.25
  }
  std::ostringstream out;
  for (double shift : {0.0, 5.0}) {
    const PowerMap shifted{q.values * from_db(shift), MapRole::clean};
    write_clean_map_csv(tmp.path() / "q.csv", shifted, scene.grid, scene.freqs, 1.0, 343.0);
    run_metrics({tmp.path() / "q.csv", tmp.path() / "ground_truth.json",
                 tmp.path() / "rois.json", std::nullopt, tmp.path()},
                out);
    const auto m = load_json(tmp.path() / "metrics.json");
    EXPECT_NEAR(m["correct_psd_percent"].get<double>(), shift == 0.0 ? 100.0 : 0.0, 1e-9);
    EXPECT_NEAR(m["mean_error_db"].get<double>(), shift, 1e-9);
    EXPECT_TRUE(m["snr_db"].is_null());
    for (const auto& v : m["noise_db"]) EXPECT_TRUE(v.is_null());
  }
  EXPECT_NE(out.str().find("overall"), std::string::npos);
}

TEST(Metrics, GridMismatchIsReported) {
  TempDir tmp;
  write_small_scene(tmp.path());
  std::ofstream(tmp.path() / "q.csv") << "bin_hz,he,point_index,x,y,z,psd_db\n"
                                      << "1000,2.9,3,0.9,0.5,0,-1\n";
  std::ostringstream out;
  EXPECT_THROW(run_metrics({tmp.path() / "q.csv", tmp.path() / "ground_truth.json",
                            tmp.path() / "rois.json", std::nullopt, tmp.path()},
                           out),
               ConfigError);
  std::ofstream(tmp.path() / "q.csv") << "bin_hz,he,point_index,x,y,z,psd_db\n"
                                      << "1010,2.9,0,-0.5,0.5,0,-1\n";
  EXPECT_THROW(run_metrics({tmp.path() / "q.csv", tmp.path() / "ground_truth.json",
                            tmp.path() / "rois.json", std::nullopt, tmp.path()},
                           out),
               ConfigError);
}

TEST(Sweep, SizesParse) {
  EXPECT_EQ(parse_sizes("1,2,4,all"), (std::vector<std::size_t>{1, 2, 4, 0}));
  EXPECT_THROW((void)parse_sizes("1,x"), ConfigError);
  EXPECT_THROW((void)parse_sizes("0"), ConfigError);
}

TEST(Sweep, DefaultSizesAndSizeOneEqualsCleanSc) {
  TempDir tmp;
  write_small_scene(tmp.path(), 128);
  std::ostringstream out;
  SweepOptions opt;
  opt.csm = tmp.path() / "csm.bin";
  opt.solver.iters = 6;
  opt.out_dir = tmp.path();
  run_sweep(opt, out);
  const std::string csv = slurp(tmp.path() / "sweep.csv");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 9);
  EXPECT_EQ(csv.rfind("128,1,", std::string::npos) != std::string::npos, true);

  const auto scene = scene_from_json(load_json(tmp.path() / "scene.json"));
  const CsmFile csm = read_csm(tmp.path() / "csm.bin");
  const auto rois = rois_from_json(load_json(tmp.path() / "rois.json"), {"A", "B"});
  const auto gt = ground_truth_db(scene);
  auto cfg = SolverConfig::b_clean_sc_defaults(2, IntervalSpec::bins(1));
  cfg.max_iterations = 6;
  const auto rows = sweep(cfg, csm, scene.grid, 343.0, rois, gt, {1});
  const auto plain = solve({SolverKind::clean_sc, cfg}, csm, scene.grid, 343.0);
  const auto ref = evaluate(plain.clean, scene.grid, rois, gt);
  EXPECT_EQ(rows[0].report.correct_psd_percent, ref.correct_psd_percent);
  EXPECT_EQ(rows[0].report.mean_error_db, ref.mean_error_db);
  EXPECT_EQ(rows[0].report.snr_db, ref.snr_db);
}

TEST(Tool, ExitCodes) {
  TempDir tmp;
  const std::string dir = tmp.path().string();
  EXPECT_EQ(run_tool("synth --preset case1 --mics 8 --out-dir " + dir), 0);
  EXPECT_EQ(run_tool("solve --csm " + dir + "/csm.bin --alpha 1.5 --out-dir " + dir), 2);
  EXPECT_EQ(run_tool("solve --csm " + dir + "/csm.bin --solver b-clean-sc --interval-hz 2048 "
                     "--alpha 0.1 --iters 3 --dr --out-dir " + dir + "/b"),
            0);
  EXPECT_EQ(run_tool("metrics --clean-map " + dir + "/b/clean_map.csv --gt " + dir +
                     "/ground_truth.json --rois " + dir + "/rois.json --out-dir " + dir + "/b"),
            0);
  EXPECT_EQ(run_tool("frobnicate"), 2);
  EXPECT_EQ(run_tool("solve --csm " + dir + "/missing.bin"), 2);

  Json doc = small_scene_json();
  doc["sources"][0]["position"] = Json::array({0.5, 0, 0});  // on a microphone
  save_json(tmp.path() / "singular.json", doc);
  EXPECT_EQ(run_tool("synth --scene " + dir + "/singular.json --out-dir " + dir + "/s"), 3);
  doc = small_scene_json();
  doc["sources"][0].erase("position");
  save_json(tmp.path() / "broken.json", doc);
  EXPECT_EQ(run_tool("synth --scene " + dir + "/broken.json --out-dir " + dir + "/s"), 2);
}
