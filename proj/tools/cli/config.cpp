#include "config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "bclean/errors.hpp"

namespace bclean::cli {
namespace {

// Walks a JSON document while remembering where it is, so every error can
// name the offending key.
class Node {
 public:
  Node(const Json& j, std::string path) : j_(j), path_(std::move(path)) {}

  [[nodiscard]] const std::string& path() const { return path_; }
  [[nodiscard]] const Json& json() const { return j_; }

  [[nodiscard]] bool has(const std::string& key) const {
    return j_.is_object() && j_.contains(key) && !j_.at(key).is_null();
  }

  [[nodiscard]] Node at(const std::string& key) const {
    if (!j_.is_object()) fail("expected an object");
    if (!has(key)) {
      throw ConfigError("missing key '" + join(key) + "'");
    }
    return {j_.at(key), join(key)};
  }

  [[nodiscard]] Node at(std::size_t index) const {
    return {j_.at(index), path_ + "[" + std::to_string(index) + "]"};
  }

  [[nodiscard]] std::size_t size() const {
    if (!j_.is_array()) fail("expected an array");
    return j_.size();
  }

  [[nodiscard]] double number() const {
    if (!j_.is_number()) fail("expected a number");
    const double v = j_.get<double>();
    if (!std::isfinite(v)) fail("expected a finite number");
    return v;
  }

  [[nodiscard]] std::size_t count() const {
    if (!j_.is_number_integer() || j_.get<long long>() < 0) {
      fail("expected a non-negative integer");
    }
    return j_.get<std::size_t>();
  }

  [[nodiscard]] bool boolean() const {
    if (!j_.is_boolean()) fail("expected true or false");
    return j_.get<bool>();
  }

  [[nodiscard]] std::string string() const {
    if (!j_.is_string()) fail("expected a string");
    return j_.get<std::string>();
  }

  [[nodiscard]] Vec3 vec3() const {
    if (!j_.is_array() || j_.size() != 3) fail("expected [x, y, z]");
    return {at(0).number(), at(1).number(), at(2).number()};
  }

  [[nodiscard]] Eigen::Vector2d vec2() const {
    if (!j_.is_array() || j_.size() != 2) fail("expected [x, y]");
    return {at(0).number(), at(1).number()};
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw ConfigError("key '" + (path_.empty() ? std::string("<root>") : path_) +
                      "': " + what);
  }

 private:
  [[nodiscard]] std::string join(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }
  const Json& j_;
  std::string path_;
};

Json vec3_json(const Vec3& v) { return Json::array({v.x(), v.y(), v.z()}); }

Spectrum spectrum_from(const Node& n) {
  const std::string type = n.at("type").string();
  if (type == "flat") return FlatSpectrum{n.at("level_db").number()};
  if (type == "linear_db") {
    return LinearDbSpectrum{n.at("start_db").number(), n.at("end_db").number()};
  }
  if (type == "band") {
    return BandSpectrum{n.at("f_lo").number(), n.at("f_hi").number(),
                        n.at("level_db").number()};
  }
  n.at("type").fail("unknown spectrum type '" + type +
                    "' (flat, linear_db, band)");
}

Json spectrum_json(const Spectrum& s) {
  if (const auto* f = std::get_if<FlatSpectrum>(&s)) {
    return {{"type", "flat"}, {"level_db", f->level_db}};
  }
  if (const auto* l = std::get_if<LinearDbSpectrum>(&s)) {
    return {{"type", "linear_db"}, {"start_db", l->start_db}, {"end_db", l->end_db}};
  }
  const auto& b = std::get<BandSpectrum>(s);
  return {{"type", "band"}, {"f_lo", b.f_lo}, {"f_hi", b.f_hi}, {"level_db", b.level_db}};
}

MicArray array_from(const Node& n) {
  std::optional<Vec3> reference;
  if (n.has("reference_point")) reference = n.at("reference_point").vec3();
  std::vector<Vec3> pos;
  if (n.has("positions")) {
    const Node list = n.at("positions");
    for (std::size_t m = 0; m < list.size(); ++m) pos.push_back(list.at(m).vec3());
  } else if (n.has("line")) {
    const Node l = n.at("line");
    pos = MicArray::line(l.at("start").vec3(), l.at("end").vec3(),
                         l.at("count").count())
              .positions();
  } else if (n.has("rectangular")) {
    const Node r = n.at("rectangular");
    pos = MicArray::rectangular(r.at("nx").count(), r.at("ny").count(),
                                r.at("spacing").number(), r.at("center").vec3())
              .positions();
  } else {
    n.fail("expected one of 'positions', 'line', 'rectangular'");
  }
  return MicArray(std::move(pos), reference);
}

FocusGrid grid_from(const Node& n) {
  if (n.has("line")) {
    const Node l = n.at("line");
    return FocusGrid::line(l.at("x_min").number(), l.at("x_max").number(),
                           l.at("step").number(), l.at("y").number(),
                           l.at("z").number());
  }
  if (n.has("plane")) {
    const Node p = n.at("plane");
    return FocusGrid::plane(p.at("x_min").number(), p.at("x_max").number(),
                            p.at("y_min").number(), p.at("y_max").number(),
                            p.at("step").number(), p.at("z").number());
  }
  if (n.has("points")) {
    const Node list = n.at("points");
    std::vector<Vec3> pts;
    for (std::size_t j = 0; j < list.size(); ++j) pts.push_back(list.at(j).vec3());
    std::optional<GridShape> shape;
    if (n.has("shape")) {
      const Node s = n.at("shape");
      shape = GridShape{s.at(0).count(), s.at(1).count()};
    }
    Vec3 spacing = Vec3::Zero();
    if (n.has("spacing")) spacing = n.at("spacing").vec3();
    return FocusGrid(std::move(pts), shape, spacing);
  }
  n.fail("expected one of 'line', 'plane', 'points'");
}

FrequencyGrid freqs_from(const Node& n) {
  if (n.has("bins")) {
    const Node list = n.at("bins");
    std::vector<double> f;
    for (std::size_t i = 0; i < list.size(); ++i) f.push_back(list.at(i).number());
    return FrequencyGrid(std::move(f), n.at("bin_width_hz").number());
  }
  return FrequencyGrid::uniform(n.at("first_hz").number(),
                                n.at("bin_width_hz").number(),
                                n.at("count").count());
}

std::size_t resolve_source(const Node& n,
                           const std::vector<std::string>& labels) {
  if (n.json().is_number_integer()) {
    const std::size_t s = n.count();
    if (s >= labels.size()) n.fail("source index out of range");
    return s;
  }
  const std::string label = n.string();
  for (std::size_t s = 0; s < labels.size(); ++s) {
    if (labels[s] == label) return s;
  }
  n.fail("unknown source '" + label + "'");
}

}  // namespace

Json load_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open '" + path.string() + "'");
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

void save_json(const std::filesystem::path& path, const Json& doc) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw ConfigError("cannot open '" + path.string() + "' for writing");
  out << doc.dump(2) << '\n';
}

SceneSpec scene_from_json(const Json& doc) {
  const Node root(doc, "");
  double speed = kDefaultSpeedOfSound;
  if (root.has("speed_of_sound")) speed = root.at("speed_of_sound").number();

  std::vector<SourceSpec> sources;
  if (root.has("sources")) {
    const Node list = root.at("sources");
    for (std::size_t s = 0; s < list.size(); ++s) {
      const Node src = list.at(s);
      SourceSpec spec;
      spec.label = src.has("label") ? src.at("label").string()
                                    : "S" + std::to_string(s + 1);
      spec.position = src.at("position").vec3();
      spec.spectrum = spectrum_from(src.at("spectrum"));
      sources.push_back(std::move(spec));
    }
  }
  std::optional<Spectrum> noise;
  if (root.has("self_noise")) noise = spectrum_from(root.at("self_noise"));

  SceneSpec scene{
      .array = array_from(root.at("array")),
      .grid = grid_from(root.at("focus_grid")),
      .freqs = freqs_from(root.at("frequencies")),
      .sources = std::move(sources),
      .mic_self_noise = noise,
      .speed_of_sound = speed,
  };
  validate(scene);
  return scene;
}

Json scene_to_json(const SceneSpec& scene) {
  Json mics = Json::array();
  for (const auto& p : scene.array.positions()) mics.push_back(vec3_json(p));
  Json points = Json::array();
  for (const auto& p : scene.grid.points()) points.push_back(vec3_json(p));
  Json grid = {{"points", points}, {"spacing", vec3_json(scene.grid.spacing())}};
  if (scene.grid.shape()) {
    grid["shape"] = Json::array({scene.grid.shape()->nx, scene.grid.shape()->ny});
  }
  Json sources = Json::array();
  for (const auto& s : scene.sources) {
    sources.push_back({{"label", s.label},
                       {"position", vec3_json(s.position)},
                       {"spectrum", spectrum_json(s.spectrum)}});
  }
  Json doc = {
      {"speed_of_sound", scene.speed_of_sound},
      {"array",
       {{"positions", mics},
        {"reference_point", vec3_json(scene.array.reference_point())}}},
      {"focus_grid", grid},
      {"frequencies",
       {{"bins", scene.freqs.frequencies()},
        {"bin_width_hz", scene.freqs.bin_width()}}},
      {"sources", sources},
  };
  if (scene.mic_self_noise) doc["self_noise"] = spectrum_json(*scene.mic_self_noise);
  return doc;
}

std::vector<RegionOfInterest> rois_from_json(
    const Json& doc, const std::vector<std::string>& source_labels) {
  const Node root(doc, "");
  const Node list = root.at("rois");
  std::vector<RegionOfInterest> rois;
  for (std::size_t r = 0; r < list.size(); ++r) {
    const Node n = list.at(r);
    RegionOfInterest roi;
    roi.label = n.has("label") ? n.at("label").string() : "ROI" + std::to_string(r + 1);
    if (n.has("segment")) {
      const Eigen::Vector2d s = n.at("segment").vec2();
      if (!(s.x() <= s.y())) n.at("segment").fail("expected [x_lo, x_hi] with x_lo <= x_hi");
      roi.shape = Segment{s.x(), s.y()};
    } else if (n.has("circle")) {
      const Node c = n.at("circle");
      const Eigen::Vector2d center = c.at("center").vec2();
      const double radius = c.at("radius").number();
      if (!(radius > 0.0)) c.at("radius").fail("must be positive");
      roi.shape = Circle{center.x(), center.y(), radius};
    } else if (n.has("polygon")) {
      const Node p = n.at("polygon");
      Polygon poly;
      for (std::size_t v = 0; v < p.size(); ++v) poly.vertices.push_back(p.at(v).vec2());
      if (poly.vertices.size() < 3) p.fail("needs at least 3 vertices");
      roi.shape = std::move(poly);
    } else {
      n.fail("expected one of 'segment', 'circle', 'polygon'");
    }
    if (n.has("source")) roi.source = resolve_source(n.at("source"), source_labels);
    rois.push_back(std::move(roi));
  }
  return rois;
}

Json rois_to_json(const std::vector<RegionOfInterest>& rois,
                  const std::vector<std::string>& source_labels) {
  Json list = Json::array();
  for (const auto& roi : rois) {
    Json item = {{"label", roi.label}};
    if (const auto* s = std::get_if<Segment>(&roi.shape)) {
      item["segment"] = Json::array({s->x_lo, s->x_hi});
    } else if (const auto* c = std::get_if<Circle>(&roi.shape)) {
      item["circle"] = {{"center", Json::array({c->cx, c->cy})}, {"radius", c->radius}};
    } else {
      Json verts = Json::array();
      for (const auto& v : std::get<Polygon>(roi.shape).vertices) {
        verts.push_back(Json::array({v.x(), v.y()}));
      }
      item["polygon"] = verts;
    }
    if (roi.source) {
      if (*roi.source < source_labels.size()) {
        item["source"] = source_labels[*roi.source];
      } else {
        item["source"] = *roi.source;
      }
    }
    list.push_back(item);
  }
  return {{"rois", list}};
}

std::string to_string(SolverKind kind) {
  return kind == SolverKind::clean_sc ? "clean-sc" : "b-clean-sc";
}

SolverKind solver_kind_from_string(const std::string& name) {
  if (name == "clean-sc") return SolverKind::clean_sc;
  if (name == "b-clean-sc") return SolverKind::b_clean_sc;
  throw ConfigError("unknown solver '" + name + "' (clean-sc, b-clean-sc)");
}

SolverChoice solver_from_json(const Json& doc, std::size_t source_count) {
  const Node root(doc, "");
  SolverChoice choice;
  choice.kind = root.has("solver") ? solver_kind_from_string(root.at("solver").string())
                                   : SolverKind::clean_sc;
  choice.config = choice.kind == SolverKind::clean_sc
                      ? SolverConfig::clean_sc_defaults(source_count)
                      : SolverConfig::b_clean_sc_defaults(source_count,
                                                          IntervalSpec::all());
  auto& cfg = choice.config;
  if (root.has("alpha")) cfg.loop_gain = root.at("alpha").number();
  if (root.has("iterations")) cfg.max_iterations = root.at("iterations").count();
  if (root.has("diag_removal")) cfg.diag_removal = root.at("diag_removal").boolean();
  if (root.has("ssr_stop_db")) cfg.ssr_stop_db = root.at("ssr_stop_db").number();
  if (root.has("threads")) cfg.threads = root.at("threads").count();
  if (root.has("interval")) {
    const Node iv = root.at("interval");
    if (iv.json().is_string()) {
      if (iv.string() != "all") iv.fail("expected \"all\", {\"bins\": n} or {\"hz\": w}");
      cfg.interval = IntervalSpec::all();
    } else if (iv.has("bins")) {
      cfg.interval = IntervalSpec::bins(iv.at("bins").count());
    } else if (iv.has("hz")) {
      cfg.interval = IntervalSpec::hz(iv.at("hz").number());
    } else {
      iv.fail("expected \"all\", {\"bins\": n} or {\"hz\": w}");
    }
  }
  cfg.validate();
  return choice;
}

Json solver_to_json(const SolverChoice& choice) {
  const auto& cfg = choice.config;
  Json interval;
  switch (cfg.interval.kind()) {
    case IntervalSpec::Kind::bins:
      interval = {{"bins", cfg.interval.bin_count()}};
      break;
    case IntervalSpec::Kind::hz:
      interval = {{"hz", cfg.interval.width_hz()}};
      break;
    case IntervalSpec::Kind::all:
      interval = "all";
      break;
  }
  Json doc = {{"solver", to_string(choice.kind)},
              {"alpha", cfg.loop_gain},
              {"iterations", cfg.max_iterations},
              {"diag_removal", cfg.diag_removal},
              {"interval", interval}};
  doc["ssr_stop_db"] = cfg.ssr_stop_db ? Json(*cfg.ssr_stop_db) : Json(nullptr);
  return doc;
}

GroundTruth ground_truth_of(const SceneSpec& scene) {
  GroundTruth gt;
  gt.speed_of_sound = scene.speed_of_sound;
  gt.aperture = scene.array.size() >= 2 ? scene.array.aperture() : 0.0;
  gt.frequencies = scene.freqs.frequencies();
  for (const auto& s : scene.sources) {
    gt.labels.push_back(s.label);
    gt.positions.push_back(s.position);
  }
  gt.psd_db = ground_truth_db(scene);
  return gt;
}

Json ground_truth_to_json(const GroundTruth& gt) {
  Json sources = Json::array();
  for (std::size_t s = 0; s < gt.labels.size(); ++s) {
    Json levels = Json::array();
    for (double v : gt.psd_db[s]) levels.push_back(is_silent(v) ? Json(nullptr) : Json(v));
    sources.push_back({{"label", gt.labels[s]},
                       {"position", vec3_json(gt.positions[s])},
                       {"psd_db", levels}});
  }
  return {{"format", "bclean-ground-truth"},
          {"version", 1},
          {"speed_of_sound", gt.speed_of_sound},
          {"aperture", gt.aperture},
          {"frequencies", gt.frequencies},
          {"sources", sources}};
}

GroundTruth ground_truth_from_json(const Json& doc) {
  const Node root(doc, "");
  GroundTruth gt;
  gt.speed_of_sound = root.at("speed_of_sound").number();
  gt.aperture = root.at("aperture").number();
  const Node f = root.at("frequencies");
  for (std::size_t i = 0; i < f.size(); ++i) gt.frequencies.push_back(f.at(i).number());
  const Node list = root.at("sources");
  for (std::size_t s = 0; s < list.size(); ++s) {
    const Node src = list.at(s);
    gt.labels.push_back(src.at("label").string());
    gt.positions.push_back(src.at("position").vec3());
    const Node levels = src.at("psd_db");
    if (levels.size() != gt.frequencies.size()) {
      levels.fail("expected one level per frequency");
    }
    std::vector<double> psd;
    for (std::size_t i = 0; i < levels.size(); ++i) {
      const Json& v = levels.json().at(i);
      psd.push_back(v.is_null() ? kSilentDb : levels.at(i).number());
    }
    gt.psd_db.push_back(std::move(psd));
  }
  return gt;
}

}  // namespace bclean::cli
