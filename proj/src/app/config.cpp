#include "lplace/app/config.hpp"

#include <algorithm>
#include <fstream>
#include <initializer_list>

#include "lplace/fs_util.hpp"

namespace lplace::app {

namespace {

void check_keys(const Json& j, std::initializer_list<const char*> allowed, const std::string& context) {
  if (!j.is_object()) throw ConfigError(context + " must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; }))
      throw ConfigError("unknown key '" + key + "' in " + context);
  }
}

template <typename T>
T read(const Json& j, const char* key, T fallback, const std::string& context) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const Json::exception& e) {
    throw ConfigError(context + "." + key + ": " + e.what());
  }
}

template <typename T>
T require(const Json& j, const char* key, const std::string& context) {
  if (!j.contains(key)) throw ConfigError(context + " is missing '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const Json::exception& e) {
    throw ConfigError(context + "." + key + ": " + e.what());
  }
}

Eigen::Vector3d vec3(const Json& j, const std::string& context) {
  if (j.is_number()) return Eigen::Vector3d::Constant(j.get<double>());
  if (!j.is_array() || j.size() != 3) throw ConfigError(context + " must be a number or a 3-element array");
  Eigen::Vector3d v;
  for (int i = 0; i < 3; ++i) {
    if (!j[i].is_number()) throw ConfigError(context + " must hold numbers");
    v[i] = j[i].get<double>();
  }
  return v;
}

Eigen::Vector4d vec4(const Json& j, const std::string& context) {
  if (!j.is_array() || j.size() != 4) throw ConfigError(context + " must be a 4-element array [x, y, z, roll]");
  Eigen::Vector4d v;
  for (int i = 0; i < 4; ++i) {
    if (!j[i].is_number()) throw ConfigError(context + " must hold numbers");
    v[i] = j[i].get<double>();
  }
  return v;
}

Range range(const Json& j, const char* key, Range fallback, const std::string& context) {
  if (!j.contains(key)) return fallback;
  const Json& r = j.at(key);
  if (r.is_number()) return {r.get<double>(), r.get<double>()};
  if (!r.is_array() || r.size() != 2 || !r[0].is_number() || !r[1].is_number())
    throw ConfigError(context + "." + key + " must be a number or [lo, hi]");
  return {r[0].get<double>(), r[1].get<double>()};
}

Json range_json(const Range& r) { return Json::array({r.lo, r.hi}); }

BoxSpec box_spec(const Json& j, BoxSpec d, const std::string& context) {
  check_keys(j, {"count", "length", "width", "height", "speed"}, context);
  d.count = read(j, "count", d.count, context);
  d.length = range(j, "length", d.length, context);
  d.width = range(j, "width", d.width, context);
  d.height = range(j, "height", d.height, context);
  d.speed = range(j, "speed", d.speed, context);
  return d;
}

Json box_json(const BoxSpec& b) {
  return {{"count", b.count},
          {"length", range_json(b.length)},
          {"width", range_json(b.width)},
          {"height", range_json(b.height)},
          {"speed", range_json(b.speed)}};
}

LidarExtrinsic extrinsic(const Json& j, const std::string& context) {
  check_keys(j, {"x", "y", "z", "roll"}, context);
  return {require<double>(j, "x", context), require<double>(j, "y", context), require<double>(j, "z", context),
          read(j, "roll", 0.0, context)};
}

Placement placement(const Json& j, const LidarSpec& fallback, std::size_t index) {
  const std::string context = "placement " + std::to_string(index);
  check_keys(j, {"name", "lidars", "lidar"}, context);
  Placement p;
  p.name = read<std::string>(j, "name", "placement_" + std::to_string(index), context);
  p.spec = j.contains("lidar") ? lidar_spec_from_json(j.at("lidar")) : fallback;
  if (!j.contains("lidars") || !j.at("lidars").is_array()) throw ConfigError(context + " needs a 'lidars' array");
  for (std::size_t i = 0; i < j.at("lidars").size(); ++i)
    p.lidars.push_back(extrinsic(j.at("lidars")[i], context + ".lidars[" + std::to_string(i) + "]"));
  p.validate();
  return p;
}

}  // namespace

Json load_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

SceneParams scene_params_from_json(const Json& j) {
  const std::string ctx = "scene";
  check_keys(j, {"seed", "n_frames", "frame_dt", "ego_speed", "ego_heading", "point_density", "emit_range", "ground",
                 "ground_margin", "region_x", "region_y", "corridor_half_width", "buildings", "cars", "pedestrians"},
             ctx);
  SceneParams p;
  p.rng_seed = read(j, "seed", p.rng_seed, ctx);
  p.n_frames = read(j, "n_frames", p.n_frames, ctx);
  p.frame_dt = read(j, "frame_dt", p.frame_dt, ctx);
  p.ego_speed = read(j, "ego_speed", p.ego_speed, ctx);
  p.ego_heading = read(j, "ego_heading", p.ego_heading, ctx);
  p.point_density = read(j, "point_density", p.point_density, ctx);
  p.emit_range = read(j, "emit_range", p.emit_range, ctx);
  p.ground = read(j, "ground", p.ground, ctx);
  p.ground_margin = read(j, "ground_margin", p.ground_margin, ctx);
  p.region_x = range(j, "region_x", p.region_x, ctx);
  p.region_y = range(j, "region_y", p.region_y, ctx);
  p.corridor_half_width = read(j, "corridor_half_width", p.corridor_half_width, ctx);
  if (j.contains("buildings")) p.buildings = box_spec(j.at("buildings"), p.buildings, ctx + ".buildings");
  if (j.contains("cars")) p.cars = box_spec(j.at("cars"), p.cars, ctx + ".cars");
  if (j.contains("pedestrians")) {
    const Json& c = j.at("pedestrians");
    const std::string pctx = ctx + ".pedestrians";
    check_keys(c, {"count", "radius", "height", "speed"}, pctx);
    p.pedestrians.count = read(c, "count", p.pedestrians.count, pctx);
    p.pedestrians.radius = range(c, "radius", p.pedestrians.radius, pctx);
    p.pedestrians.height = range(c, "height", p.pedestrians.height, pctx);
    p.pedestrians.speed = range(c, "speed", p.pedestrians.speed, pctx);
  }
  p.validate();
  return p;
}

Json to_json(const SceneParams& p) {
  return {{"seed", p.rng_seed},
          {"n_frames", p.n_frames},
          {"frame_dt", p.frame_dt},
          {"ego_speed", p.ego_speed},
          {"ego_heading", p.ego_heading},
          {"point_density", p.point_density},
          {"emit_range", p.emit_range},
          {"ground", p.ground},
          {"ground_margin", p.ground_margin},
          {"region_x", range_json(p.region_x)},
          {"region_y", range_json(p.region_y)},
          {"corridor_half_width", p.corridor_half_width},
          {"buildings", box_json(p.buildings)},
          {"cars", box_json(p.cars)},
          {"pedestrians",
           {{"count", p.pedestrians.count},
            {"radius", range_json(p.pedestrians.radius)},
            {"height", range_json(p.pedestrians.height)},
            {"speed", range_json(p.pedestrians.speed)}}}};
}

Json to_json(const ClassTable& classes) { return {{"names", classes.names}, {"empty_class_id", classes.empty_class_id}}; }

ClassTable class_table_from_json(const Json& j) {
  check_keys(j, {"names", "empty_class_id"}, "classes");
  ClassTable t{require<std::vector<std::string>>(j, "names", "classes"), require<ClassId>(j, "empty_class_id", "classes")};
  t.validate();
  return t;
}

RoiGrid roi_from_json(const Json& j) {
  const std::string ctx = "roi";
  check_keys(j, {"extent", "resolution", "z_min", "origin", "dims"}, ctx);
  if (!j.contains("resolution")) throw ConfigError("roi is missing 'resolution'");
  const Eigen::Vector3d res = vec3(j.at("resolution"), "roi.resolution");
  if (j.contains("dims")) {
    if (j.contains("extent") || j.contains("z_min")) throw ConfigError("roi takes either dims/origin or extent/z_min");
    const Eigen::Vector3d d = vec3(j.at("dims"), "roi.dims");
    RoiGrid g;
    g.origin = j.contains("origin") ? vec3(j.at("origin"), "roi.origin") : Eigen::Vector3d::Zero();
    g.resolution = res;
    for (int i = 0; i < 3; ++i) {
      if (d[i] != std::floor(d[i]) || d[i] < 1 || d[i] > 1 << 20) throw ConfigError("roi.dims must be positive integers");
      g.dims[i] = static_cast<int>(d[i]);
    }
    g.validate();
    return g;
  }
  if (!j.contains("extent")) throw ConfigError("roi needs 'extent' or 'dims'");
  if (j.contains("origin")) return RoiGrid::from_extent(vec3(j.at("extent"), "roi.extent"), res, vec3(j.at("origin"), "roi.origin"));
  return RoiGrid::centered(vec3(j.at("extent"), "roi.extent"), res, read(j, "z_min", 0.0, ctx));
}

Json to_json(const RoiGrid& g) {
  return {{"origin", {g.origin.x(), g.origin.y(), g.origin.z()}},
          {"resolution", {g.resolution.x(), g.resolution.y(), g.resolution.z()}},
          {"dims", {g.dims.x(), g.dims.y(), g.dims.z()}}};
}

LidarSpec lidar_spec_from_json(const Json& j) {
  const std::string ctx = "lidar";
  check_keys(j, {"channels", "range_max", "fov_upper", "fov_lower", "fov_horizontal", "points_per_second_per_channel",
                 "rotation_hz"},
             ctx);
  LidarSpec s;
  s.channels = read(j, "channels", s.channels, ctx);
  s.range_max = read(j, "range_max", s.range_max, ctx);
  s.fov_upper = read(j, "fov_upper", s.fov_upper, ctx);
  s.fov_lower = read(j, "fov_lower", s.fov_lower, ctx);
  s.fov_horizontal = read(j, "fov_horizontal", s.fov_horizontal, ctx);
  s.points_per_second_per_channel = read(j, "points_per_second_per_channel", s.points_per_second_per_channel, ctx);
  s.rotation_hz = read(j, "rotation_hz", s.rotation_hz, ctx);
  s.validate();
  return s;
}

Json to_json(const LidarSpec& s) {
  return {{"channels", s.channels},
          {"range_max", s.range_max},
          {"fov_upper", s.fov_upper},
          {"fov_lower", s.fov_lower},
          {"fov_horizontal", s.fov_horizontal},
          {"points_per_second_per_channel", s.points_per_second_per_channel},
          {"rotation_hz", s.rotation_hz}};
}

std::vector<Placement> placements_from_json(const Json& j) {
  if (!j.is_object()) throw ConfigError("placement file must hold a JSON object");
  if (j.contains("placements")) {
    check_keys(j, {"lidar", "placements", "result"}, "placement file");
    const LidarSpec fallback = j.contains("lidar") ? lidar_spec_from_json(j.at("lidar")) : LidarSpec{};
    const Json& list = j.at("placements");
    if (!list.is_array() || list.empty()) throw ConfigError("'placements' must be a non-empty array");
    std::vector<Placement> out;
    for (std::size_t i = 0; i < list.size(); ++i) out.push_back(placement(list[i], fallback, i));
    return out;
  }
  return {placement(j, LidarSpec{}, 0)};
}

Json to_json(const Placement& p) {
  Json lidars = Json::array();
  for (const auto& l : p.lidars) lidars.push_back({{"x", l.x}, {"y", l.y}, {"z", l.z}, {"roll", l.roll}});
  return {{"name", p.name}, {"lidar", to_json(p.spec)}, {"lidars", lidars}};
}

std::vector<Placement> load_placements(const std::filesystem::path& path) {
  try {
    return placements_from_json(load_json(path));
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

MetricSpec parse_metric(const std::string& text, const ClassTable& classes) {
  if (text == "segmentation") return MetricSpec::segmentation();
  if (text == "smig") return {MetricMode::kSmig, 0};
  const std::string prefix = "detection:";
  if (text.rfind(prefix, 0) == 0) {
    const std::string target = text.substr(prefix.size());
    if (auto id = classes.find(target)) return MetricSpec::detection(*id);
    std::size_t used = 0;
    unsigned long id = 0;
    try {
      id = std::stoul(target, &used);
    } catch (const std::logic_error&) {
      used = 0;
    }
    if (used == 0 || used != target.size() || id >= classes.size())
      throw ConfigError("unknown detection target '" + target + "'");
    return MetricSpec::detection(static_cast<ClassId>(id));
  }
  throw ConfigError("metric must be segmentation, smig or detection:<class>, got '" + text + "'");
}

std::string format_metric(const MetricSpec& spec, const ClassTable& classes) {
  if (spec.mode == MetricMode::kDetection)
    return "detection:" + (spec.target < classes.size() ? classes.names[spec.target] : std::to_string(spec.target));
  return to_string(spec.mode);
}

OcclusionMode parse_occlusion(const std::string& text) {
  if (text == "none") return OcclusionMode::none();
  if (text == "threshold") return OcclusionMode::threshold(0.5);
  const std::string prefix = "threshold:";
  if (text.rfind(prefix, 0) == 0) {
    const std::string v = text.substr(prefix.size());
    std::size_t used = 0;
    double tau = 0.0;
    try {
      tau = std::stod(v, &used);
    } catch (const std::logic_error&) {
      used = 0;
    }
    if (used == 0 || used != v.size() || !(tau > 0.0 && tau <= 1.0))
      throw ConfigError("occlusion threshold must be in (0, 1], got '" + v + "'");
    return OcclusionMode::threshold(tau);
  }
  throw ConfigError("occlusion must be none or threshold[:tau], got '" + text + "'");
}

std::string format_occlusion(const OcclusionMode& mode) {
  if (mode.kind == OcclusionMode::Kind::kNone) return "none";
  return "threshold:" + format_double(mode.tau);
}

CorruptionSpec corruption_from_json(const Json& j) {
  if (j.is_string()) return parse_corruption(j.get<std::string>());
  const std::string ctx = "corruption";
  check_keys(j, {"steps", "seed", "noise_class", "sensor_range"}, ctx);
  CorruptionSpec spec;
  spec.seed = read(j, "seed", spec.seed, ctx);
  spec.noise_class = read(j, "noise_class", spec.noise_class, ctx);
  spec.sensor_range = read(j, "sensor_range", spec.sensor_range, ctx);
  if (j.contains("steps")) {
    if (!j.at("steps").is_array()) throw ConfigError("corruption.steps must be an array");
    for (const auto& s : j.at("steps")) {
      check_keys(s, {"kind", "param"}, "corruption step");
      Corruption c{corruption_kind_from_string(require<std::string>(s, "kind", "corruption step")), 0.0};
      c.param = read(s, "param", Corruption::default_param(c.kind), "corruption step");
      spec.steps.push_back(c);
    }
  }
  spec.validate();
  return spec;
}

Json to_json(const CorruptionSpec& spec) {
  Json steps = Json::array();
  for (const auto& s : spec.steps) steps.push_back({{"kind", to_string(s.kind)}, {"param", s.param}});
  return {{"steps", steps}, {"seed", spec.seed}, {"noise_class", spec.noise_class}, {"sensor_range", spec.sensor_range}};
}

SearchSpace OptimizeRunConfig::search_space() const {
  return SearchSpace::placement(lidar_count, lower, upper, delta, planar ? std::optional<double>(planar_z) : std::nullopt);
}

void OptimizeRunConfig::validate() const {
  if (psog.empty()) throw ConfigError("optimize config needs 'psog'");
  if (iterations < 1) throw ConfigError("iterations must be >= 1");
  if (population < 0) throw ConfigError("population must be >= 0");
  lidar.validate();
  search_space();
  ConstraintSpec{min_mutual_distance, lambda.value_or(0.0)}.validate();
  parse_occlusion(occlusion);
  if (initial && static_cast<int>(initial->lidars.size()) != lidar_count)
    throw ConfigError("initial placement has a different number of lidars");
  if (c_c && !(*c_c > 0.0 && *c_c <= 1.0)) throw ConfigError("c_c must be in (0, 1]");
  if (analytic_k_g && !(*analytic_k_g >= 0.0)) throw ConfigError("analytic_k_g must be >= 0");
}

OptimizeRunConfig optimize_config_from_json(const Json& j, const std::filesystem::path& base_dir) {
  const std::string ctx = "optimize";
  check_keys(j, {"psog", "output_dir", "lidar", "lidar_count", "lower", "upper", "delta", "planar", "planar_z",
                 "min_mutual_distance", "lambda", "iterations", "population", "seed", "metric", "occlusion",
                 "whitened_sigma_path", "c_c", "analytic_k_g", "initial_sigma", "initial"},
             ctx);
  auto resolve = [&](const std::string& p) {
    const std::filesystem::path path(p);
    return path.is_absolute() || base_dir.empty() ? path : base_dir / path;
  };
  OptimizeRunConfig c;
  if (j.contains("psog")) c.psog = resolve(require<std::string>(j, "psog", ctx));
  if (j.contains("output_dir")) c.output_dir = resolve(require<std::string>(j, "output_dir", ctx));
  if (j.contains("lidar")) c.lidar = lidar_spec_from_json(j.at("lidar"));
  c.lidar_count = read(j, "lidar_count", c.lidar_count, ctx);
  if (j.contains("lower")) c.lower = vec4(j.at("lower"), "optimize.lower");
  if (j.contains("upper")) c.upper = vec4(j.at("upper"), "optimize.upper");
  c.delta = read(j, "delta", c.delta, ctx);
  c.planar = read(j, "planar", c.planar, ctx);
  c.planar_z = read(j, "planar_z", c.planar_z, ctx);
  c.min_mutual_distance = read(j, "min_mutual_distance", c.min_mutual_distance, ctx);
  if (j.contains("lambda") && !j.at("lambda").is_null()) c.lambda = require<double>(j, "lambda", ctx);
  c.iterations = read(j, "iterations", c.iterations, ctx);
  c.population = read(j, "population", c.population, ctx);
  c.seed = read(j, "seed", c.seed, ctx);
  c.metric = read(j, "metric", c.metric, ctx);
  c.occlusion = read(j, "occlusion", c.occlusion, ctx);
  c.whitened_sigma_path = read(j, "whitened_sigma_path", c.whitened_sigma_path, ctx);
  if (j.contains("c_c") && !j.at("c_c").is_null()) c.c_c = require<double>(j, "c_c", ctx);
  if (j.contains("analytic_k_g") && !j.at("analytic_k_g").is_null())
    c.analytic_k_g = require<double>(j, "analytic_k_g", ctx);
  if (j.contains("initial_sigma") && !j.at("initial_sigma").is_null())
    c.initial_sigma = require<double>(j, "initial_sigma", ctx);
  if (j.contains("initial")) {
    auto ps = placements_from_json(j.at("initial"));
    if (ps.size() != 1) throw ConfigError("optimize.initial must be a single placement");
    c.initial = ps.front();
  }
  return c;
}

Json to_json(const OptimizeRunConfig& c) {
  Json j = {{"psog", c.psog.string()},
            {"output_dir", c.output_dir.string()},
            {"lidar", to_json(c.lidar)},
            {"lidar_count", c.lidar_count},
            {"lower", {c.lower[0], c.lower[1], c.lower[2], c.lower[3]}},
            {"upper", {c.upper[0], c.upper[1], c.upper[2], c.upper[3]}},
            {"delta", c.delta},
            {"planar", c.planar},
            {"planar_z", c.planar_z},
            {"min_mutual_distance", c.min_mutual_distance},
            {"lambda", c.lambda ? Json(*c.lambda) : Json(nullptr)},
            {"iterations", c.iterations},
            {"population", c.population},
            {"seed", c.seed},
            {"metric", c.metric},
            {"occlusion", c.occlusion},
            {"whitened_sigma_path", c.whitened_sigma_path},
            {"c_c", c.c_c ? Json(*c.c_c) : Json(nullptr)},
            {"analytic_k_g", c.analytic_k_g ? Json(*c.analytic_k_g) : Json(nullptr)},
            {"initial_sigma", c.initial_sigma ? Json(*c.initial_sigma) : Json(nullptr)}};
  if (c.initial) j["initial"] = to_json(*c.initial);
  return j;
}

}  // namespace lplace::app
