#pragma once

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "lplace/corrupt.hpp"
#include "lplace/metric.hpp"
#include "lplace/optimizer.hpp"
#include "lplace/raycast.hpp"
#include "lplace/scene.hpp"

namespace lplace::app {

using Json = nlohmann::json;

/// Parses a JSON file. Missing or malformed files raise ConfigError.
Json load_json(const std::filesystem::path& path);

SceneParams scene_params_from_json(const Json& j);
Json to_json(const SceneParams& p);

Json to_json(const ClassTable& classes);
ClassTable class_table_from_json(const Json& j);

/// {"extent": [x, y, z], "resolution": r or [rx, ry, rz], "z_min": z}
/// centered on the ego, or {"origin": [...], "resolution": ..., "dims": [...]}.
RoiGrid roi_from_json(const Json& j);
Json to_json(const RoiGrid& grid);

LidarSpec lidar_spec_from_json(const Json& j);
Json to_json(const LidarSpec& spec);

/// A placement object {"name", "lidars": [{"x","y","z","roll"}], "lidar"?}, or
/// a file {"lidar"?: spec, "placements": [...]}. A top-level "lidar" spec is
/// the default for placements without one.
std::vector<Placement> placements_from_json(const Json& j);
Json to_json(const Placement& p);
std::vector<Placement> load_placements(const std::filesystem::path& path);

/// "segmentation", "smig", or "detection:<class name or id>".
MetricSpec parse_metric(const std::string& text, const ClassTable& classes);
std::string format_metric(const MetricSpec& spec, const ClassTable& classes);

/// "none" or "threshold[:tau]" (tau defaults to 0.5).
OcclusionMode parse_occlusion(const std::string& text);
std::string format_occlusion(const OcclusionMode& mode);

/// String form as in parse_corruption, or
/// {"steps": [{"kind", "param"?}], "seed", "noise_class", "sensor_range"}.
CorruptionSpec corruption_from_json(const Json& j);
Json to_json(const CorruptionSpec& spec);

struct OptimizeRunConfig {
  std::filesystem::path psog;
  std::filesystem::path output_dir;
  LidarSpec lidar;
  int lidar_count = 4;
  Eigen::Vector4d lower{-0.6, -0.7, 2.2, -0.4};
  Eigen::Vector4d upper{0.6, 0.7, 2.8, 0.4};
  double delta = 0.02;
  bool planar = false;
  double planar_z = 2.2;
  double min_mutual_distance = 0.1;
  std::optional<double> lambda;  // empty: estimated from probes
  int iterations = 100;
  int population = 0;
  std::uint64_t seed = 1;
  std::string metric = "segmentation";
  std::string occlusion = "threshold:0.5";
  bool whitened_sigma_path = false;
  std::optional<double> c_c;  // empty: dimension-based default
  std::optional<double> analytic_k_g;
  std::optional<double> initial_sigma;
  /// Optional starting placement; its vector becomes the initial mean.
  std::optional<Placement> initial;

  SearchSpace search_space() const;
  void validate() const;
};

/// Relative paths resolve against `base_dir` (the config file's directory).
OptimizeRunConfig optimize_config_from_json(const Json& j, const std::filesystem::path& base_dir);
Json to_json(const OptimizeRunConfig& c);

}  // namespace lplace::app
