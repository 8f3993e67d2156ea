#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <vector>

#include "lplace/ingest.hpp"

namespace lplace {

/// Default class table of generated scenes.
namespace scene_class {
inline constexpr ClassId kEmpty = 0;
inline constexpr ClassId kGround = 1;
inline constexpr ClassId kBuilding = 2;
inline constexpr ClassId kCar = 3;
inline constexpr ClassId kPedestrian = 4;
inline constexpr ClassId kNoise = 5;
}  // namespace scene_class

ClassTable scene_class_table();

struct Range {
  double lo = 0.0;
  double hi = 0.0;
};

struct BoxSpec {
  int count = 0;
  Range length{1.0, 1.0};
  Range width{1.0, 1.0};
  Range height{1.0, 1.0};
  Range speed{0.0, 0.0};  // m/s; cars move parallel to the ego heading
};

struct CylinderSpec {
  int count = 0;
  Range radius{0.3, 0.3};
  Range height{1.7, 1.7};
  Range speed{0.0, 0.0};  // m/s in a random planar direction
};

/// Procedural desk-scale driving scene. Coordinates are world-frame meters,
/// with the ego starting at the origin and heading along `ego_heading`.
struct SceneParams {
  std::uint64_t rng_seed = 42;
  int n_frames = 40;
  double frame_dt = 0.5;
  double ego_speed = 1.0;
  double ego_heading = 0.0;
  double point_density = 10.0;  // samples per square meter of surface
  double emit_range = 30.0;     // only points within this planar distance of the ego are emitted

  bool ground = true;
  double ground_margin = 30.0;  // ground extends this far around the ego path

  /// Object centers are drawn from this world-frame rectangle (at frame 0).
  Range region_x{-25.0, 25.0};
  Range region_y{-25.0, 25.0};
  /// Objects keep at least this planar clearance from the ego path line.
  double corridor_half_width = 2.5;

  BoxSpec buildings{6, {6.0, 14.0}, {6.0, 14.0}, {4.0, 12.0}, {0.0, 0.0}};
  BoxSpec cars{10, {3.8, 4.8}, {1.7, 2.0}, {1.4, 1.8}, {0.0, 4.0}};
  CylinderSpec pedestrians{8, {0.25, 0.4}, {1.5, 1.9}, {0.5, 1.5}};

  void validate() const;
};

enum class ShapeKind { kBox, kCylinder };

/// Generator geometry for one object; `size` is (length, width, height) for
/// boxes and (radius, radius, height) for cylinders. The base sits on z = 0.
struct ObjectRecord {
  ClassId cls = 0;
  ShapeKind shape = ShapeKind::kBox;
  Eigen::Vector3d base_center = Eigen::Vector3d::Zero();  // at frame 0
  Eigen::Vector3d size = Eigen::Vector3d::Ones();
  Eigen::Vector3d velocity = Eigen::Vector3d::Zero();

  Eigen::Vector3d base_center_at(double t) const { return base_center + velocity * t; }
  /// Distance from `p` (world) to the sampled surface at time t.
  double surface_distance(const Eigen::Vector3d& p, double t) const;
};

struct Scene {
  ClassTable classes;
  std::vector<LabeledCloud> clouds;  // ego-frame points, one per frame
  std::vector<EgoPose> poses;
  std::vector<ObjectRecord> objects;
  double frame_dt = 0.5;
};

/// Generates a scene; bit-identical for a fixed seed regardless of threads.
/// Static surfaces are sampled once, dynamic ones per frame from a stream
/// keyed by (seed, frame).
Scene gen_scene(const SceneParams& params, int threads = 0);

}  // namespace lplace
