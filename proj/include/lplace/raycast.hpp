#pragma once

#include <Eigen/Core>

#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "lplace/grid.hpp"

namespace lplace {

/// Spinning multi-channel LiDAR. Defaults are a 16-channel unit with a 100 m
/// range, [-24.8, 2.0] degree vertical FOV, 360 degree sweep and
/// 5000 points/s per channel at 20 Hz (250 azimuth steps per revolution).
struct LidarSpec {
  int channels = 16;
  double range_max = 100.0;
  double fov_upper = 2.0;  // degrees
  double fov_lower = -24.8;
  double fov_horizontal = 360.0;
  double points_per_second_per_channel = 5000.0;
  double rotation_hz = 20.0;

  int azimuth_steps() const;
  std::size_t rays_per_frame() const {
    return static_cast<std::size_t>(channels) * static_cast<std::size_t>(azimuth_steps());
  }
  void validate() const;

  bool operator==(const LidarSpec&) const = default;
};

/// Mounting pose in the ego frame (x forward, y left, z up); roll in radians
/// about the sensor's forward axis.
struct LidarExtrinsic {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  double roll = 0.0;

  Eigen::Vector3d position() const { return {x, y, z}; }
  bool operator==(const LidarExtrinsic&) const = default;
};

struct Placement {
  std::string name;
  std::vector<LidarExtrinsic> lidars;
  LidarSpec spec;

  void validate() const;
};

struct Ray {
  Eigen::Vector3d origin;
  Eigen::Vector3d direction;  // unit norm
};

/// Unit beam directions in the sensor frame before roll, channel-major: the
/// column for (channel k, azimuth step j) is k * azimuth_steps + j.
Eigen::Matrix3Xd beam_directions(const LidarSpec& spec);

/// Rotation about the forward (x) axis.
Eigen::Matrix3d roll_rotation(double roll);

/// channels x azimuth_steps rays for one sensor.
std::vector<Ray> gen_rays(const LidarExtrinsic& ext, const LidarSpec& spec);

/// Amanatides-Woo traversal of the segment [origin, origin + t_max * dir]
/// through `grid`, calling visit(id) for every voxel whose interior the
/// segment crosses, in entry order. Traversal stops early when visit returns
/// false. Segments starting outside the grid are clipped to their entry
/// point. Axis-parallel directions need no special casing by the caller.
template <typename Visit>
void traverse_visit(const Eigen::Vector3d& origin, const Eigen::Vector3d& dir, const RoiGrid& grid,
                    double t_max, Visit&& visit) {
  constexpr double kInf = std::numeric_limits<double>::infinity();
  double t_enter = 0.0;
  double t_exit = t_max;
  for (int a = 0; a < 3; ++a) {
    const double lo = grid.origin[a];
    const double hi = lo + grid.resolution[a] * grid.dims[a];
    if (dir[a] == 0.0) {
      if (!(origin[a] > lo && origin[a] < hi)) return;
      continue;
    }
    double ta = (lo - origin[a]) / dir[a];
    double tb = (hi - origin[a]) / dir[a];
    if (ta > tb) std::swap(ta, tb);
    t_enter = std::max(t_enter, ta);
    t_exit = std::min(t_exit, tb);
  }
  if (!(t_enter < t_exit)) return;

  int cell[3];
  int step[3];
  double t_next[3];
  const Eigen::Vector3d entry = origin + t_enter * dir;
  for (int a = 0; a < 3; ++a) {
    const double rel = (entry[a] - grid.origin[a]) / grid.resolution[a];
    // A point on a voxel face belongs to the voxel the ray is heading into.
    int c = dir[a] < 0.0 ? static_cast<int>(std::ceil(rel)) - 1 : static_cast<int>(std::floor(rel));
    c = std::clamp(c, 0, grid.dims[a] - 1);
    cell[a] = c;
    step[a] = dir[a] > 0.0 ? 1 : (dir[a] < 0.0 ? -1 : 0);
    t_next[a] = step[a] == 0 ? kInf
                             : (grid.origin[a] + (c + (step[a] > 0 ? 1 : 0)) * grid.resolution[a] - origin[a]) /
                                   dir[a];
  }
  const long stride[3] = {1, grid.dims[0], static_cast<long>(grid.dims[0]) * grid.dims[1]};
  long id = cell[0] + stride[1] * cell[1] + stride[2] * cell[2];

  while (true) {
    if (!visit(static_cast<VoxelId>(id))) return;
    int a = 0;
    if (t_next[1] < t_next[a]) a = 1;
    if (t_next[2] < t_next[a]) a = 2;
    if (t_next[a] >= t_exit) return;
    cell[a] += step[a];
    if (cell[a] < 0 || cell[a] >= grid.dims[a]) return;
    id += stride[a] * step[a];
    t_next[a] = (grid.origin[a] + (cell[a] + (step[a] > 0 ? 1 : 0)) * grid.resolution[a] - origin[a]) / dir[a];
  }
}

/// Voxel ids crossed by the segment, in entry order.
std::vector<VoxelId> traverse(const Ray& ray, const RoiGrid& grid, double t_max);

/// Where a cast ray stops inside the probabilistic grid.
struct OcclusionMode {
  enum class Kind { kNone, kThreshold };
  Kind kind = Kind::kThreshold;
  double tau = 0.5;

  static OcclusionMode none() { return {Kind::kNone, 1.0}; }
  static OcclusionMode threshold(double tau) { return {Kind::kThreshold, tau}; }
  bool operator==(const OcclusionMode&) const = default;
};

/// Set of voxels reached by a placement's rays, stored as a bitset over the
/// grid's N voxels.
class CoverageSet {
 public:
  explicit CoverageSet(std::size_t voxel_count = 0)
      : voxel_count_(voxel_count), words_((voxel_count + 63) / 64, 0) {}

  void insert(VoxelId v) { words_[v >> 6] |= std::uint64_t{1} << (v & 63); }
  bool contains(VoxelId v) const { return (words_[v >> 6] >> (v & 63)) & 1u; }
  void merge(const CoverageSet& other);

  /// Number of covered voxels, N_j.
  std::size_t n_covered() const;
  bool empty() const { return n_covered() == 0; }
  std::size_t voxel_count() const { return voxel_count_; }
  /// Sorted unique voxel ids.
  std::vector<VoxelId> ids() const;
  bool is_subset_of(const CoverageSet& other) const;

  template <typename F>
  void for_each(F&& f) const {
    for (std::size_t w = 0; w < words_.size(); ++w) {
      std::uint64_t bits = words_[w];
      while (bits) {
        const int b = std::countr_zero(bits);
        f(static_cast<VoxelId>(w * 64 + static_cast<std::size_t>(b)));
        bits &= bits - 1;
      }
    }
  }

  bool operator==(const CoverageSet&) const = default;

 private:
  std::size_t voxel_count_;
  std::vector<std::uint64_t> words_;
};

/// Union of traversed voxels over every ray of every sensor. Under
/// OcclusionMode::threshold(tau) a ray ends after the first voxel whose
/// non-empty probability is >= tau. Deterministic for any thread count.
CoverageSet coverage(const Placement& placement, const ProbField& prob, OcclusionMode occlusion,
                     int threads = 0);

/// Same, checking that `grid` is the field's grid (MismatchError otherwise).
CoverageSet coverage(const Placement& placement, const RoiGrid& grid, const ProbField& prob,
                     OcclusionMode occlusion, int threads = 0);

}  // namespace lplace
