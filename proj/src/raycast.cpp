#include "lplace/raycast.hpp"

#include <Eigen/Geometry>

#include <numbers>

#include "lplace/parallel.hpp"

namespace lplace {

int LidarSpec::azimuth_steps() const {
  const double steps = points_per_second_per_channel / rotation_hz;
  return static_cast<int>(std::llround(steps));
}

void LidarSpec::validate() const {
  if (channels < 1) throw ConfigError("lidar needs at least one channel");
  if (!(range_max > 0.0)) throw ConfigError("lidar range must be positive");
  if (!(fov_lower < fov_upper)) throw ConfigError("lidar fov_lower must be below fov_upper");
  if (!(fov_horizontal > 0.0 && fov_horizontal <= 360.0))
    throw ConfigError("lidar horizontal fov must be in (0, 360]");
  if (!(rotation_hz > 0.0) || !(points_per_second_per_channel > 0.0))
    throw ConfigError("lidar rates must be positive");
  const double steps = points_per_second_per_channel / rotation_hz;
  if (std::abs(steps - std::round(steps)) > 1e-9 || std::round(steps) < 1.0)
    throw ConfigError("points per second per channel / rotation rate must be a positive integer");
}

void Placement::validate() const {
  if (lidars.empty()) throw ConfigError("placement has no lidars");
  for (const auto& l : lidars)
    if (!std::isfinite(l.x) || !std::isfinite(l.y) || !std::isfinite(l.z) || !std::isfinite(l.roll))
      throw ConfigError("placement has non-finite extrinsics");
  spec.validate();
}

Eigen::Matrix3Xd beam_directions(const LidarSpec& spec) {
  spec.validate();
  const int steps = spec.azimuth_steps();
  const double deg = std::numbers::pi / 180.0;
  Eigen::Matrix3Xd dirs(3, static_cast<Eigen::Index>(spec.channels) * steps);
  for (int k = 0; k < spec.channels; ++k) {
    const double elevation =
        spec.channels == 1
            ? 0.5 * (spec.fov_lower + spec.fov_upper)
            : spec.fov_lower + (spec.fov_upper - spec.fov_lower) * k / static_cast<double>(spec.channels - 1);
    const double ce = std::cos(elevation * deg), se = std::sin(elevation * deg);
    for (int j = 0; j < steps; ++j) {
      const double azimuth = spec.fov_horizontal * j / static_cast<double>(steps);
      const double ca = std::cos(azimuth * deg), sa = std::sin(azimuth * deg);
      Eigen::Vector3d d(ce * ca, ce * sa, se);
      dirs.col(static_cast<Eigen::Index>(k) * steps + j) = d.normalized();
    }
  }
  return dirs;
}

Eigen::Matrix3d roll_rotation(double roll) {
  return Eigen::AngleAxisd(roll, Eigen::Vector3d::UnitX()).toRotationMatrix();
}

std::vector<Ray> gen_rays(const LidarExtrinsic& ext, const LidarSpec& spec) {
  const Eigen::Matrix3Xd dirs = roll_rotation(ext.roll) * beam_directions(spec);
  std::vector<Ray> rays;
  rays.reserve(static_cast<std::size_t>(dirs.cols()));
  for (Eigen::Index i = 0; i < dirs.cols(); ++i) rays.push_back({ext.position(), dirs.col(i).normalized()});
  return rays;
}

std::vector<VoxelId> traverse(const Ray& ray, const RoiGrid& grid, double t_max) {
  std::vector<VoxelId> out;
  traverse_visit(ray.origin, ray.direction, grid, t_max, [&](VoxelId id) {
    out.push_back(id);
    return true;
  });
  return out;
}

void CoverageSet::merge(const CoverageSet& other) {
  if (other.voxel_count_ != voxel_count_) throw MismatchError("coverage sets over different grids");
  for (std::size_t w = 0; w < words_.size(); ++w) words_[w] |= other.words_[w];
}

std::size_t CoverageSet::n_covered() const {
  std::size_t n = 0;
  for (std::uint64_t w : words_) n += static_cast<std::size_t>(std::popcount(w));
  return n;
}

std::vector<VoxelId> CoverageSet::ids() const {
  std::vector<VoxelId> out;
  out.reserve(n_covered());
  for_each([&](VoxelId v) { out.push_back(v); });
  return out;
}

bool CoverageSet::is_subset_of(const CoverageSet& other) const {
  if (other.voxel_count_ != voxel_count_) return false;
  for (std::size_t w = 0; w < words_.size(); ++w)
    if (words_[w] & ~other.words_[w]) return false;
  return true;
}

CoverageSet coverage(const Placement& placement, const ProbField& prob, OcclusionMode occlusion, int threads) {
  placement.validate();
  const RoiGrid& grid = prob.grid();
  const Eigen::Matrix3Xd beams = beam_directions(placement.spec);
  const auto per_lidar = static_cast<std::size_t>(beams.cols());
  const std::size_t total = per_lidar * placement.lidars.size();
  const double t_max = placement.spec.range_max;

  std::vector<Eigen::Matrix3d> rotations;
  for (const auto& l : placement.lidars) rotations.push_back(roll_rotation(l.roll));

  // A ray stops once it reaches a voxel that is likely occupied.
  std::vector<std::uint8_t> blocking;
  if (occlusion.kind == OcclusionMode::Kind::kThreshold) {
    blocking.resize(grid.voxel_count());
    for (std::size_t v = 0; v < blocking.size(); ++v)
      blocking[v] = prob.occupancy(static_cast<VoxelId>(v)) >= occlusion.tau ? 1 : 0;
  }

  const int chunks = chunk_count(total, threads);
  std::vector<CoverageSet> partial(static_cast<std::size_t>(std::max(chunks, 1)), CoverageSet(grid.voxel_count()));
  parallel_for(total, chunks, [&](std::size_t begin, std::size_t end, int worker) {
    CoverageSet& local = partial[static_cast<std::size_t>(worker)];
    for (std::size_t r = begin; r < end; ++r) {
      const std::size_t l = r / per_lidar;
      const Eigen::Vector3d dir =
          (rotations[l] * beams.col(static_cast<Eigen::Index>(r % per_lidar))).normalized();
      const Eigen::Vector3d origin = placement.lidars[l].position();
      if (blocking.empty()) {
        traverse_visit(origin, dir, grid, t_max, [&](VoxelId id) {
          local.insert(id);
          return true;
        });
      } else {
        traverse_visit(origin, dir, grid, t_max, [&](VoxelId id) {
          local.insert(id);
          return blocking[id] == 0;
        });
      }
    }
  });
  for (std::size_t i = 1; i < partial.size(); ++i) partial[0].merge(partial[i]);
  return std::move(partial[0]);
}

CoverageSet coverage(const Placement& placement, const RoiGrid& grid, const ProbField& prob,
                     OcclusionMode occlusion, int threads) {
  if (!(grid == prob.grid())) throw MismatchError("placement grid differs from probability field grid");
  return coverage(placement, prob, occlusion, threads);
}

}  // namespace lplace
