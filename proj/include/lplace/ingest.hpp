#pragma once

#include <Eigen/Geometry>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "lplace/grid.hpp"

namespace lplace {

/// Points in a frame's ego coordinates with one semantic label each.
struct LabeledCloud {
  Eigen::Matrix3Xd points;  // one column per point
  std::vector<ClassId> labels;
  std::uint64_t frame_id = 0;

  std::size_t size() const { return labels.size(); }
  void append(const LabeledCloud& other);

  static LabeledCloud from_points(const std::vector<Eigen::Vector3d>& points, std::vector<ClassId> labels,
                                  std::uint64_t frame_id = 0);

  bool operator==(const LabeledCloud& other) const {
    return frame_id == other.frame_id && labels == other.labels && points.cols() == other.points.cols() &&
           points == other.points;
  }
};

/// Planar ego pose in the world frame.
struct EgoPose {
  std::uint64_t frame_id = 0;
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();
  double yaw = 0.0;

  /// Ego-to-world transform.
  Eigen::Isometry3d transform() const;
};

/// Applies `tf` to every point, keeping labels.
LabeledCloud transformed(const LabeledCloud& cloud, const Eigen::Isometry3d& tf);

/// Merges clouds into the ego coordinates of frame `anchor`: each cloud is
/// mapped to the world by its own pose, then by the inverse anchor pose.
/// Throws IngestError when a cloud or the anchor has no pose.
LabeledCloud aggregate_frames(std::span<const LabeledCloud> clouds, std::span<const EgoPose> poses,
                              std::uint64_t anchor);

/// Labels every voxel holding at least one point with the majority class of
/// its points; ties go to the lowest class id. Voxels without points stay
/// unobserved. Points outside the grid are ignored.
SogFrame voxelize_vote(const LabeledCloud& cloud, const RoiGrid& grid, const ClassTable& classes);

/// Text cloud: one "x y z class_id" per line, '#' starts a comment.
LabeledCloud read_cloud(std::istream& in, const std::string& source = "<stream>");
void write_cloud(std::ostream& out, const LabeledCloud& cloud);
LabeledCloud load_cloud(const std::filesystem::path& path, std::uint64_t frame_id = 0);
void save_cloud(const std::filesystem::path& path, const LabeledCloud& cloud);

/// Text poses: one "frame_id tx ty tz yaw" per line.
std::vector<EgoPose> read_poses(std::istream& in, const std::string& source = "<stream>");
void write_poses(std::ostream& out, std::span<const EgoPose> poses);
std::vector<EgoPose> load_poses(const std::filesystem::path& path);
void save_poses(const std::filesystem::path& path, std::span<const EgoPose> poses);

/// Shortest decimal form that parses back to the same double.
std::string format_double(double v);

}  // namespace lplace
