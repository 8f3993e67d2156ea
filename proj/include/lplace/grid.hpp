#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "lplace/errors.hpp"

namespace lplace {

using VoxelId = std::uint32_t;
using ClassId = std::uint16_t;

/// Ego-centered cuboid region of interest split into axis-aligned voxels.
/// Linear voxel ids run i_l fastest, then i_w, then i_h.
struct RoiGrid {
  Eigen::Vector3d origin = Eigen::Vector3d::Zero();  // minimum corner, ego frame
  Eigen::Vector3d resolution = Eigen::Vector3d::Ones();
  Eigen::Vector3i dims = Eigen::Vector3i::Ones();

  /// Builds a grid from side lengths; each extent must be an exact multiple of
  /// its resolution.
  static RoiGrid from_extent(const Eigen::Vector3d& extent, const Eigen::Vector3d& resolution,
                             const Eigen::Vector3d& origin);

  /// Grid centered on the ego origin in x/y with its floor at `z_min`.
  static RoiGrid centered(const Eigen::Vector3d& extent, const Eigen::Vector3d& resolution,
                          double z_min);

  void validate() const;

  Eigen::Vector3d extent() const { return resolution.cwiseProduct(dims.cast<double>()); }
  Eigen::Vector3d max_corner() const { return origin + extent(); }

  std::size_t voxel_count() const {
    return static_cast<std::size_t>(dims.x()) * static_cast<std::size_t>(dims.y()) *
           static_cast<std::size_t>(dims.z());
  }

  bool contains(const Eigen::Vector3i& cell) const {
    return (cell.array() >= 0).all() && (cell.array() < dims.array()).all();
  }

  VoxelId flatten(const Eigen::Vector3i& cell) const {
    return static_cast<VoxelId>(cell.x() + dims.x() * (cell.y() + dims.y() * cell.z()));
  }

  Eigen::Vector3i unflatten(VoxelId id) const {
    const int i = static_cast<int>(id);
    return {i % dims.x(), (i / dims.x()) % dims.y(), i / (dims.x() * dims.y())};
  }

  Eigen::Vector3d voxel_center(const Eigen::Vector3i& cell) const {
    return origin + resolution.cwiseProduct(cell.cast<double>() + Eigen::Vector3d::Constant(0.5));
  }

  bool operator==(const RoiGrid& other) const {
    return origin == other.origin && resolution == other.resolution && dims == other.dims;
  }
};

/// Containing voxel of `p`, or nullopt outside the half-open cuboid.
std::optional<Eigen::Vector3i> voxel_index(const Eigen::Vector3d& p, const RoiGrid& grid);

/// Ordered semantic labels. The "empty" (free space) label is a class too.
struct ClassTable {
  std::vector<std::string> names;
  ClassId empty_class_id = 0;

  std::size_t size() const { return names.size(); }
  void validate() const;
  /// Index of `name`, or nullopt.
  std::optional<ClassId> find(const std::string& name) const;

  bool operator==(const ClassTable&) const = default;
};

/// One frame of semantic labels, one entry per voxel.
struct SogFrame {
  static constexpr ClassId kUnobserved = std::numeric_limits<ClassId>::max();

  RoiGrid grid;
  std::vector<ClassId> labels;

  explicit SogFrame(RoiGrid g) : grid(std::move(g)), labels(grid.voxel_count(), kUnobserved) {}
};

/// Per-voxel class observation counts accumulated over T frames.
///
/// Counts are stored densely (N x M) for M <= kDenseClassLimit and as sorted
/// (class, count) lists otherwise.
class PSog {
 public:
  static constexpr std::size_t kDenseClassLimit = 32;

  PSog(RoiGrid grid, ClassTable classes);

  /// Rebuilds an accumulator from raw voxel-major, class-minor counts.
  static PSog from_counts(RoiGrid grid, ClassTable classes, std::uint64_t frames_seen,
                          const std::vector<std::uint32_t>& counts);

  const RoiGrid& grid() const { return grid_; }
  const ClassTable& classes() const { return classes_; }
  std::uint64_t frames_seen() const { return frames_seen_; }
  bool dense_storage() const { return dense_; }

  std::uint32_t count(VoxelId voxel, ClassId cls) const;
  /// Number of frames in which `voxel` was observed.
  std::uint64_t observed_total(VoxelId voxel) const;

  /// Adds one frame: increments the labeled class of every observed voxel.
  void accumulate(const SogFrame& frame);

  /// Voxel-major, class-minor copy of all counts.
  std::vector<std::uint32_t> dense_counts() const;

 private:
  void increment(VoxelId voxel, ClassId cls);

  RoiGrid grid_;
  ClassTable classes_;
  std::uint64_t frames_seen_ = 0;
  bool dense_ = true;
  std::vector<std::uint32_t> dense_counts_;
  std::vector<std::vector<std::pair<ClassId, std::uint32_t>>> sparse_counts_;
};

/// Value-semantics wrapper around PSog::accumulate.
PSog accumulate_frame(PSog psog, const SogFrame& frame);

using ProbMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Immutable per-voxel class distributions (N x M, rows sum to one) with the
/// per-voxel entropy cached at construction.
class ProbField {
 public:
  ProbField(RoiGrid grid, ClassTable classes, ProbMatrix probs, std::vector<std::uint8_t> observed);

  const RoiGrid& grid() const { return grid_; }
  const ClassTable& classes() const { return classes_; }
  const ProbMatrix& probs() const { return probs_; }
  /// Entropy in nats of each voxel's distribution.
  const Eigen::VectorXd& entropies() const { return entropies_; }
  bool observed(VoxelId v) const { return observed_[v] != 0; }
  const std::vector<std::uint8_t>& observed_flags() const { return observed_; }

  /// Probability that `v` holds any non-empty class.
  double occupancy(VoxelId v) const { return 1.0 - probs_(v, classes_.empty_class_id); }

 private:
  RoiGrid grid_;
  ClassTable classes_;
  ProbMatrix probs_;
  std::vector<std::uint8_t> observed_;
  Eigen::VectorXd entropies_;
};

/// Converts counts to probabilities: p(c) = count_c / T for material classes.
/// Frames in which a voxel received no points count as empty observations, so
/// never-observed voxels become deterministic empty.
ProbField finalize(const PSog& psog);

/// -sum p ln p over a distribution known to be valid; clamped into [0, ln M].
template <typename Derived>
typename Derived::Scalar entropy_unchecked(const Eigen::MatrixBase<Derived>& p) {
  using Scalar = typename Derived::Scalar;
  Scalar h(0);
  for (Eigen::Index c = 0; c < p.size(); ++c) {
    const Scalar pc = p(c);
    if (pc > Scalar(0)) h -= pc * std::log(pc);
  }
  const Scalar h_max = std::log(static_cast<Scalar>(p.size()));
  return std::clamp(h, Scalar(0), h_max);
}

/// Shannon entropy in nats. Throws ValidationError unless p is non-negative
/// and sums to one within 1e-9.
template <typename Derived>
typename Derived::Scalar voxel_entropy(const Eigen::MatrixBase<Derived>& p) {
  using Scalar = typename Derived::Scalar;
  if (p.size() == 0) throw ValidationError("entropy of an empty distribution");
  if ((p.array() < Scalar(0)).any() || !p.allFinite())
    throw ValidationError("distribution has negative or non-finite entries");
  if (std::abs(p.sum() - Scalar(1)) > Scalar(1e-9))
    throw ValidationError("distribution does not sum to 1");
  return entropy_unchecked(p);
}

}  // namespace lplace
