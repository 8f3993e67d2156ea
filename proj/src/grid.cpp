#include "lplace/grid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace lplace {

RoiGrid RoiGrid::from_extent(const Eigen::Vector3d& extent, const Eigen::Vector3d& resolution,
                             const Eigen::Vector3d& origin) {
  RoiGrid grid;
  grid.origin = origin;
  grid.resolution = resolution;
  for (int a = 0; a < 3; ++a) {
    if (!(resolution[a] > 0.0) || !std::isfinite(resolution[a]))
      throw ConfigError("grid resolution must be positive");
    if (!(extent[a] > 0.0) || !std::isfinite(extent[a]))
      throw ConfigError("grid extent must be positive");
    const double ratio = extent[a] / resolution[a];
    const double n = std::round(ratio);
    if (n < 1.0 || std::abs(ratio - n) > 1e-9 * std::max(1.0, n))
      throw ConfigError("grid extent " + std::to_string(extent[a]) +
                        " is not a multiple of resolution " + std::to_string(resolution[a]));
    if (n > static_cast<double>(std::numeric_limits<int>::max() / 4))
      throw ConfigError("grid axis too large");
    grid.dims[a] = static_cast<int>(n);
  }
  grid.validate();
  return grid;
}

RoiGrid RoiGrid::centered(const Eigen::Vector3d& extent, const Eigen::Vector3d& resolution,
                          double z_min) {
  return from_extent(extent, resolution, Eigen::Vector3d(-0.5 * extent.x(), -0.5 * extent.y(), z_min));
}

void RoiGrid::validate() const {
  if (!origin.allFinite()) throw ConfigError("grid origin must be finite");
  if (!((resolution.array() > 0.0).all()) || !resolution.allFinite())
    throw ConfigError("grid resolution must be positive");
  if ((dims.array() < 1).any()) throw ConfigError("grid dimensions must be >= 1");
  if (voxel_count() > std::numeric_limits<VoxelId>::max())
    throw ConfigError("grid has too many voxels");
}

std::optional<Eigen::Vector3i> voxel_index(const Eigen::Vector3d& p, const RoiGrid& grid) {
  Eigen::Vector3i cell;
  for (int a = 0; a < 3; ++a) {
    const double rel = p[a] - grid.origin[a];
    if (!(rel >= 0.0)) return std::nullopt;
    const double f = std::floor(rel / grid.resolution[a]);
    if (f >= static_cast<double>(grid.dims[a])) return std::nullopt;
    cell[a] = static_cast<int>(f);
  }
  return cell;
}

void ClassTable::validate() const {
  if (names.size() < 2) throw ConfigError("class table needs at least two classes");
  if (names.size() >= SogFrame::kUnobserved) throw ConfigError("class table too large");
  if (empty_class_id >= names.size()) throw ConfigError("empty class id out of range");
}

std::optional<ClassId> ClassTable::find(const std::string& name) const {
  auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) return std::nullopt;
  return static_cast<ClassId>(it - names.begin());
}

PSog::PSog(RoiGrid grid, ClassTable classes) : grid_(std::move(grid)), classes_(std::move(classes)) {
  grid_.validate();
  classes_.validate();
  dense_ = classes_.size() <= kDenseClassLimit;
  if (dense_)
    dense_counts_.assign(grid_.voxel_count() * classes_.size(), 0);
  else
    sparse_counts_.resize(grid_.voxel_count());
}

PSog PSog::from_counts(RoiGrid grid, ClassTable classes, std::uint64_t frames_seen,
                       const std::vector<std::uint32_t>& counts) {
  PSog out(std::move(grid), std::move(classes));
  const std::size_t m = out.classes_.size();
  if (counts.size() != out.grid_.voxel_count() * m)
    throw ParseError("count array has " + std::to_string(counts.size()) + " entries, expected " +
                     std::to_string(out.grid_.voxel_count() * m));
  out.frames_seen_ = frames_seen;
  for (std::size_t v = 0; v < out.grid_.voxel_count(); ++v) {
    std::uint64_t total = 0;
    for (std::size_t c = 0; c < m; ++c) {
      const std::uint32_t n = counts[v * m + c];
      total += n;
      if (n == 0) continue;
      if (out.dense_)
        out.dense_counts_[v * m + c] = n;
      else
        out.sparse_counts_[v].emplace_back(static_cast<ClassId>(c), n);
    }
    if (total > frames_seen)
      throw ParseError("voxel " + std::to_string(v) + " has more observations than frames");
  }
  return out;
}

std::uint32_t PSog::count(VoxelId voxel, ClassId cls) const {
  if (dense_) return dense_counts_[static_cast<std::size_t>(voxel) * classes_.size() + cls];
  for (const auto& [c, n] : sparse_counts_[voxel])
    if (c == cls) return n;
  return 0;
}

std::uint64_t PSog::observed_total(VoxelId voxel) const {
  std::uint64_t total = 0;
  if (dense_) {
    const std::size_t m = classes_.size();
    for (std::size_t c = 0; c < m; ++c) total += dense_counts_[voxel * m + c];
  } else {
    for (const auto& entry : sparse_counts_[voxel]) total += entry.second;
  }
  return total;
}

void PSog::increment(VoxelId voxel, ClassId cls) {
  if (dense_) {
    ++dense_counts_[static_cast<std::size_t>(voxel) * classes_.size() + cls];
    return;
  }
  auto& list = sparse_counts_[voxel];
  auto it = std::lower_bound(list.begin(), list.end(), cls,
                             [](const auto& entry, ClassId c) { return entry.first < c; });
  if (it != list.end() && it->first == cls)
    ++it->second;
  else
    list.insert(it, {cls, 1});
}

void PSog::accumulate(const SogFrame& frame) {
  if (!(frame.grid == grid_)) throw MismatchError("frame grid differs from accumulator grid");
  if (frame.labels.size() != grid_.voxel_count())
    throw MismatchError("frame label count differs from voxel count");
  for (ClassId label : frame.labels)
    if (label != SogFrame::kUnobserved && label >= classes_.size())
      throw MismatchError("frame label " + std::to_string(label) + " outside class table");
  for (std::size_t v = 0; v < frame.labels.size(); ++v)
    if (frame.labels[v] != SogFrame::kUnobserved) increment(static_cast<VoxelId>(v), frame.labels[v]);
  ++frames_seen_;
}

std::vector<std::uint32_t> PSog::dense_counts() const {
  if (dense_) return dense_counts_;
  const std::size_t m = classes_.size();
  std::vector<std::uint32_t> out(grid_.voxel_count() * m, 0);
  for (std::size_t v = 0; v < sparse_counts_.size(); ++v)
    for (const auto& [c, n] : sparse_counts_[v]) out[v * m + c] = n;
  return out;
}

PSog accumulate_frame(PSog psog, const SogFrame& frame) {
  psog.accumulate(frame);
  return psog;
}

ProbField::ProbField(RoiGrid grid, ClassTable classes, ProbMatrix probs,
                     std::vector<std::uint8_t> observed)
    : grid_(std::move(grid)),
      classes_(std::move(classes)),
      probs_(std::move(probs)),
      observed_(std::move(observed)) {
  classes_.validate();
  const auto n = static_cast<Eigen::Index>(grid_.voxel_count());
  if (probs_.rows() != n || probs_.cols() != static_cast<Eigen::Index>(classes_.size()))
    throw MismatchError("probability matrix shape does not match grid and class table");
  if (observed_.size() != grid_.voxel_count())
    throw MismatchError("observed flags do not match voxel count");
  entropies_.resize(n);
  for (Eigen::Index v = 0; v < n; ++v) entropies_[v] = entropy_unchecked(probs_.row(v));
}

ProbField finalize(const PSog& psog) {
  const std::uint64_t frames = psog.frames_seen();
  if (frames == 0) throw EmptyAccumulatorError("cannot finalize a P-SOG with zero frames");
  const std::size_t n = psog.grid().voxel_count();
  const std::size_t m = psog.classes().size();
  const ClassId empty = psog.classes().empty_class_id;
  const double inv_t = 1.0 / static_cast<double>(frames);

  ProbMatrix probs = ProbMatrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m));
  std::vector<std::uint8_t> observed(n, 0);
  for (std::size_t v = 0; v < n; ++v) {
    const auto vid = static_cast<VoxelId>(v);
    const std::uint64_t seen = psog.observed_total(vid);
    observed[v] = seen > 0 ? 1 : 0;
    double material = 0.0;
    for (std::size_t c = 0; c < m; ++c) {
      if (c == empty) continue;
      const double p = static_cast<double>(psog.count(vid, static_cast<ClassId>(c))) * inv_t;
      probs(static_cast<Eigen::Index>(v), static_cast<Eigen::Index>(c)) = p;
      material += p;
    }
    // Empty absorbs both explicit empty labels and frames without any points;
    // taking it as the complement keeps each row summing to one.
    probs(static_cast<Eigen::Index>(v), empty) = std::max(0.0, 1.0 - material);
  }
  return ProbField(psog.grid(), psog.classes(), std::move(probs), std::move(observed));
}

}  // namespace lplace
