#include "lplace/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <string_view>
#include <unordered_map>

#include "lplace/fs_util.hpp"

namespace lplace {

LabeledCloud LabeledCloud::from_points(const std::vector<Eigen::Vector3d>& points,
                                       std::vector<ClassId> labels, std::uint64_t frame_id) {
  if (points.size() != labels.size()) throw ValidationError("point and label counts differ");
  LabeledCloud cloud;
  cloud.frame_id = frame_id;
  cloud.points.resize(3, static_cast<Eigen::Index>(points.size()));
  for (std::size_t i = 0; i < points.size(); ++i) cloud.points.col(static_cast<Eigen::Index>(i)) = points[i];
  cloud.labels = std::move(labels);
  return cloud;
}

void LabeledCloud::append(const LabeledCloud& other) {
  const auto n = static_cast<Eigen::Index>(labels.size());
  points.conservativeResize(3, n + static_cast<Eigen::Index>(other.size()));
  points.rightCols(static_cast<Eigen::Index>(other.size())) = other.points;
  labels.insert(labels.end(), other.labels.begin(), other.labels.end());
}

Eigen::Isometry3d EgoPose::transform() const {
  Eigen::Isometry3d tf = Eigen::Isometry3d::Identity();
  tf.linear() = Eigen::AngleAxisd(yaw, Eigen::Vector3d::UnitZ()).toRotationMatrix();
  tf.translation() = translation;
  return tf;
}

LabeledCloud transformed(const LabeledCloud& cloud, const Eigen::Isometry3d& tf) {
  LabeledCloud out;
  out.frame_id = cloud.frame_id;
  out.labels = cloud.labels;
  out.points = (tf.linear() * cloud.points).colwise() + tf.translation();
  return out;
}

LabeledCloud aggregate_frames(std::span<const LabeledCloud> clouds, std::span<const EgoPose> poses,
                              std::uint64_t anchor) {
  std::unordered_map<std::uint64_t, const EgoPose*> by_frame;
  for (const auto& pose : poses) by_frame[pose.frame_id] = &pose;
  auto pose_of = [&](std::uint64_t id) -> const EgoPose& {
    auto it = by_frame.find(id);
    if (it == by_frame.end()) throw IngestError("no pose for frame " + std::to_string(id));
    return *it->second;
  };
  const Eigen::Isometry3d world_to_anchor = pose_of(anchor).transform().inverse();

  std::size_t total = 0;
  for (const auto& c : clouds) total += c.size();
  LabeledCloud out;
  out.frame_id = anchor;
  out.points.resize(3, static_cast<Eigen::Index>(total));
  out.labels.reserve(total);
  Eigen::Index offset = 0;
  for (const auto& cloud : clouds) {
    const Eigen::Isometry3d tf = world_to_anchor * pose_of(cloud.frame_id).transform();
    const auto n = static_cast<Eigen::Index>(cloud.size());
    out.points.middleCols(offset, n) = (tf.linear() * cloud.points).colwise() + tf.translation();
    out.labels.insert(out.labels.end(), cloud.labels.begin(), cloud.labels.end());
    offset += n;
  }
  return out;
}

SogFrame voxelize_vote(const LabeledCloud& cloud, const RoiGrid& grid, const ClassTable& classes) {
  SogFrame frame(grid);
  const std::size_t m = classes.size();
  std::vector<std::pair<VoxelId, ClassId>> hits;
  hits.reserve(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const ClassId label = cloud.labels[i];
    if (label >= m) throw MismatchError("point label " + std::to_string(label) + " outside class table");
    if (auto cell = voxel_index(cloud.points.col(static_cast<Eigen::Index>(i)), grid))
      hits.emplace_back(grid.flatten(*cell), label);
  }
  std::sort(hits.begin(), hits.end());

  for (std::size_t i = 0; i < hits.size();) {
    const VoxelId voxel = hits[i].first;
    ClassId best = hits[i].second;
    std::size_t best_count = 0;
    // Runs are sorted by class, so a strict '>' keeps the lowest id on ties.
    while (i < hits.size() && hits[i].first == voxel) {
      const ClassId cls = hits[i].second;
      std::size_t run = 0;
      while (i < hits.size() && hits[i].first == voxel && hits[i].second == cls) {
        ++run;
        ++i;
      }
      if (run > best_count) {
        best_count = run;
        best = cls;
      }
    }
    frame.labels[voxel] = best;
  }
  return frame;
}

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

std::string_view strip_comment(std::string_view line) {
  const auto hash = line.find('#');
  return hash == std::string_view::npos ? line : line.substr(0, hash);
}

template <typename T>
T parse_field(std::string_view field, const std::string& source, std::size_t line_no, const char* what) {
  T value{};
  const char* end = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(field.data(), end, value);
  if (ec != std::errc() || ptr != end)
    throw ParseError(source, line_no, std::string("bad ") + what + " '" + std::string(field) + "'");
  if constexpr (std::is_floating_point_v<T>) {
    if (!std::isfinite(value)) throw ParseError(source, line_no, std::string("non-finite ") + what);
  }
  return value;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw Error("cannot format double");
  return std::string(buf, ptr);
}

LabeledCloud read_cloud(std::istream& in, const std::string& source) {
  std::vector<Eigen::Vector3d> points;
  std::vector<ClassId> labels;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto fields = split_fields(strip_comment(line));
    if (fields.empty()) continue;
    if (fields.size() != 4)
      throw ParseError(source, line_no, "expected 'x y z class_id', got " + std::to_string(fields.size()) + " fields");
    const Eigen::Vector3d p(parse_field<double>(fields[0], source, line_no, "x"),
                            parse_field<double>(fields[1], source, line_no, "y"),
                            parse_field<double>(fields[2], source, line_no, "z"));
    const auto label = parse_field<unsigned>(fields[3], source, line_no, "class id");
    if (label >= SogFrame::kUnobserved) throw ParseError(source, line_no, "class id too large");
    points.push_back(p);
    labels.push_back(static_cast<ClassId>(label));
  }
  return LabeledCloud::from_points(points, std::move(labels));
}

void write_cloud(std::ostream& out, const LabeledCloud& cloud) {
  std::string buf;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto c = static_cast<Eigen::Index>(i);
    buf.clear();
    buf += format_double(cloud.points(0, c));
    buf += ' ';
    buf += format_double(cloud.points(1, c));
    buf += ' ';
    buf += format_double(cloud.points(2, c));
    buf += ' ';
    buf += std::to_string(cloud.labels[i]);
    buf += '\n';
    out << buf;
  }
}

LabeledCloud load_cloud(const std::filesystem::path& path, std::uint64_t frame_id) {
  std::ifstream in(path);
  if (!in) throw IngestError("cannot open cloud " + path.string());
  LabeledCloud cloud = read_cloud(in, path.string());
  cloud.frame_id = frame_id;
  return cloud;
}

void save_cloud(const std::filesystem::path& path, const LabeledCloud& cloud) {
  write_atomically(path, [&](std::ostream& out) { write_cloud(out, cloud); });
}

std::vector<EgoPose> read_poses(std::istream& in, const std::string& source) {
  std::vector<EgoPose> poses;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto fields = split_fields(strip_comment(line));
    if (fields.empty()) continue;
    if (fields.size() != 5)
      throw ParseError(source, line_no, "expected 'frame_id tx ty tz yaw'");
    EgoPose pose;
    pose.frame_id = parse_field<std::uint64_t>(fields[0], source, line_no, "frame id");
    for (int a = 0; a < 3; ++a)
      pose.translation[a] = parse_field<double>(fields[1 + a], source, line_no, "translation");
    pose.yaw = parse_field<double>(fields[4], source, line_no, "yaw");
    poses.push_back(pose);
  }
  return poses;
}

void write_poses(std::ostream& out, std::span<const EgoPose> poses) {
  for (const auto& p : poses)
    out << p.frame_id << ' ' << format_double(p.translation.x()) << ' ' << format_double(p.translation.y())
        << ' ' << format_double(p.translation.z()) << ' ' << format_double(p.yaw) << '\n';
}

std::vector<EgoPose> load_poses(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IngestError("cannot open pose file " + path.string());
  return read_poses(in, path.string());
}

void save_poses(const std::filesystem::path& path, std::span<const EgoPose> poses) {
  write_atomically(path, [&](std::ostream& out) { write_poses(out, poses); });
}

}  // namespace lplace
