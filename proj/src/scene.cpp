#include "lplace/scene.hpp"

#include <cmath>
#include <numbers>

#include "lplace/parallel.hpp"
#include "lplace/rng.hpp"

namespace lplace {
namespace {

constexpr std::uint64_t kLayoutStream = 0x1a70;
constexpr std::uint64_t kStaticStream = 0x57a7;
constexpr std::uint64_t kFrameStream = 0xf4a3;

using Points = std::vector<Eigen::Vector3d>;

// Stochastic rounding keeps the expected sample count at area * density.
std::size_t sample_count(double area, double density, KeyedRng& rng) {
  const double expected = area * density;
  const double whole = std::floor(expected);
  return static_cast<std::size_t>(whole) + (rng.uniform() < expected - whole ? 1 : 0);
}

// Uniform samples on the rectangle corner + s*u + t*v, s, t in [0, 1), u perpendicular to v.
void sample_rect(const Eigen::Vector3d& corner, const Eigen::Vector3d& u, const Eigen::Vector3d& v,
                 double density, KeyedRng& rng, Points& out) {
  const std::size_t n = sample_count(u.norm() * v.norm(), density, rng);
  for (std::size_t i = 0; i < n; ++i) {
    const double s = rng.uniform();
    const double t = rng.uniform();
    out.push_back(corner + s * u + t * v);
  }
}

void sample_object(const ObjectRecord& obj, double time, double density, KeyedRng& rng, Points& out) {
  const Eigen::Vector3d c = obj.base_center_at(time);
  if (obj.shape == ShapeKind::kBox) {
    const double l = obj.size.x(), w = obj.size.y(), h = obj.size.z();
    const Eigen::Vector3d lo(c.x() - 0.5 * l, c.y() - 0.5 * w, c.z());
    const Eigen::Vector3d ex(l, 0, 0), ey(0, w, 0), ez(0, 0, h);
    sample_rect(lo + ez, ex, ey, density, rng, out);  // roof
    sample_rect(lo, ex, ez, density, rng, out);       // -y side
    sample_rect(lo + ey, ex, ez, density, rng, out);  // +y side
    sample_rect(lo, ey, ez, density, rng, out);       // -x side
    sample_rect(lo + ex, ey, ez, density, rng, out);  // +x side
    return;
  }
  const double r = obj.size.x(), h = obj.size.z();
  const std::size_t n_side = sample_count(2.0 * std::numbers::pi * r * h, density, rng);
  for (std::size_t i = 0; i < n_side; ++i) {
    const double a = 2.0 * std::numbers::pi * rng.uniform();
    out.emplace_back(c.x() + r * std::cos(a), c.y() + r * std::sin(a), c.z() + h * rng.uniform());
  }
  const std::size_t n_top = sample_count(std::numbers::pi * r * r, density, rng);
  for (std::size_t i = 0; i < n_top; ++i) {
    const double a = 2.0 * std::numbers::pi * rng.uniform();
    const double rr = r * std::sqrt(rng.uniform());
    out.emplace_back(c.x() + rr * std::cos(a), c.y() + rr * std::sin(a), c.z() + h);
  }
}

double rect_distance(const Eigen::Vector3d& p, const Eigen::Vector3d& lo, const Eigen::Vector3d& hi) {
  // lo/hi describe a degenerate (flat) axis-aligned box.
  const Eigen::Vector3d q = p.cwiseMax(lo).cwiseMin(hi);
  return (p - q).norm();
}

double draw(const Range& r, KeyedRng& rng) { return r.lo == r.hi ? r.lo : rng.uniform(r.lo, r.hi); }

}  // namespace

ClassTable scene_class_table() {
  return ClassTable{{"empty", "ground", "building", "car", "pedestrian", "noise"}, scene_class::kEmpty};
}

void SceneParams::validate() const {
  if (n_frames < 1) throw ConfigError("scene needs n_frames >= 1");
  if (!(frame_dt > 0.0)) throw ConfigError("frame_dt must be positive");
  if (!(point_density > 0.0)) throw ConfigError("point_density must be positive");
  if (!(emit_range > 0.0)) throw ConfigError("emit_range must be positive");
  if (ego_speed < 0.0) throw ConfigError("ego_speed must be non-negative");
  if (ground_margin < 0.0) throw ConfigError("ground_margin must be non-negative");
  if (region_x.lo > region_x.hi || region_y.lo > region_y.hi) throw ConfigError("object region is inverted");
  auto check = [](const Range& r, const char* what, bool allow_zero) {
    if (r.lo > r.hi || (allow_zero ? r.lo < 0.0 : !(r.lo > 0.0)))
      throw ConfigError(std::string("invalid range for ") + what);
  };
  for (const BoxSpec* b : {&buildings, &cars}) {
    if (b->count < 0) throw ConfigError("object count must be non-negative");
    check(b->length, "box length", false);
    check(b->width, "box width", false);
    check(b->height, "box height", false);
    check(b->speed, "box speed", true);
  }
  if (pedestrians.count < 0) throw ConfigError("object count must be non-negative");
  check(pedestrians.radius, "pedestrian radius", false);
  check(pedestrians.height, "pedestrian height", false);
  check(pedestrians.speed, "pedestrian speed", true);
}

double ObjectRecord::surface_distance(const Eigen::Vector3d& p, double t) const {
  const Eigen::Vector3d c = base_center_at(t);
  if (shape == ShapeKind::kBox) {
    const Eigen::Vector3d lo(c.x() - 0.5 * size.x(), c.y() - 0.5 * size.y(), c.z());
    const Eigen::Vector3d hi(c.x() + 0.5 * size.x(), c.y() + 0.5 * size.y(), c.z() + size.z());
    double d = rect_distance(p, {lo.x(), lo.y(), hi.z()}, hi);
    d = std::min(d, rect_distance(p, lo, {hi.x(), lo.y(), hi.z()}));
    d = std::min(d, rect_distance(p, {lo.x(), hi.y(), lo.z()}, hi));
    d = std::min(d, rect_distance(p, lo, {lo.x(), hi.y(), hi.z()}));
    d = std::min(d, rect_distance(p, {hi.x(), lo.y(), lo.z()}, hi));
    return d;
  }
  const double r = size.x(), h = size.z();
  const Eigen::Vector2d radial = p.head<2>() - c.head<2>();
  const double rho = radial.norm();
  const double dz_side = std::max({c.z() - p.z(), p.z() - (c.z() + h), 0.0});
  const double side = std::hypot(rho - r, dz_side);
  const double top = std::hypot(std::max(rho - r, 0.0), p.z() - (c.z() + h));
  return std::min(side, top);
}

Scene gen_scene(const SceneParams& params, int threads) {
  params.validate();
  Scene scene;
  scene.classes = scene_class_table();
  scene.frame_dt = params.frame_dt;

  const Eigen::Vector3d heading(std::cos(params.ego_heading), std::sin(params.ego_heading), 0.0);
  const Eigen::Vector3d lateral(-heading.y(), heading.x(), 0.0);
  const double path_length = params.ego_speed * params.frame_dt * (params.n_frames - 1);

  for (int f = 0; f < params.n_frames; ++f) {
    EgoPose pose;
    pose.frame_id = static_cast<std::uint64_t>(f);
    pose.translation = heading * (params.ego_speed * params.frame_dt * f);
    pose.yaw = params.ego_heading;
    scene.poses.push_back(pose);
  }

  // Object layout with rejection against the ego corridor.
  KeyedRng layout(params.rng_seed, kLayoutStream);
  auto place = [&](double half_diag) -> Eigen::Vector3d {
    for (int attempt = 0; attempt < 10000; ++attempt) {
      const Eigen::Vector3d c(draw(params.region_x, layout), draw(params.region_y, layout), 0.0);
      if (std::abs(c.dot(lateral)) - half_diag >= params.corridor_half_width) return c;
    }
    throw ConfigError("cannot place object outside the ego corridor; widen the object region");
  };
  auto add_boxes = [&](const BoxSpec& spec, ClassId cls, bool moving) {
    for (int i = 0; i < spec.count; ++i) {
      ObjectRecord obj;
      obj.cls = cls;
      obj.shape = ShapeKind::kBox;
      obj.size = {draw(spec.length, layout), draw(spec.width, layout), draw(spec.height, layout)};
      obj.base_center = place(0.5 * obj.size.head<2>().norm());
      if (moving) {
        const double direction = layout.uniform() < 0.5 ? -1.0 : 1.0;
        obj.velocity = heading * (direction * draw(spec.speed, layout));
      }
      scene.objects.push_back(obj);
    }
  };
  add_boxes(params.buildings, scene_class::kBuilding, false);
  add_boxes(params.cars, scene_class::kCar, true);
  for (int i = 0; i < params.pedestrians.count; ++i) {
    ObjectRecord obj;
    obj.cls = scene_class::kPedestrian;
    obj.shape = ShapeKind::kCylinder;
    const double r = draw(params.pedestrians.radius, layout);
    obj.size = {r, r, draw(params.pedestrians.height, layout)};
    obj.base_center = place(r);
    const double a = 2.0 * std::numbers::pi * layout.uniform();
    obj.velocity = Eigen::Vector3d(std::cos(a), std::sin(a), 0.0) * draw(params.pedestrians.speed, layout);
    scene.objects.push_back(obj);
  }

  // Static surfaces are sampled once in world coordinates.
  Points static_points;
  std::vector<ClassId> static_labels;
  {
    KeyedRng rng(params.rng_seed, kStaticStream);
    if (params.ground) {
      const double m = params.ground_margin;
      const Eigen::Vector3d corner = -m * heading - m * lateral;
      sample_rect(corner, heading * (path_length + 2.0 * m), lateral * (2.0 * m), params.point_density, rng,
                  static_points);
      static_labels.resize(static_points.size(), scene_class::kGround);
    }
    for (const auto& obj : scene.objects) {
      if (obj.velocity.squaredNorm() > 0.0) continue;
      sample_object(obj, 0.0, params.point_density, rng, static_points);
      static_labels.resize(static_points.size(), obj.cls);
    }
  }

  scene.clouds.resize(static_cast<std::size_t>(params.n_frames));
  parallel_for(scene.clouds.size(), threads, [&](std::size_t begin, std::size_t end, int) {
    for (std::size_t f = begin; f < end; ++f) {
      const EgoPose& pose = scene.poses[f];
      const double time = params.frame_dt * static_cast<double>(f);
      Points world;
      std::vector<ClassId> labels;
      KeyedRng rng(params.rng_seed, kFrameStream, f);
      for (const auto& obj : scene.objects) {
        if (obj.velocity.squaredNorm() == 0.0) continue;
        sample_object(obj, time, params.point_density, rng, world);
        labels.resize(world.size(), obj.cls);
      }

      const Eigen::Isometry3d world_to_ego = pose.transform().inverse();
      const double range2 = params.emit_range * params.emit_range;
      Points ego_points;
      std::vector<ClassId> ego_labels;
      auto emit = [&](const Eigen::Vector3d& p, ClassId cls) {
        if ((p.head<2>() - pose.translation.head<2>()).squaredNorm() > range2) return;
        ego_points.push_back(world_to_ego * p);
        ego_labels.push_back(cls);
      };
      for (std::size_t i = 0; i < static_points.size(); ++i) emit(static_points[i], static_labels[i]);
      for (std::size_t i = 0; i < world.size(); ++i) emit(world[i], labels[i]);
      scene.clouds[f] = LabeledCloud::from_points(ego_points, std::move(ego_labels), f);
    }
  });
  return scene;
}

}  // namespace lplace
