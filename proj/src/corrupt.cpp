#include "lplace/corrupt.hpp"

#include <cmath>
#include <random>
#include <sstream>

#include "lplace/rng.hpp"

namespace lplace {

double Corruption::default_param(CorruptionKind kind) {
  switch (kind) {
    case CorruptionKind::kMotionBlur:
      return 0.30;
    case CorruptionKind::kCrosstalk:
      return 0.07;
    case CorruptionKind::kIncompleteEcho:
      return 0.85;
    case CorruptionKind::kFog:
      return 0.01;
  }
  throw ConfigError("unknown corruption kind");
}

void CorruptionSpec::validate() const {
  for (const auto& s : steps) {
    if (!std::isfinite(s.param) || s.param < 0.0) throw ConfigError(to_string(s.kind) + " parameter must be >= 0");
    if ((s.kind == CorruptionKind::kCrosstalk || s.kind == CorruptionKind::kIncompleteEcho) && s.param > 1.0)
      throw ConfigError(to_string(s.kind) + " parameter must be <= 1");
  }
  if (!(sensor_range > 0.0) || !std::isfinite(sensor_range)) throw ConfigError("corruption sensor range must be positive");
}

namespace {

Eigen::Vector3d uniform_in_sphere(KeyedRng& rng, double radius) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::Vector3d d;
  do {
    d = Eigen::Vector3d(normal(rng), normal(rng), normal(rng));
  } while (d.squaredNorm() == 0.0);
  return d.normalized() * (radius * std::cbrt(rng.uniform()));
}

LabeledCloud apply_step(const LabeledCloud& in, const Corruption& step, std::size_t index,
                        const CorruptionSpec& spec) {
  const std::size_t n = in.size();
  std::vector<Eigen::Vector3d> pts;
  std::vector<ClassId> labels;
  pts.reserve(n);
  labels.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    KeyedRng rng(spec.seed, index, in.frame_id, i);
    Eigen::Vector3d p = in.points.col(static_cast<Eigen::Index>(i));
    ClassId label = in.labels[i];
    switch (step.kind) {
      case CorruptionKind::kMotionBlur: {
        if (step.param > 0.0) {
          std::normal_distribution<double> jitter(0.0, step.param);
          for (int a = 0; a < 3; ++a) p[a] += jitter(rng);
        }
        break;
      }
      case CorruptionKind::kCrosstalk:
        if (rng.uniform() < step.param) {
          p = uniform_in_sphere(rng, spec.sensor_range);
          label = spec.noise_class;
        }
        break;
      case CorruptionKind::kIncompleteEcho:
        if (rng.uniform() < step.param) continue;
        break;
      case CorruptionKind::kFog:
        if (rng.uniform() >= std::exp(-step.param * p.norm())) continue;
        break;
    }
    pts.push_back(p);
    labels.push_back(label);
  }
  return LabeledCloud::from_points(pts, std::move(labels), in.frame_id);
}

}  // namespace

LabeledCloud apply(const LabeledCloud& cloud, const CorruptionSpec& spec) {
  spec.validate();
  LabeledCloud out = cloud;
  for (std::size_t s = 0; s < spec.steps.size(); ++s) out = apply_step(out, spec.steps[s], s, spec);
  return out;
}

std::string to_string(CorruptionKind kind) {
  switch (kind) {
    case CorruptionKind::kMotionBlur:
      return "motion_blur";
    case CorruptionKind::kCrosstalk:
      return "crosstalk";
    case CorruptionKind::kIncompleteEcho:
      return "incomplete_echo";
    case CorruptionKind::kFog:
      return "fog";
  }
  return "unknown";
}

CorruptionKind corruption_kind_from_string(const std::string& name) {
  for (auto k : {CorruptionKind::kMotionBlur, CorruptionKind::kCrosstalk, CorruptionKind::kIncompleteEcho,
                 CorruptionKind::kFog})
    if (to_string(k) == name) return k;
  throw ConfigError("unknown corruption kind '" + name + "'");
}

CorruptionSpec parse_corruption(const std::string& text) {
  CorruptionSpec spec;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (item.empty()) throw ConfigError("empty item in corruption list '" + text + "'");
    const auto eq = item.find('=');
    const std::string key = item.substr(0, eq);
    const std::string value = eq == std::string::npos ? std::string() : item.substr(eq + 1);
    if (eq != std::string::npos && value.empty()) throw ConfigError("missing value for '" + key + "'");
    std::size_t used = 0;
    try {
      if (key == "seed") {
        if (value.empty()) throw ConfigError("seed needs a value");
        spec.seed = std::stoull(value, &used);
      } else {
        Corruption c{corruption_kind_from_string(key), 0.0};
        c.param = value.empty() ? Corruption::default_param(c.kind) : std::stod(value, &used);
        spec.steps.push_back(c);
      }
    } catch (const std::logic_error&) {
      throw ConfigError("bad number in corruption item '" + item + "'");
    }
    if (!value.empty() && used != value.size()) throw ConfigError("bad number in corruption item '" + item + "'");
  }
  spec.validate();
  return spec;
}

std::string format_corruption(const CorruptionSpec& spec) {
  std::string out;
  for (const auto& s : spec.steps) out += to_string(s.kind) + "=" + format_double(s.param) + ",";
  return out + "seed=" + std::to_string(spec.seed);
}

}  // namespace lplace
