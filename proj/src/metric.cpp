#include "lplace/metric.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace lplace {

double pairwise_sum(std::span<const double> values) {
  constexpr std::size_t kLeaf = 128;
  if (values.size() <= kLeaf) {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
  }
  const std::size_t half = values.size() / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

double binary_entropy(double p) {
  if (p <= 0.0 || p >= 1.0) return 0.0;
  const double h = -p * std::log(p) - (1.0 - p) * std::log1p(-p);
  return std::clamp(h, 0.0, std::log(2.0));
}

MetricScore msog(const ProbField& prob, const CoverageSet& cov) {
  if (cov.voxel_count() != prob.grid().voxel_count())
    throw MismatchError("coverage set and probability field cover different grids");
  const std::size_t n = cov.n_covered();
  if (n == 0) throw UndefinedMetricError("M-SOG is undefined for an empty coverage set");
  std::vector<double> h;
  h.reserve(n);
  const Eigen::VectorXd& entropies = prob.entropies();
  cov.for_each([&](VoxelId v) { h.push_back(entropies[v]); });
  const double h_max = std::log(static_cast<double>(prob.classes().size()));
  const double mean = std::clamp(pairwise_sum(h) / static_cast<double>(n), 0.0, h_max);
  return {mean == 0.0 ? 0.0 : -mean, n, MetricSpec::segmentation()};
}

ProbField detection_relabel(const ProbField& prob, ClassId target) {
  const ClassTable& classes = prob.classes();
  if (target >= classes.size()) throw ValidationError("detection target outside class table");
  if (target == classes.empty_class_id) throw ValidationError("detection target cannot be the empty class");

  ClassTable out_classes{{classes.names[target], "other", classes.names[classes.empty_class_id]}, 2};
  const ProbMatrix& p = prob.probs();
  ProbMatrix q(p.rows(), 3);
  for (Eigen::Index v = 0; v < p.rows(); ++v) {
    const double pt = p(v, target);
    const double pe = p(v, classes.empty_class_id);
    q(v, 0) = pt;
    q(v, 1) = std::max(0.0, 1.0 - pt - pe);
    q(v, 2) = pe;
  }
  return ProbField(prob.grid(), std::move(out_classes), std::move(q), prob.observed_flags());
}

MetricScore smig(const ProbField& prob, const CoverageSet& cov) {
  if (cov.voxel_count() != prob.grid().voxel_count())
    throw MismatchError("coverage set and probability field cover different grids");
  const std::size_t n = cov.n_covered();
  if (n == 0) throw UndefinedMetricError("S-MIG is undefined for an empty coverage set");
  std::vector<double> h;
  h.reserve(n);
  cov.for_each([&](VoxelId v) { h.push_back(binary_entropy(prob.occupancy(v))); });
  const double total = pairwise_sum(h);
  return {total == 0.0 ? 0.0 : -total, n, {MetricMode::kSmig, 0}};
}

ProbField field_for(const ProbField& prob, const MetricSpec& spec) {
  if (spec.mode == MetricMode::kDetection) return detection_relabel(prob, spec.target);
  return prob;
}

MetricScore score(const ProbField& prepared, const CoverageSet& cov, const MetricSpec& spec) {
  switch (spec.mode) {
    case MetricMode::kSmig:
      return smig(prepared, cov);
    case MetricMode::kSegmentation:
    case MetricMode::kDetection: {
      MetricScore s = msog(prepared, cov);
      s.spec = spec;
      return s;
    }
  }
  throw ConfigError("unknown metric mode");
}

double pearson(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw ValidationError("pearson inputs differ in length");
  if (xs.size() < 2) throw ValidationError("pearson needs at least two points");
  const double n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = xs[i] - mx, dy = ys[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (!(sxx > 0.0) || !(syy > 0.0)) throw UndefinedMetricError("pearson correlation undefined for zero variance");
  // Collinear inputs whose residual is pure rounding report exactly +-1.
  const double slope = sxy / sxx;
  double residual = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double e = (ys[i] - my) - slope * (xs[i] - mx);
    residual += e * e;
  }
  const double tol = 64.0 * std::numeric_limits<double>::epsilon();
  if (residual <= n * tol * tol * syy) return sxy > 0.0 ? 1.0 : -1.0;
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::string to_string(MetricMode mode) {
  switch (mode) {
    case MetricMode::kSegmentation:
      return "segmentation";
    case MetricMode::kDetection:
      return "detection";
    case MetricMode::kSmig:
      return "smig";
  }
  return "unknown";
}

}  // namespace lplace
