#pragma once

#include <Eigen/Core>

#include <cstdint>

#include "lplace/metric.hpp"
#include "lplace/optimizer.hpp"
#include "lplace/raycast.hpp"

namespace lplace {

/// G(u) = -metric(coverage(u)) + lambda * P(u) for placement vectors u.
/// Empty coverage maps to +infinity. Safe to call concurrently.
class PlacementObjective {
 public:
  PlacementObjective(const ProbField& prob, LidarSpec spec, OcclusionMode occlusion, MetricSpec metric,
                     ConstraintSpec constraints, SearchSpace space);

  double operator()(const Eigen::VectorXd& u) const;
  /// Metric value alone, or NaN on empty coverage.
  double metric(const Eigen::VectorXd& u) const;
  double penalty(const Eigen::VectorXd& u) const;

  Problem problem() const;

  const ConstraintSpec& constraints() const { return constraints_; }
  void set_lambda(double lambda);

 private:
  ProbField field_;
  LidarSpec spec_;
  OcclusionMode occlusion_;
  MetricSpec metric_;
  ConstraintSpec constraints_;
  SearchSpace space_;
};

/// 10 x mean |metric| over 16 snapped probes drawn uniformly from `space`;
/// 1 when every probe scores 0 or has empty coverage.
double estimate_lambda(const PlacementObjective& objective, const SearchSpace& space, std::uint64_t seed);

}  // namespace lplace
