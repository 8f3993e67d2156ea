#include "lplace/objective.hpp"

#include <cmath>
#include <limits>

#include "lplace/rng.hpp"

namespace lplace {

PlacementObjective::PlacementObjective(const ProbField& prob, LidarSpec spec, OcclusionMode occlusion,
                                       MetricSpec metric, ConstraintSpec constraints, SearchSpace space)
    : field_(field_for(prob, metric)),
      spec_(spec),
      occlusion_(occlusion),
      metric_(metric),
      constraints_(constraints),
      space_(std::move(space)) {
  spec_.validate();
  constraints_.validate();
  space_.validate();
  if (space_.lidar_count < 1) throw ConfigError("placement objective needs a placement search space");
}

double PlacementObjective::metric(const Eigen::VectorXd& u) const {
  const Placement placement = to_placement(u, spec_);
  const CoverageSet cov = coverage(placement, field_, occlusion_, 1);
  if (cov.n_covered() == 0) return std::numeric_limits<double>::quiet_NaN();
  return score(field_, cov, metric_).value;
}

double PlacementObjective::penalty(const Eigen::VectorXd& u) const { return lplace::penalty(u, constraints_, space_); }

double PlacementObjective::operator()(const Eigen::VectorXd& u) const {
  const double m = metric(u);
  if (std::isnan(m)) return std::numeric_limits<double>::infinity();
  const double p = penalty(u);
  return p == 0.0 ? -m : -m + constraints_.lambda * p;
}

Problem PlacementObjective::problem() const {
  return {[this](const Eigen::VectorXd& u) { return (*this)(u); },
          [this](const Eigen::VectorXd& u) { return penalty(u); }};
}

void PlacementObjective::set_lambda(double lambda) {
  ConstraintSpec next = constraints_;
  next.lambda = lambda;
  next.validate();
  constraints_ = next;
}

double estimate_lambda(const PlacementObjective& objective, const SearchSpace& space, std::uint64_t seed) {
  constexpr int kProbes = 16;
  double sum = 0.0;
  int used = 0;
  for (int i = 0; i < kProbes; ++i) {
    KeyedRng rng(seed, 0x1a3bdaULL, static_cast<std::uint64_t>(i));
    Eigen::VectorXd u(space.dims());
    for (Eigen::Index d = 0; d < u.size(); ++d) u[d] = rng.uniform(space.lower[d], space.upper[d]);
    const double m = objective.metric(space.snap(u));
    if (std::isnan(m)) continue;
    sum += std::abs(m);
    ++used;
  }
  const double scale = used > 0 ? sum / used : 0.0;
  return scale > 0.0 ? 10.0 * scale : 1.0;
}

}  // namespace lplace
