#pragma once

#include <span>
#include <string>

#include "lplace/grid.hpp"
#include "lplace/raycast.hpp"

namespace lplace {

enum class MetricMode { kSegmentation, kDetection, kSmig };

/// Which surrogate to compute and, for detection, the target class.
struct MetricSpec {
  MetricMode mode = MetricMode::kSegmentation;
  ClassId target = 0;

  static MetricSpec segmentation() { return {MetricMode::kSegmentation, 0}; }
  static MetricSpec detection(ClassId target) { return {MetricMode::kDetection, target}; }
  bool operator==(const MetricSpec&) const = default;
};

struct MetricScore {
  double value = 0.0;
  std::size_t n_covered = 0;
  MetricSpec spec;
};

/// Sum with a fixed pairwise tree (leaves of up to 128 sequential terms), so
/// the rounding pattern depends only on the input order.
double pairwise_sum(std::span<const double> values);

/// Normalized semantic-occupancy surrogate: the mean of sum_c p ln p over the
/// covered voxels, i.e. minus their mean entropy. Lies in [-ln M, 0]; higher
/// is better. Throws UndefinedMetricError on empty coverage.
MetricScore msog(const ProbField& prob, const CoverageSet& cov);

/// Collapses all material classes except `target` into one "other" class,
/// keeping empty separate. Output classes are {target, other, empty}.
ProbField detection_relabel(const ProbField& prob, ClassId target);

/// Bernoulli-occupancy baseline: minus the unnormalized sum of binary
/// entropies of P(occupied) over covered voxels.
MetricScore smig(const ProbField& prob, const CoverageSet& cov);

/// Field to score for `spec`: the detection relabeling or `prob` itself.
ProbField field_for(const ProbField& prob, const MetricSpec& spec);

/// Scores `cov` on a field already prepared by field_for.
MetricScore score(const ProbField& prepared, const CoverageSet& cov, const MetricSpec& spec);

/// Binary entropy in nats.
double binary_entropy(double p);

/// Sample Pearson correlation. Throws ValidationError for mismatched or short
/// inputs and UndefinedMetricError for zero variance.
double pearson(std::span<const double> xs, std::span<const double> ys);

std::string to_string(MetricMode mode);

}  // namespace lplace
