#pragma once

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "lplace/raycast.hpp"

namespace lplace {

/// Box-bounded search space discretized with step `delta`. Dimensions with a
/// fixed value (e.g. all mounting heights in planar mode) are excluded from
/// the search and always take that value.
struct SearchSpace {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
  double delta = 0.01;
  /// NaN marks a free dimension.
  Eigen::VectorXd fixed;
  /// Number of sensors encoded as consecutive (x, y, z, roll) blocks; 0 for
  /// generic spaces without a pairwise distance constraint.
  int lidar_count = 0;

  /// Generic box [lower, upper] with no fixed dimensions.
  static SearchSpace box(Eigen::VectorXd lower, Eigen::VectorXd upper, double delta);

  /// Per-sensor bounds repeated for `lidars` sensors. With `planar_z`, every
  /// sensor's z is pinned to that height.
  static SearchSpace placement(int lidars, const Eigen::Vector4d& lower, const Eigen::Vector4d& upper,
                               double delta, std::optional<double> planar_z = std::nullopt);

  void validate() const;
  Eigen::Index dims() const { return lower.size(); }
  bool is_fixed(Eigen::Index i) const { return !std::isnan(fixed[i]); }
  std::vector<Eigen::Index> free_indices() const;
  Eigen::Index free_dims() const { return static_cast<Eigen::Index>(free_indices().size()); }

  /// Nearest delta-grid point (anchored at `lower`), clamped into the bounds,
  /// with fixed dimensions applied.
  Eigen::VectorXd snap(const Eigen::VectorXd& u) const;
  /// Integer grid coordinates of a snapped point, for exact comparisons.
  std::vector<long> grid_key(const Eigen::VectorXd& snapped) const;

  Eigen::VectorXd center() const;
  Eigen::VectorXd widths() const { return upper - lower; }

  /// Full vector from free coordinates (fixed dims filled in) and back.
  Eigen::VectorXd embed(const Eigen::VectorXd& free) const;
  Eigen::VectorXd restrict(const Eigen::VectorXd& full) const;
};

struct ConstraintSpec {
  double min_mutual_distance = 0.0;
  double lambda = 1.0;

  void validate() const;
};

/// Constraint violation P(u) >= 0: pairwise sensor separation shortfalls plus
/// box overshoot per dimension. Zero iff feasible.
double penalty(const Eigen::VectorXd& u, const ConstraintSpec& cs, const SearchSpace& space);

/// Strategy parameters derived from the problem dimension.
struct CmaSettings {
  int population = 0;  // N_k
  int parents = 0;     // M_k
  Eigen::VectorXd weights;
  double mu_eff = 1.0;
  double c_c = 0.0;
  double c_sigma = 0.0;
  double d_sigma = 1.0;
  double chi_n = 1.0;  // E||N(0, I)||
  /// Whiten the step-size path by C^{-1/2}, as in canonical CMA-ES, instead of
  /// using the raw mean shift.
  bool whitened_sigma_path = false;

  /// Hansen defaults; `population` overrides N_k when positive.
  static CmaSettings defaults(int n, int population = 0);
  void validate(int n) const;
};

struct CmaState {
  Eigen::VectorXd mean;
  double sigma = 1.0;
  Eigen::MatrixXd cov;
  Eigen::VectorXd path_c;
  Eigen::VectorXd path_sigma;
  int iteration = 0;
  CmaSettings settings;

  /// cov = basis * diag(scales^2) * basis^T, kept in sync by update().
  Eigen::MatrixXd basis;
  Eigen::VectorXd scales;

  static CmaState initial(const Eigen::VectorXd& mean, double sigma, const CmaSettings& settings);
  Eigen::Index dims() const { return mean.size(); }
};

struct Population {
  std::vector<Eigen::VectorXd> raw;      // draws from N(m, sigma^2 C), free coordinates
  std::vector<Eigen::VectorXd> snapped;  // delta-grid candidates, full coordinates
};

/// N_k draws for iteration state.iteration. Draw i uses a stream keyed by
/// (seed, iteration, i).
Population sample_population(const CmaState& state, const SearchSpace& space, std::uint64_t seed);

/// One CMA-ES step from candidates (free coordinates) sorted by ascending
/// objective: weighted recombination of the best M_k, rank-one covariance
/// update along the evolution path, and path-length step-size control.
CmaState update(const CmaState& state, const std::vector<Eigen::VectorXd>& ranked);

/// Symmetrizes `c` and lifts eigenvalues to at least 1e-12 * trace / n.
/// Returns the eigendecomposition used for sampling.
void repair_covariance(Eigen::MatrixXd& c, Eigen::MatrixXd& basis, Eigen::VectorXd& scales);

using ObjectiveFn = std::function<double(const Eigen::VectorXd&)>;

/// G(u) to minimize and P(u) >= 0 used to tell feasible candidates apart.
struct Problem {
  ObjectiveFn objective;
  ObjectiveFn penalty;
};

struct OptimizerConfig {
  SearchSpace space;
  int iterations = 100;  // K
  int population = 0;    // 0: 4 + floor(3 ln n)
  std::uint64_t seed = 1;
  std::optional<Eigen::VectorXd> initial_mean;  // full coordinates
  std::optional<double> initial_sigma;
  bool whitened_sigma_path = false;
  /// Overrides the path and covariance learning rate.
  std::optional<double> c_c;
  int threads = 0;
};

struct Evaluation {
  Eigen::VectorXd u;
  double g = 0.0;
  double penalty = 0.0;
};

struct IterationLog {
  int k = 0;
  double best_g = 0.0;  // best seen so far
  double mean_g = 0.0;  // over this iteration's finite values
  double sigma = 0.0;   // after the update
};

enum class OptimizeStatus { kFeasible, kNoFeasibleCandidate };

struct OptimizeResult {
  Eigen::VectorXd best_u;
  double best_g = 0.0;
  double best_penalty = 0.0;
  OptimizeStatus status = OptimizeStatus::kNoFeasibleCandidate;
  std::vector<IterationLog> history;
  std::vector<Evaluation> evaluations;  // unique delta-grid points, first-seen order
  CmaState final_state;
};

/// Runs K iterations of sample, evaluate, rank and update. Returns the best
/// feasible candidate ever evaluated, or the lowest-G candidate when none was
/// feasible. Results do not depend on config.threads.
OptimizeResult optimize(const Problem& problem, const OptimizerConfig& config);

/// Placement vector layout: (x, y, z, roll) per sensor.
Placement to_placement(const Eigen::VectorXd& u, const LidarSpec& spec, std::string name = {});
Eigen::VectorXd to_vector(const Placement& placement);

std::string to_string(OptimizeStatus status);

}  // namespace lplace
