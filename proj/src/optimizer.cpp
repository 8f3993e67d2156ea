#include "lplace/optimizer.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <random>

#include "lplace/parallel.hpp"
#include "lplace/rng.hpp"

namespace lplace {

SearchSpace SearchSpace::box(Eigen::VectorXd lower, Eigen::VectorXd upper, double delta) {
  SearchSpace s;
  s.fixed = Eigen::VectorXd::Constant(lower.size(), std::numeric_limits<double>::quiet_NaN());
  s.lower = std::move(lower);
  s.upper = std::move(upper);
  s.delta = delta;
  s.validate();
  return s;
}

SearchSpace SearchSpace::placement(int lidars, const Eigen::Vector4d& lower, const Eigen::Vector4d& upper,
                                   double delta, std::optional<double> planar_z) {
  if (lidars < 1) throw ConfigError("placement search space needs at least one lidar");
  SearchSpace s;
  s.lidar_count = lidars;
  s.delta = delta;
  s.lower = lower.replicate(lidars, 1);
  s.upper = upper.replicate(lidars, 1);
  s.fixed = Eigen::VectorXd::Constant(4 * lidars, std::numeric_limits<double>::quiet_NaN());
  if (planar_z) {
    if (*planar_z < lower[2] || *planar_z > upper[2]) throw ConfigError("planar height outside z bounds");
    for (int l = 0; l < lidars; ++l) s.fixed[4 * l + 2] = *planar_z;
  }
  s.validate();
  return s;
}

void SearchSpace::validate() const {
  if (lower.size() == 0 || lower.size() != upper.size() || fixed.size() != lower.size())
    throw ConfigError("search space bounds have inconsistent sizes");
  if (!lower.allFinite() || !upper.allFinite()) throw ConfigError("search space bounds must be finite");
  if (!(lower.array() < upper.array()).all()) throw ConfigError("search space needs lower < upper in every dimension");
  if (!(delta > 0.0)) throw ConfigError("grid density delta must be positive");
  if (!(delta < widths().minCoeff())) throw ConfigError("grid density delta must be smaller than every dimension width");
  if (lidar_count > 0 && lower.size() != 4 * lidar_count)
    throw ConfigError("placement search space must have 4 dimensions per lidar");
  if (free_indices().empty()) throw ConfigError("search space has no free dimensions");
}

std::vector<Eigen::Index> SearchSpace::free_indices() const {
  std::vector<Eigen::Index> out;
  for (Eigen::Index i = 0; i < lower.size(); ++i)
    if (!is_fixed(i)) out.push_back(i);
  return out;
}

Eigen::VectorXd SearchSpace::snap(const Eigen::VectorXd& u) const {
  Eigen::VectorXd out(u.size());
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    if (is_fixed(i)) {
      out[i] = fixed[i];
      continue;
    }
    const double max_step = std::floor((upper[i] - lower[i]) / delta + 1e-9);
    const double step = std::clamp(std::round((u[i] - lower[i]) / delta), 0.0, max_step);
    out[i] = lower[i] + step * delta;
  }
  return out;
}

std::vector<long> SearchSpace::grid_key(const Eigen::VectorXd& snapped) const {
  std::vector<long> key(static_cast<std::size_t>(snapped.size()));
  for (Eigen::Index i = 0; i < snapped.size(); ++i)
    key[static_cast<std::size_t>(i)] = is_fixed(i) ? 0 : std::lround((snapped[i] - lower[i]) / delta);
  return key;
}

Eigen::VectorXd SearchSpace::center() const {
  Eigen::VectorXd c = 0.5 * (lower + upper);
  for (Eigen::Index i = 0; i < c.size(); ++i)
    if (is_fixed(i)) c[i] = fixed[i];
  return c;
}

Eigen::VectorXd SearchSpace::embed(const Eigen::VectorXd& free) const {
  Eigen::VectorXd full = center();
  const auto idx = free_indices();
  if (static_cast<std::size_t>(free.size()) != idx.size()) throw ValidationError("free vector has wrong size");
  for (std::size_t j = 0; j < idx.size(); ++j) full[idx[j]] = free[static_cast<Eigen::Index>(j)];
  return full;
}

Eigen::VectorXd SearchSpace::restrict(const Eigen::VectorXd& full) const {
  const auto idx = free_indices();
  Eigen::VectorXd free(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t j = 0; j < idx.size(); ++j) free[static_cast<Eigen::Index>(j)] = full[idx[j]];
  return free;
}

void ConstraintSpec::validate() const {
  if (!(min_mutual_distance >= 0.0)) throw ConfigError("min_mutual_distance must be >= 0");
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ConfigError("lambda must be finite and >= 0");
}

double penalty(const Eigen::VectorXd& u, const ConstraintSpec& cs, const SearchSpace& space) {
  if (u.size() != space.dims()) throw ValidationError("placement vector has wrong dimension");
  double p = 0.0;
  for (int a = 0; a < space.lidar_count; ++a) {
    for (int b = a + 1; b < space.lidar_count; ++b) {
      const double d = (u.segment<3>(4 * a) - u.segment<3>(4 * b)).norm();
      p += std::max(0.0, cs.min_mutual_distance - d);
    }
  }
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    p += std::max(0.0, space.lower[i] - u[i]);
    p += std::max(0.0, u[i] - space.upper[i]);
  }
  return p;
}

CmaSettings CmaSettings::defaults(int n, int population) {
  if (n < 1) throw ConfigError("CMA-ES needs at least one dimension");
  CmaSettings s;
  const double dn = static_cast<double>(n);
  s.population = population > 0 ? population : 4 + static_cast<int>(std::floor(3.0 * std::log(dn)));
  s.parents = std::max(1, s.population / 2);
  s.weights.resize(s.parents);
  for (int i = 0; i < s.parents; ++i) s.weights[i] = std::log(s.parents + 0.5) - std::log(i + 1.0);
  s.weights /= s.weights.sum();
  s.mu_eff = 1.0 / s.weights.squaredNorm();
  // One rate drives both the path and the rank-one covariance update; 4/(n+4)
  // collapses C within a few dozen iterations, so use the rank-one rate.
  s.c_c = 2.0 / ((dn + 1.3) * (dn + 1.3) + s.mu_eff);
  s.c_sigma = (s.mu_eff + 2.0) / (dn + s.mu_eff + 5.0);
  s.d_sigma = 1.0 + 2.0 * std::max(0.0, std::sqrt((s.mu_eff - 1.0) / (dn + 1.0)) - 1.0) + s.c_sigma;
  s.chi_n = std::sqrt(dn) * (1.0 - 1.0 / (4.0 * dn) + 1.0 / (21.0 * dn * dn));
  return s;
}

void CmaSettings::validate(int n) const {
  if (population < 1 || parents < 1 || parents > population) throw ConfigError("invalid CMA-ES population sizes");
  if (weights.size() != parents) throw ConfigError("CMA-ES weight count must equal M_k");
  if (std::abs(weights.sum() - 1.0) > 1e-12) throw ConfigError("CMA-ES weights must sum to 1");
  for (int i = 0; i < parents; ++i) {
    if (!(weights[i] > 0.0)) throw ConfigError("CMA-ES weights must be positive");
    if (i > 0 && weights[i] > weights[i - 1]) throw ConfigError("CMA-ES weights must be non-increasing");
  }
  if (!(c_c > 0.0 && c_c <= 1.0) || !(c_sigma > 0.0 && c_sigma <= 1.0) || !(d_sigma > 0.0))
    throw ConfigError("CMA-ES learning rates out of range");
  if (n < 1) throw ConfigError("CMA-ES needs at least one dimension");
}

void repair_covariance(Eigen::MatrixXd& c, Eigen::MatrixXd& basis, Eigen::VectorXd& scales) {
  c = 0.5 * (c + c.transpose()).eval();
  const double floor = std::max(1e-12 * c.trace() / static_cast<double>(c.rows()), std::numeric_limits<double>::min());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(c);
  if (eig.info() != Eigen::Success) throw OptimizerStateError("covariance eigendecomposition failed");
  Eigen::VectorXd values = eig.eigenvalues().cwiseMax(floor);
  basis = eig.eigenvectors();
  scales = values.cwiseSqrt();
  c = basis * values.asDiagonal() * basis.transpose();
  c = 0.5 * (c + c.transpose()).eval();
}

CmaState CmaState::initial(const Eigen::VectorXd& mean, double sigma, const CmaSettings& settings) {
  const int n = static_cast<int>(mean.size());
  settings.validate(n);
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw OptimizerStateError("initial sigma must be positive");
  if (!mean.allFinite()) throw OptimizerStateError("initial mean must be finite");
  CmaState s;
  s.mean = mean;
  s.sigma = sigma;
  s.cov = Eigen::MatrixXd::Identity(n, n);
  s.path_c = Eigen::VectorXd::Zero(n);
  s.path_sigma = Eigen::VectorXd::Zero(n);
  s.settings = settings;
  s.basis = Eigen::MatrixXd::Identity(n, n);
  s.scales = Eigen::VectorXd::Ones(n);
  return s;
}

Population sample_population(const CmaState& state, const SearchSpace& space, std::uint64_t seed) {
  const Eigen::Index n = state.dims();
  if (n != space.free_dims()) throw ConfigError("CMA state dimension differs from free search dimensions");
  Population pop;
  const int count = state.settings.population;
  pop.raw.reserve(static_cast<std::size_t>(count));
  pop.snapped.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    KeyedRng rng(seed, static_cast<std::uint64_t>(state.iteration), static_cast<std::uint64_t>(i));
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::VectorXd z(n);
    for (Eigen::Index j = 0; j < n; ++j) z[j] = normal(rng);
    Eigen::VectorXd x = state.mean + state.sigma * (state.basis * state.scales.cwiseProduct(z));
    pop.snapped.push_back(space.snap(space.embed(x)));
    pop.raw.push_back(std::move(x));
  }
  return pop;
}

CmaState update(const CmaState& state, const std::vector<Eigen::VectorXd>& ranked) {
  const CmaSettings& s = state.settings;
  const Eigen::Index n = state.dims();
  if (static_cast<int>(ranked.size()) < s.parents) throw OptimizerStateError("fewer ranked candidates than M_k");
  for (int i = 0; i < s.parents; ++i)
    if (ranked[static_cast<std::size_t>(i)].size() != n || !ranked[static_cast<std::size_t>(i)].allFinite())
      throw OptimizerStateError("non-finite or mis-sized candidate in update");
  if (!state.mean.allFinite() || !(state.sigma > 0.0) || !std::isfinite(state.sigma))
    throw OptimizerStateError("CMA state is not finite");

  CmaState next = state;
  next.mean = Eigen::VectorXd::Zero(n);
  for (int i = 0; i < s.parents; ++i) next.mean += s.weights[i] * ranked[static_cast<std::size_t>(i)];

  const Eigen::VectorXd shift = (next.mean - state.mean) / state.sigma;
  const double sqrt_mu_eff = std::sqrt(s.mu_eff);

  const double keep_c = 1.0 - s.c_c;
  next.path_c = keep_c * state.path_c + std::sqrt(1.0 - keep_c * keep_c) * sqrt_mu_eff * shift;
  next.cov = keep_c * state.cov + s.c_c * next.path_c * next.path_c.transpose();

  Eigen::VectorXd sigma_step = shift;
  if (s.whitened_sigma_path) {
    // C^{-1/2} shift using the decomposition the candidates were drawn with.
    sigma_step = state.basis * (state.basis.transpose() * shift).cwiseQuotient(state.scales);
  }
  const double keep_s = 1.0 - s.c_sigma;
  next.path_sigma = keep_s * state.path_sigma + std::sqrt(1.0 - keep_s * keep_s) * sqrt_mu_eff * sigma_step;
  next.sigma = state.sigma * std::exp((s.c_sigma / s.d_sigma) * (next.path_sigma.norm() / s.chi_n - 1.0));

  repair_covariance(next.cov, next.basis, next.scales);
  if (!next.cov.allFinite() || !(next.sigma > 0.0) || !std::isfinite(next.sigma))
    throw OptimizerStateError("CMA update produced a non-finite state");
  ++next.iteration;
  return next;
}

namespace {

// Lower G first; feasibility breaks nothing here, only the final pick.
bool better(const Evaluation& a, const Evaluation& b) { return a.g < b.g; }

}  // namespace

OptimizeResult optimize(const Problem& problem, const OptimizerConfig& config) {
  const SearchSpace& space = config.space;
  space.validate();
  if (config.iterations < 1) throw ConfigError("iteration budget K must be >= 1");
  if (!problem.objective) throw ConfigError("optimizer needs an objective");

  const int n = static_cast<int>(space.free_dims());
  CmaSettings settings = CmaSettings::defaults(n, config.population);
  settings.whitened_sigma_path = config.whitened_sigma_path;
  if (config.c_c) settings.c_c = *config.c_c;
  const Eigen::VectorXd start = config.initial_mean ? space.restrict(space.snap(*config.initial_mean))
                                                    : space.restrict(space.center());
  const double sigma0 = config.initial_sigma.value_or(0.3 * space.restrict(space.widths()).mean());
  CmaState state = CmaState::initial(start, sigma0, settings);

  OptimizeResult result;
  std::map<std::vector<long>, std::size_t> seen;  // grid key -> index into evaluations
  std::optional<std::size_t> best_feasible;
  std::optional<std::size_t> best_any;
  double running_best = std::numeric_limits<double>::infinity();

  for (int k = 0; k < config.iterations; ++k) {
    Population pop = sample_population(state, space, config.seed);
    const std::size_t count = pop.snapped.size();

    // Evaluate each new grid point once; repeats reuse the cached value.
    std::vector<std::size_t> eval_index(count);
    std::vector<std::size_t> fresh;
    for (std::size_t i = 0; i < count; ++i) {
      auto key = space.grid_key(pop.snapped[i]);
      auto it = seen.find(key);
      if (it == seen.end()) {
        const std::size_t idx = result.evaluations.size();
        result.evaluations.push_back({pop.snapped[i], 0.0, 0.0});
        seen.emplace(std::move(key), idx);
        fresh.push_back(idx);
        eval_index[i] = idx;
      } else {
        eval_index[i] = it->second;
      }
    }
    parallel_for(fresh.size(), config.threads, [&](std::size_t b, std::size_t e, int) {
      for (std::size_t j = b; j < e; ++j) {
        Evaluation& ev = result.evaluations[fresh[j]];
        double g = problem.objective(ev.u);
        if (std::isnan(g)) g = std::numeric_limits<double>::infinity();
        ev.g = g;
        ev.penalty = problem.penalty ? problem.penalty(ev.u) : 0.0;
      }
    });
    for (std::size_t idx : fresh) {
      const Evaluation& ev = result.evaluations[idx];
      if (!best_any || better(ev, result.evaluations[*best_any])) best_any = idx;
      if (ev.penalty == 0.0 && std::isfinite(ev.g) &&
          (!best_feasible || better(ev, result.evaluations[*best_feasible])))
        best_feasible = idx;
    }

    std::vector<std::size_t> order(count);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return result.evaluations[eval_index[a]].g < result.evaluations[eval_index[b]].g;
    });

    double sum = 0.0;
    int finite = 0;
    for (std::size_t i = 0; i < count; ++i) {
      const double g = result.evaluations[eval_index[i]].g;
      running_best = std::min(running_best, g);
      if (std::isfinite(g)) {
        sum += g;
        ++finite;
      }
    }

    std::vector<Eigen::VectorXd> ranked;
    ranked.reserve(count);
    for (std::size_t i : order) ranked.push_back(space.restrict(pop.snapped[i]));
    for (int i = 0; i < settings.parents; ++i)
      if (!std::isfinite(result.evaluations[eval_index[order[static_cast<std::size_t>(i)]]].g))
        throw OptimizerStateError("objective is infinite for a selected parent; the search space yields no coverage");
    state = update(state, ranked);

    result.history.push_back({k, running_best, finite > 0 ? sum / finite : std::numeric_limits<double>::infinity(),
                              state.sigma});
  }

  const std::size_t pick = best_feasible ? *best_feasible : *best_any;
  result.best_u = result.evaluations[pick].u;
  result.best_g = result.evaluations[pick].g;
  result.best_penalty = result.evaluations[pick].penalty;
  result.status = best_feasible ? OptimizeStatus::kFeasible : OptimizeStatus::kNoFeasibleCandidate;
  result.final_state = std::move(state);
  return result;
}

Placement to_placement(const Eigen::VectorXd& u, const LidarSpec& spec, std::string name) {
  if (u.size() == 0 || u.size() % 4 != 0) throw ValidationError("placement vector length must be a multiple of 4");
  Placement p;
  p.name = std::move(name);
  p.spec = spec;
  for (Eigen::Index l = 0; l < u.size() / 4; ++l)
    p.lidars.push_back({u[4 * l], u[4 * l + 1], u[4 * l + 2], u[4 * l + 3]});
  return p;
}

Eigen::VectorXd to_vector(const Placement& placement) {
  Eigen::VectorXd u(4 * static_cast<Eigen::Index>(placement.lidars.size()));
  for (std::size_t l = 0; l < placement.lidars.size(); ++l) {
    const auto& e = placement.lidars[l];
    u.segment<4>(4 * static_cast<Eigen::Index>(l)) << e.x, e.y, e.z, e.roll;
  }
  return u;
}

std::string to_string(OptimizeStatus status) {
  return status == OptimizeStatus::kFeasible ? "feasible" : "no_feasible_candidate";
}

}  // namespace lplace
