#pragma once

#include <Eigen/Core>

#include <optional>
#include <span>
#include <string>

#include "lplace/optimizer.hpp"

namespace lplace {

/// Optimality bound relating the best δ-grid candidate to the global optimum.
struct Certificate {
  double c_m = 0.0;  // max G - min G over the evaluated grid points
  double k_g = 0.0;  // Lipschitz constant of G
  /// True when k_g was estimated from evaluated pairs. Such an estimate can
  /// only under-state the true constant, so the bounds are not guaranteed.
  bool k_g_is_estimate = true;
  double delta = 0.0;
  double bound_thm1 = 0.0;  // C_M + k_G * delta
  double bound_cor1 = 0.0;  // k_G * sum of free widths + k_G * delta
  double best_g = 0.0;
  std::size_t n_samples = 0;
};

/// Builds the certificate from finite evaluations. `analytic_k_g`, when set,
/// replaces the pairwise estimate max |G(a) - G(b)| / |a - b|. Only free
/// dimensions enter the distance and the width sum. Throws
/// InsufficientDataError with fewer than two distinct finite points.
Certificate certify(std::span<const Evaluation> evals, const SearchSpace& space,
                    std::optional<double> analytic_k_g = std::nullopt);

/// "key = value" lines, one per field.
std::string format_certificate(const Certificate& cert);

}  // namespace lplace
