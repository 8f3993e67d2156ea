#include "lplace/certificate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

#include "lplace/ingest.hpp"

namespace lplace {

Certificate certify(std::span<const Evaluation> evals, const SearchSpace& space, std::optional<double> analytic_k_g) {
  space.validate();
  if (analytic_k_g && !(*analytic_k_g >= 0.0 && std::isfinite(*analytic_k_g)))
    throw ConfigError("analytic k_G must be finite and >= 0");

  std::vector<const Evaluation*> pts;
  for (const auto& e : evals)
    if (std::isfinite(e.g)) pts.push_back(&e);

  Certificate cert;
  cert.delta = space.delta;
  cert.n_samples = pts.size();
  double g_min = std::numeric_limits<double>::infinity();
  double g_max = -std::numeric_limits<double>::infinity();
  for (const auto* e : pts) {
    g_min = std::min(g_min, e->g);
    g_max = std::max(g_max, e->g);
  }

  std::vector<Eigen::VectorXd> free;
  free.reserve(pts.size());
  for (const auto* e : pts) free.push_back(space.restrict(e->u));

  bool distinct = false;
  double k_est = 0.0;
  for (std::size_t a = 0; a < pts.size(); ++a) {
    for (std::size_t b = a + 1; b < pts.size(); ++b) {
      const double d = (free[a] - free[b]).norm();
      if (d == 0.0) continue;
      distinct = true;
      k_est = std::max(k_est, std::abs(pts[a]->g - pts[b]->g) / d);
    }
  }
  if (!distinct) throw InsufficientDataError("certificate needs at least two distinct evaluated points");

  cert.c_m = g_max - g_min;
  cert.best_g = g_min;
  cert.k_g = analytic_k_g.value_or(k_est);
  cert.k_g_is_estimate = !analytic_k_g.has_value();
  cert.bound_thm1 = cert.c_m + cert.k_g * cert.delta;
  cert.bound_cor1 = cert.k_g * space.restrict(space.widths()).sum() + cert.k_g * cert.delta;
  return cert;
}

std::string format_certificate(const Certificate& cert) {
  std::ostringstream out;
  out << "[certificate]\n"
      << "C_M = " << format_double(cert.c_m) << "\n"
      << "k_G = " << format_double(cert.k_g) << "\n"
      << "k_G_source = " << (cert.k_g_is_estimate ? "lower-bound estimate" : "analytic") << "\n"
      << "delta = " << format_double(cert.delta) << "\n"
      << "bound_thm1 = " << format_double(cert.bound_thm1) << "\n"
      << "bound_cor1 = " << format_double(cert.bound_cor1) << "\n"
      << "best_G = " << format_double(cert.best_g) << "\n"
      << "n_samples = " << cert.n_samples << "\n";
  return out.str();
}

}  // namespace lplace
