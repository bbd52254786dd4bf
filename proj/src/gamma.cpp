#include <cmath>
#include <numbers>

#include "npp/driver.hpp"

namespace npp {

GammaBounds gamma_bounds(double q, int k, int n, double c_desk) {
  if (!(q >= 2.0)) throw InputError("gamma_bounds needs q >= 2");
  if (k < 1 || n < 1) throw InputError("gamma_bounds needs k, n >= 1");
  GammaBounds g;
  g.q = q;
  g.k = k;
  g.n = n;
  g.c = c_desk;
  const bool infinite = std::isinf(q);
  const double inv_q = infinite ? 0.0 : 1.0 / q;
  const double rk = std::sqrt(static_cast<double>(k));
  g.q_star = infinite ? 1.0 : q / (q - 1.0);
  g.b1 = std::pow(static_cast<double>(k), inv_q);
  g.b2 = c_desk * rk;
  g.b3 = c_desk * (infinite ? rk : std::min(rk, std::sqrt(q)));
  g.b4 = g.b2 / std::pow(static_cast<double>(n), inv_q);
  if (infinite) {
    g.b4_window_lo = std::sqrt(2.0 / std::numbers::pi) * rk;
    g.b4_window_hi = rk;
  }
  return g;
}

NearOptTable near_optimality_table(const std::vector<double>& k_values, const std::vector<double>& n_grid,
                                   double c_desk) {
  NearOptTable t;
  for (double k : k_values) {
    if (!(k >= 16)) throw InputError("near_optimality_table needs k >= 16");
    NearOptRow r;
    r.k = k;
    r.log_k = std::log(k);
    r.q = r.log_k / std::log(r.log_k);
    r.k_pow = std::pow(k, 1.0 / r.q);
    r.rel_err = std::abs(r.k_pow - r.log_k) / r.log_k;
    r.sqrt_q_bound = c_desk * std::sqrt(r.q);
    t.rows.push_back(r);
  }
  for (double n : n_grid) {
    if (!(n >= 2)) throw InputError("near_optimality_table needs n >= 2");
    ThresholdRow r;
    r.n = n;
    r.k = std::ceil(std::exp(std::pow(4.0 * std::log(n), 2.0 / 3.0)));
    r.q = std::sqrt(std::log(r.k));
    r.n_pow = std::pow(n, 1.0 / r.q);
    r.k_quarter = std::pow(r.k, 0.25);
    r.holds = r.n_pow <= r.k_quarter * (1 + 1e-12);
    t.thresholds.push_back(r);
  }
  return t;
}

}  // namespace npp
