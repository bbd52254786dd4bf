#pragma once

#include <cstdint>

#include "npp/gaussian.hpp"

namespace npp {

struct PositionResult {
  Matrix map;  // u; the positioned body is u K
  EllEstimate ell_k;
  EllEstimate ell_kpolar;
  double product = 0.0;
  double product_stderr = 0.0;
  double start_product = 0.0;  // l(K) l(K polar) at u = Id, same samples
  double target = 0.0;         // n (1 + log n)
  int iterations = 0;
  bool balanced = false;
};

// u = t Id with t = sqrt(l(K) / l(K polar)), equalising both functionals.
PositionResult balance_scale(const GaugeBody& body, long samples, std::uint64_t seed);

// Minimises l(uK) l((uK) polar) over u = exp(S), S symmetric, by L-BFGS on a
// fixed sample set. The result replaces the identity only on a 3-standard-error
// gain; reported values come from a fresh sample set. budget counts iterations.
PositionResult optimize_position(const GaugeBody& body, int budget, long samples, std::uint64_t seed);

}  // namespace npp
