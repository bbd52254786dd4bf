#pragma once

#include <vector>

#include "npp/linalg.hpp"

namespace npp {

enum class LpStatus { optimal, infeasible, unbounded, iteration_limit };

struct LpResult {
  LpStatus status = LpStatus::infeasible;
  Vector x;          // primal solution
  Vector dual;       // y with A^T y <= c and b^T y = objective
  double objective = 0.0;
  // Basic columns at the optimum; indices >= A.cols() are artificial.
  std::vector<Eigen::Index> basis;
};

// Dense two-phase simplex for  min c^T x  s.t.  A x = b, x >= 0.
LpResult solve_lp(const Matrix& A, const Vector& b, const Vector& c);

}  // namespace npp
