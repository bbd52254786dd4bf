#pragma once

#include <functional>

#include "npp/linalg.hpp"

namespace npp {

struct LbfgsResult {
  Vector x;
  double f = 0.0;
  int iterations = 0;
  bool converged = false;
};

// Objective returns f(x) and writes the gradient into its second argument.
using Objective = std::function<double(const Vector&, Vector&)>;

LbfgsResult minimize_lbfgs(const Objective& fg, Vector x0, int max_iter = 500, double gtol = 1e-10);

}  // namespace npp
