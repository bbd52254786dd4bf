#pragma once

#include <cstdint>
#include <limits>
#include <utility>
#include <vector>

#include "npp/operator_norm.hpp"

namespace npp {

// x_j = P_{F_j} y_j with y_j in K0 attaining a_j = |P_{F_j} : K0 -> l2|,
// F_j the orthogonal complement of x_1..x_{j-1}.
struct GreedyChain {
  Matrix x, y, u;       // columns j = 0..k-1
  std::vector<double> a;
  std::vector<EstimateKind> kinds;
  int k() const { return static_cast<int>(a.size()); }
  // Basis of F_{j+1} (0-based j), i.e. the complement of x_0..x_{j-1}.
  Matrix F_basis(int j) const;
};

struct ChainOptions {
  // Stop after the first j with a_j < stop_below (that step is kept).
  double stop_below = 0.0;
  OperatorNormOptions norm_options{};
};

GreedyChain greedy_chain(const GaugeBody& body, int k, std::uint64_t seed, const ChainOptions& options = {});

// Longest interval [first, first + length) with max a / min a <= 2 (0-based);
// ties go to the smallest start.
struct Interval {
  int first = 0;
  int length = 0;
  double a_prime = 0.0;  // a at the interval start
};
Interval pick_interval(const std::vector<double>& a);

}  // namespace npp
