#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "npp/chain.hpp"
#include "npp/gaussian.hpp"

namespace npp {

// A stage could not certify what the corresponding existence result promises.
class ExtractionFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Largest subset of {0..count-1} accepted by a monotone (downward closed)
// predicate, by depth-first branch and bound. Returns sorted indices, or the
// best found when `budget` predicate calls run out (complete = false).
struct SubsetSearch {
  std::vector<int> indices;
  bool complete = true;
};
SubsetSearch largest_feasible_subset(int count, const std::function<bool(const std::vector<int>&)>& feasible,
                                     int at_least, long budget = 200000);

struct InvertibleSelection {
  std::vector<int> sigma;  // column indices of Y
  double sigma_min = 0.0;
  std::vector<int> greedy;
};

// Columns of Y whose synthesis operator has smallest singular value >= a'/8.
InvertibleSelection restricted_invertibility(const Matrix& Y, double a_prime, int exhaustive_limit = 12);

// z_i in span(Y) with <z_i, y_j> = delta_ij.
Matrix biorthogonal(const Matrix& Y);

struct TauSelection {
  std::vector<int> tau;
  int target = 0;          // ceil(s M1 / 2w)
  double bound = 0.0;      // 4 M1
  double certified = 0.0;  // exact max over signs of |sum_{tau} eps_i z_i|
  std::vector<int> greedy;
};

TauSelection talagrand_select(const Matrix& Z, const GaugeBody& dual_body, const SignAverage& m1w,
                              int exhaustive_limit = 16);

struct BlockingRound {
  int input = 0;
  int output = 0;
  bool subset_branch = false;
  std::vector<int> subset;  // chosen indices when subset_branch
  double threshold = 0.0;   // beta^{1/2}
  double certified = 0.0;   // max over signs on the output
};

struct BlockingResult {
  Matrix v;
  double beta = 0.0;
  double omega = 0.0;  // certified max over signs on the output
  int rounds_requested = 0;
  std::vector<BlockingRound> rounds;
  bool flagged = false;  // too few vectors to block
};

BlockingRound james_round(const Matrix& V, const GaugeBody& norm_body, double beta, std::uint64_t seed,
                          Matrix& out);
BlockingResult james_blocking(const Matrix& V, const GaugeBody& norm_body, double beta, int rounds,
                              std::uint64_t seed);

// sup{|t_i| : |sum_j t_j z_j| <= 1}.
double coordinate_functional_norm(const Matrix& Z, int i, const GaugeBody& body);

struct FinalSelection {
  std::vector<int> tau_prime;
  int target = 0;  // ceil(l / 8w')
  std::vector<double> functional_norms;
  std::vector<int> greedy;
};

FinalSelection final_select(const Matrix& Zp, const GaugeBody& dual_body, double w_prime, int exhaustive_limit = 12);

struct ExtractionParams {
  long ell_samples = 20000;
  int ri_exhaustive = 12;
  int talagrand_exhaustive = 16;
  int final_exhaustive = 12;
  double C_report = 8.0;
  OperatorNormOptions norm_options{};
};

struct Check {
  std::string name;
  double value = 0.0;
  double bound = 0.0;
  bool pass = false;
  bool required = true;  // informational checks do not affect `passed`
};

struct ExtractionReport {
  double a = 0.0;
  int k = 0;
  GreedyChain chain;
  bool refused = false;
  int refusal_index = -1;  // 0-based j with a_j < a
  Matrix refusal_F;        // basis of F_j

  Interval interval;
  std::vector<int> sigma;  // chain indices
  double sigma_min = 0.0;
  Matrix z;  // biorthogonal system, columns over sigma
  EllEstimate ell_polar;  // l(K0 polar)
  EllEstimate M;          // (E |sum g_i z_i|^2)^{1/2}
  SignAverage m1w;
  TauSelection tau;
  int d_formula = 0;
  BlockingResult blocking;
  double w_prime = 0.0;
  FinalSelection final;
  int m = 0;
  Matrix dual_basis;  // z'_i, i in tau', unit-ball K0 polar side
  Matrix basis;       // f_i: minimal-norm extensions, range of Q
  Matrix Q;
  NormEstimate q_norm;
  double c_f = 0.0;  // max |f_i|_{K0}
  double iso = 0.0;  // c_f * omega, bound on d(range Q, l1^m)
  double gamma = 0.0;
  double k_power = 0.0;  // k^{1/gamma}
  std::vector<Check> checks;
  std::string failure;
  bool passed = false;
};

ExtractionReport extract_l1(const GaugeBody& body, double a, int k, std::uint64_t seed,
                            const ExtractionParams& params = {});

}  // namespace npp
