#pragma once

#include <cstdint>
#include <vector>

#include "npp/gaussian.hpp"
#include "npp/operator_norm.hpp"

namespace npp {

struct EuclideanRatio {
  double r = 0.0;  // 1 / max of the gauge over unit vectors of F
  double R = 0.0;  // 1 / min of the gauge over unit vectors of F
  double ratio = 1.0;
  Vector r_witness;  // unit vector of F with r * gauge = 1
  Vector R_witness;  // unit vector of F with R * gauge = 1
  bool exact = false;
};

EuclideanRatio euclidean_ratio(const GaugeBody& body, const Subspace& F, int directions = 4096,
                               std::uint64_t seed = 0, int refinements = 32);

// m = floor((c_desk * ell / radius_bound)^2), capped at ambient; 0 if below 1.
int dvoretzky_dimension(double ell, double radius_bound, double c_desk, int ambient);
// Uses l(body) (exact for ellipsoids, otherwise Monte Carlo).
int dvoretzky_dimension(const GaugeBody& body, double radius_bound, double c_desk, long samples = 20000,
                        std::uint64_t seed = 0);

struct SectionOptions {
  double ratio_cap = 2.0;
  double C_desk = 8.0;
  double c_desk = 0.25;  // recorded only; the caller picks m
  int directions = 4096;
  int refinements = 32;
  long ell_samples = 20000;
  OperatorNormOptions norm_options{};
};

struct SectionTrial {
  std::uint64_t seed = 0;
  int m = 0;
  double r = 0.0, R = 0.0, ratio = 0.0, pf_norm = 0.0;
};

struct SectionReport {
  Subspace F = Subspace::full(1);
  double r = 0.0, R = 0.0, ratio = 1.0;
  Vector r_witness, R_witness;
  NormEstimate pf_norm;
  double bound = 0.0;  // l(K1 polar) l(K2) / n
  EllEstimate ell_k1polar, ell_k2;
  double alpha = 0.0;  // K1 inside alpha B2
  double beta = 0.0;   // K2 contains B2 / beta
  int trials = 0;
  int chosen = 0;
  double fraction_good = 0.0;  // ratio <= ratio_cap and pf_norm <= C_desk bound
  double ratio_cap = 0.0, C_desk = 0.0, c_desk = 0.0;
  std::vector<SectionTrial> trial_rows;
};

SectionReport find_euclidean_complement(const GaugeBody& K1, const GaugeBody& K2, int m, int trials,
                                        std::uint64_t seed, const SectionOptions& options = {});

}  // namespace npp
