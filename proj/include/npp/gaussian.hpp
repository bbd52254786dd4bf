#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "npp/bodies.hpp"

namespace npp {

enum class EstimateMode { monte_carlo, exact };
std::string to_string(EstimateMode mode);

struct EllEstimate {
  double value = 0.0;
  double stderr = 0.0;
  long samples = 0;
  std::uint64_t seed = 0;
  EstimateMode mode = EstimateMode::monte_carlo;
};

// l(K) = (E |g|_K^2)^{1/2}, Monte Carlo with batch-means standard error.
EllEstimate ell_body(const GaugeBody& body, long samples, std::uint64_t seed);
// Closed form when the gauge is Euclidean up to a linear map.
std::optional<EllEstimate> ell_body_exact(const GaugeBody& body);
// l(S) = (E |S g|_to^2)^{1/2} for g standard Gaussian in R^{S.cols()}.
EllEstimate ell_operator(const Matrix& S, const GaugeBody& to, long samples, std::uint64_t seed);

constexpr int kBatches = 32;

enum class SignMode { enumerated, sampled };

struct SignAverage {
  double m1 = 0.0;             // E |sum eps_i z_i|
  double w = 0.0;              // max over sign patterns
  double second_moment = 0.0;  // E |sum eps_i z_i|^2
  SignMode mode = SignMode::enumerated;
  int s = 0;
  std::vector<int> argmax;     // sign pattern attaining w
};

// Columns of Z are the vectors z_i; norm is the gauge of norm_body.
SignAverage sign_average(const Matrix& Z, const GaugeBody& norm_body, int limit = 20, long samples = 20000,
                         std::uint64_t seed = 0);

struct SignSup {
  double value = 0.0;
  std::vector<int> pattern;
  bool exceeded = false;  // stopped early after finding a pattern above the threshold
};

// Exact max over sign patterns of |sum eps_i z_i|; stops as soon as a pattern
// exceeds stop_above.
SignSup sign_sup(const Matrix& Z, const GaugeBody& norm_body,
                 double stop_above = std::numeric_limits<double>::infinity());

// Haar-distributed m-dimensional subspace of R^n.
Subspace haar_subspace(int n, int m, std::uint64_t seed);

// Matrix of standard normals whose column j is drawn from stream (seed, tag, first + j).
Matrix gaussian_columns(int rows, long first, long count, std::uint64_t seed, std::uint64_t tag);

}  // namespace npp
