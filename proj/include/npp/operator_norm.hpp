#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "npp/bodies.hpp"

namespace npp {

enum class EstimateKind { exact, lower_witness };
std::string to_string(EstimateKind kind);

struct NormEstimate {
  double value = 0.0;
  EstimateKind kind = EstimateKind::exact;
  Vector witness;  // x with |T x|_to / |x|_from = value
  int restarts = 0;
};

struct OperatorNormOptions {
  int restarts = 64;
  std::uint64_t seed = 0;
  int max_iterations = 200;
  // Vertex enumeration is used when at most this many extreme points exist.
  std::size_t vertex_limit = std::size_t{1} << 16;
  // Extra starting points tried before the random restarts.
  std::vector<Vector> starts;
};

// |T : K1 -> K2| = max over x in K1 of |T x|_{K2}.
NormEstimate operator_norm(const Matrix& T, const GaugeBody& from, const GaugeBody& to,
                           const OperatorNormOptions& options = {});

// Norm of the coordinate projection onto k seeded random coordinates, compared
// with the sqrt(k) bound on the projection constant of a k-dimensional
// subspace. A norm above the bound is inconclusive, not a contradiction.
struct ProjectionRecord {
  int k = 0;
  std::vector<int> coordinates;
  double norm = 0.0;
  double bound = 0.0;
  bool satisfied = false;
};

ProjectionRecord projection_constant_record(const GaugeBody& body, int k, std::uint64_t seed);

}  // namespace npp
