#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "npp/linalg.hpp"
#include "npp/norms.hpp"

namespace npp {

// Linear subspace given by a column-orthonormal basis.
class Subspace {
 public:
  // Orthonormalises B unless it is already column-orthonormal to 1e-12.
  static Subspace from_basis(const Matrix& B);
  static Subspace full(int n);

  int ambient_dim() const { return static_cast<int>(basis_.rows()); }
  int dim() const { return static_cast<int>(basis_.cols()); }
  const Matrix& basis() const { return basis_; }
  const Matrix& projector() const { return projector_; }
  const Matrix& complement_basis() const { return complement_; }
  Subspace complement() const;
  // Intersection with another subspace of the same ambient space.
  Subspace intersect(const Subspace& other) const;

 private:
  Subspace(Matrix basis);
  Matrix basis_, projector_, complement_;
};

// Symmetric convex body K, described by a recipe, with gauge |.|_K and
// support (dual gauge) |.|_{K polar}. Immutable and cheap to copy.
class GaugeBody {
 public:
  static GaugeBody lq(int n, double q);
  static GaugeBody ball(int n);
  // Columns of V are vertices; the set is closed under negation.
  static GaugeBody polytope(const Matrix& V);
  static GaugeBody linear_image(const Matrix& u, const GaugeBody& base);
  static GaugeBody polar_of(const GaugeBody& base);
  static GaugeBody section(const GaugeBody& base, const Subspace& F);
  static GaugeBody projection(const GaugeBody& base, const Subspace& F);

  GaugeBody polar() const { return polar_of(*this); }

  int dim() const;
  const std::string& type() const;
  double gauge(const Vector& x) const;
  double support(const Vector& y) const;
  // dual: a point of the polar body norming x.
  NormValue gauge_eval(const Vector& x) const;
  // dual: a point of the body attaining the support value.
  NormValue support_eval(const Vector& y) const;

  const NormPtr& gauge_norm() const;
  const NormPtr& support_norm() const;

  // Extreme points up to sign, when the body is a polytope with at most
  // `limit` of them (columns of the result).
  std::optional<Matrix> vertices(std::size_t limit = std::size_t{1} << 20) const;

  // Ellipsoid K = E B_2 (support(y) = |E^T y|).
  std::optional<Matrix> ellipsoid_map() const;

  nlohmann::json to_json() const;
  static GaugeBody from_json(const nlohmann::json& j);

  bool same_as(const GaugeBody& other) const { return node_ == other.node_; }

  struct Node;

 private:
  explicit GaugeBody(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
  std::shared_ptr<const Node> node_;
};

// Parses "lq n=32 q=1", "ball n=8", "lq n=8 q=inf".
GaugeBody parse_body_shorthand(const std::vector<std::string>& tokens);

}  // namespace npp
