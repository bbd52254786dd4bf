#include "npp/bodies.hpp"

#include <cmath>
#include <limits>
#include <map>

namespace npp {

// ---------------------------------------------------------------- Subspace

Subspace::Subspace(Matrix basis) : basis_(std::move(basis)) {
  projector_ = basis_ * basis_.transpose();
  complement_ = orthogonal_complement(basis_);
}

Subspace Subspace::from_basis(const Matrix& B) {
  if (B.cols() == 0) throw InputError("subspace of dimension 0");
  if (B.cols() > B.rows()) throw InputError("subspace basis has more columns than rows");
  if (is_column_orthonormal(B, 1e-12)) return Subspace(B);
  return Subspace(orthonormalize(B));
}

Subspace Subspace::full(int n) { return Subspace(Matrix::Identity(n, n)); }

Subspace Subspace::complement() const { return Subspace::from_basis(complement_); }

Subspace Subspace::intersect(const Subspace& other) const {
  if (other.ambient_dim() != ambient_dim()) throw InputError("dimension mismatch");
  // x = B c lies in other iff (I - P_other) B c = 0.
  Matrix C = (Matrix::Identity(ambient_dim(), ambient_dim()) - other.projector_) * basis_;
  Eigen::JacobiSVD<Matrix> svd(C, Eigen::ComputeFullV);
  const Vector& s = svd.singularValues();
  Eigen::Index nonzero = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s(i) > 1e-9) ++nonzero;
  Matrix kernel = svd.matrixV().rightCols(basis_.cols() - nonzero);
  return Subspace::from_basis(basis_ * kernel);
}

// ------------------------------------------------------------- GaugeBody

struct GaugeBody::Node {
  std::string type;
  int n = 0;
  double q = 2.0;
  Matrix data;  // vertices / map / basis
  std::vector<GaugeBody> children;
  NormPtr gauge, support;
};

namespace {

std::shared_ptr<GaugeBody::Node> new_node(std::string type, int n) {
  auto node = std::make_shared<GaugeBody::Node>();
  node->type = std::move(type);
  node->n = n;
  return node;
}

}  // namespace

GaugeBody GaugeBody::lq(int n, double q) {
  if (n < 1) throw InputError("dimension must be positive");
  if (!(q >= 1.0)) throw InputError("q must lie in [1, inf]");
  auto node = new_node("lq", n);
  node->q = q;
  Matrix I = Matrix::Identity(n, n);
  node->gauge = std::make_shared<LqNorm>(I, q);
  node->support = std::make_shared<LqNorm>(I, conjugate_exponent(q));
  return GaugeBody(node);
}

GaugeBody GaugeBody::ball(int n) {
  GaugeBody b = lq(n, 2.0);
  auto node = std::make_shared<Node>(*b.node_);
  node->type = "ball";
  return GaugeBody(node);
}

GaugeBody GaugeBody::polytope(const Matrix& V) {
  if (V.rows() < 1 || V.cols() < 1) throw InputError("polytope needs at least one vertex");
  if (!V.allFinite()) throw InputError("polytope vertices must be finite");
  // Keep one representative of each pair {v, -v}; drop zeros.
  std::vector<Eigen::Index> keep;
  for (Eigen::Index j = 0; j < V.cols(); ++j) {
    if (V.col(j).cwiseAbs().maxCoeff() == 0.0) continue;
    bool dup = false;
    for (Eigen::Index k : keep) {
      if ((V.col(j) - V.col(k)).cwiseAbs().maxCoeff() == 0.0 || (V.col(j) + V.col(k)).cwiseAbs().maxCoeff() == 0.0) {
        dup = true;
        break;
      }
    }
    if (!dup) keep.push_back(j);
  }
  Matrix W(V.rows(), static_cast<Eigen::Index>(keep.size()));
  for (std::size_t i = 0; i < keep.size(); ++i) W.col(static_cast<Eigen::Index>(i)) = V.col(keep[i]);
  if (W.cols() == 0 || numerical_rank(W, 1e-10 * std::max(1.0, W.cwiseAbs().maxCoeff())) < W.rows())
    throw InputError("polytope vertices do not span the space");
  const int n = static_cast<int>(V.rows());
  auto node = new_node("polytope", n);
  node->data = W;
  node->gauge = make_poly(PolyNorm::Form::synthesis, W, Matrix(n, 0), Matrix::Identity(n, n));
  node->support = make_poly(PolyNorm::Form::analysis, W, Matrix(n, 0), Matrix::Identity(n, n));
  return GaugeBody(node);
}

GaugeBody GaugeBody::linear_image(const Matrix& u, const GaugeBody& base) {
  const int n = base.dim();
  if (u.rows() != n || u.cols() != n) throw InputError("linear-image map must be square of the base dimension");
  if (!u.allFinite()) throw InputError("linear-image map must be finite");
  Eigen::FullPivLU<Matrix> lu(u);
  if (lu.rank() < n) throw InputError("linear-image map is singular");
  auto node = new_node("linear-image", n);
  node->data = u;
  node->children = {base};
  node->gauge = precompose(base.gauge_norm(), lu.inverse());
  node->support = precompose(base.support_norm(), u.transpose());
  return GaugeBody(node);
}

GaugeBody GaugeBody::polar_of(const GaugeBody& base) {
  auto node = new_node("polar", base.dim());
  node->children = {base};
  node->gauge = base.support_norm();
  node->support = base.gauge_norm();
  return GaugeBody(node);
}

GaugeBody GaugeBody::section(const GaugeBody& base, const Subspace& F) {
  if (F.ambient_dim() != base.dim()) throw InputError("dimension mismatch");
  auto node = new_node("section", F.dim());
  node->data = F.basis();
  node->children = {base};
  node->gauge = precompose(base.gauge_norm(), F.basis());
  node->support = fiber_min(base.support_norm(), F.basis(), F.complement_basis());
  return GaugeBody(node);
}

GaugeBody GaugeBody::projection(const GaugeBody& base, const Subspace& F) {
  if (F.ambient_dim() != base.dim()) throw InputError("dimension mismatch");
  auto node = new_node("projection", F.dim());
  node->data = F.basis();
  node->children = {base};
  node->gauge = fiber_min(base.gauge_norm(), F.basis(), F.complement_basis());
  node->support = precompose(base.support_norm(), F.basis());
  return GaugeBody(node);
}

int GaugeBody::dim() const { return node_->n; }
const std::string& GaugeBody::type() const { return node_->type; }
const NormPtr& GaugeBody::gauge_norm() const { return node_->gauge; }
const NormPtr& GaugeBody::support_norm() const { return node_->support; }

namespace {

// Norms are evaluated on the representative of {x, -x} whose first nonzero
// coordinate is positive, which makes symmetry exact.
bool needs_flip(const Vector& x) {
  for (Eigen::Index i = 0; i < x.size(); ++i)
    if (x(i) != 0.0) return x(i) < 0.0;
  return false;
}

double sym_value(const Norm& N, const Vector& x) { return needs_flip(x) ? N.value(-x) : N.value(x); }

NormValue sym_evaluate(const Norm& N, const Vector& x) {
  if (!needs_flip(x)) return N.evaluate(x);
  NormValue nv = N.evaluate(-x);
  nv.dual = -nv.dual;
  return nv;
}

}  // namespace

double GaugeBody::gauge(const Vector& x) const {
  if (x.size() != dim()) throw InputError("dimension mismatch");
  return sym_value(*node_->gauge, x);
}

double GaugeBody::support(const Vector& y) const {
  if (y.size() != dim()) throw InputError("dimension mismatch");
  return sym_value(*node_->support, y);
}

NormValue GaugeBody::gauge_eval(const Vector& x) const {
  if (x.size() != dim()) throw InputError("dimension mismatch");
  return sym_evaluate(*node_->gauge, x);
}

NormValue GaugeBody::support_eval(const Vector& y) const {
  if (y.size() != dim()) throw InputError("dimension mismatch");
  return sym_evaluate(*node_->support, y);
}

std::optional<Matrix> GaugeBody::vertices(std::size_t limit) const {
  const Norm& s = *node_->support;
  if (const Matrix* W = s.max_abs_map()) {
    if (static_cast<std::size_t>(W->cols()) <= limit) return *W;
    return std::nullopt;
  }
  if (const Matrix* L = s.sum_abs_map()) {
    // K = conv{L^T e : e in {-1,1}^p}; enumerate up to sign.
    const Eigen::Index p = L->rows();
    if (p > 20 || (std::size_t{1} << (p - 1)) > limit) return std::nullopt;
    const std::size_t count = std::size_t{1} << (p - 1);
    Matrix V(L->cols(), static_cast<Eigen::Index>(count));
    for (std::size_t mask = 0; mask < count; ++mask) {
      Vector e(p);
      e(0) = 1.0;
      for (Eigen::Index i = 1; i < p; ++i) e(i) = (mask >> (i - 1)) & 1 ? -1.0 : 1.0;
      V.col(static_cast<Eigen::Index>(mask)) = L->transpose() * e;
    }
    return V;
  }
  return std::nullopt;
}

std::optional<Matrix> GaugeBody::ellipsoid_map() const {
  if (const Matrix* L = node_->support->ellipse_map()) return Matrix(L->transpose());
  return std::nullopt;
}

// ------------------------------------------------------------------ JSON

namespace {

nlohmann::json matrix_rows(const Matrix& M) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < M.cols(); ++j) row.push_back(M(i, j));
    rows.push_back(row);
  }
  return rows;
}

Matrix parse_rows(const nlohmann::json& j, const char* what) {
  if (!j.is_array() || j.empty()) throw InputError(std::string(what) + " must be a non-empty array of arrays");
  const std::size_t rows = j.size();
  std::size_t cols = 0;
  for (std::size_t i = 0; i < rows; ++i) {
    if (!j[i].is_array()) throw InputError(std::string(what) + " must be an array of arrays");
    if (i == 0) cols = j[i].size();
    if (j[i].size() != cols || cols == 0) throw InputError(std::string(what) + " rows must have equal nonzero length");
  }
  Matrix M(rows, cols);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t k = 0; k < cols; ++k) {
      const auto& v = j[i][k];
      if (!v.is_number()) throw InputError(std::string(what) + " entries must be numbers");
      double d = v.get<double>();
      if (!std::isfinite(d)) throw InputError(std::string(what) + " entries must be finite");
      M(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = d;
    }
  return M;
}

int parse_dim(const nlohmann::json& j) {
  if (!j.contains("n") || !j["n"].is_number_integer()) throw InputError("body needs integer field \"n\"");
  int n = j["n"].get<int>();
  if (n < 1) throw InputError("\"n\" must be positive");
  return n;
}

double parse_q(const nlohmann::json& v) {
  if (v.is_string()) {
    std::string s = v.get<std::string>();
    if (s == "inf" || s == "infinity" || s == "Infinity") return std::numeric_limits<double>::infinity();
    throw InputError("q must be a number or \"inf\"");
  }
  if (v.is_null()) return std::numeric_limits<double>::infinity();
  if (!v.is_number()) throw InputError("q must be a number or \"inf\"");
  return v.get<double>();
}

}  // namespace

nlohmann::json GaugeBody::to_json() const {
  const Node& nd = *node_;
  nlohmann::json j;
  j["type"] = nd.type;
  if (nd.type == "lq") {
    j["n"] = nd.n;
    if (std::isinf(nd.q))
      j["q"] = "inf";
    else
      j["q"] = nd.q;
  } else if (nd.type == "ball") {
    j["n"] = nd.n;
  } else if (nd.type == "polytope") {
    j["vertices"] = matrix_rows(nd.data.transpose());
  } else if (nd.type == "linear-image") {
    j["map"] = matrix_rows(nd.data);
    j["base"] = nd.children[0].to_json();
  } else if (nd.type == "polar") {
    j["base"] = nd.children[0].to_json();
  } else {
    j["basis"] = matrix_rows(nd.data);
    j["base"] = nd.children[0].to_json();
  }
  return j;
}

GaugeBody GaugeBody::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw InputError("body specification must be a JSON object");
  if (!j.contains("type") || !j["type"].is_string()) throw InputError("body needs string field \"type\"");
  const std::string type = j["type"].get<std::string>();
  auto base = [&]() {
    if (!j.contains("base")) throw InputError("\"" + type + "\" body needs field \"base\"");
    return from_json(j["base"]);
  };
  if (type == "lq") {
    if (!j.contains("q")) throw InputError("lq body needs field \"q\"");
    return lq(parse_dim(j), parse_q(j["q"]));
  }
  if (type == "ball") return ball(parse_dim(j));
  if (type == "polytope") {
    if (!j.contains("vertices")) throw InputError("polytope needs field \"vertices\"");
    return polytope(parse_rows(j["vertices"], "vertices").transpose());
  }
  if (type == "linear-image") {
    if (!j.contains("map")) throw InputError("linear-image needs field \"map\"");
    Matrix u = parse_rows(j["map"], "map");
    return linear_image(u, base());
  }
  if (type == "polar") return polar_of(base());
  if (type == "section" || type == "projection") {
    if (!j.contains("basis")) throw InputError(type + " needs field \"basis\"");
    GaugeBody b = base();
    Matrix B = parse_rows(j["basis"], "basis");
    if (B.rows() != b.dim()) throw InputError("basis must have one row per ambient coordinate");
    Subspace F = Subspace::from_basis(B);
    return type == "section" ? section(b, F) : projection(b, F);
  }
  throw InputError("unknown body type \"" + type + "\"");
}

GaugeBody parse_body_shorthand(const std::vector<std::string>& tokens) {
  if (tokens.empty()) throw InputError("empty body description");
  std::map<std::string, std::string> kv;
  for (std::size_t i = 1; i < tokens.size(); ++i) {
    auto eq = tokens[i].find('=');
    if (eq == std::string::npos) throw InputError("expected key=value, got \"" + tokens[i] + "\"");
    kv[tokens[i].substr(0, eq)] = tokens[i].substr(eq + 1);
  }
  auto get_int = [&](const char* key) {
    auto it = kv.find(key);
    if (it == kv.end()) throw InputError(std::string("missing ") + key + "=");
    try {
      std::size_t pos = 0;
      int v = std::stoi(it->second, &pos);
      if (pos != it->second.size()) throw InputError("bad integer for " + std::string(key));
      return v;
    } catch (const std::logic_error&) {
      throw InputError("bad integer for " + std::string(key));
    }
  };
  const std::string& kind = tokens[0];
  if (kind == "lq") {
    auto it = kv.find("q");
    if (it == kv.end()) throw InputError("missing q=");
    double q;
    if (it->second == "inf")
      q = std::numeric_limits<double>::infinity();
    else {
      try {
        q = std::stod(it->second);
      } catch (const std::logic_error&) {
        throw InputError("bad value for q");
      }
    }
    return GaugeBody::lq(get_int("n"), q);
  }
  if (kind == "ball") return GaugeBody::ball(get_int("n"));
  throw InputError("unknown shorthand body \"" + kind + "\"");
}

}  // namespace npp
