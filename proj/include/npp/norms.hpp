#pragma once

#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "npp/linalg.hpp"

namespace npp {

// Value of a norm together with a norming functional: `dual` lies in the dual
// unit ball and <dual, y> = value.
struct NormValue {
  double value = 0.0;
  Vector dual;
};

// Minimum of a norm over an affine set y0 + span(M).
struct AffineMin {
  double value = 0.0;
  Vector argmin;  // y0 + M t*
  Vector dual;    // norming functional at argmin, annihilates span(M)
};

class PolyNorm;

// Optimal LP bases per column, kept by callers that evaluate the same norm
// repeatedly on slowly moving columns (warm starts).
struct BasisCache {
  std::vector<std::vector<Eigen::Index>> bases;
};

class Norm {
 public:
  virtual ~Norm() = default;
  virtual int dim() const = 0;
  virtual NormValue evaluate(const Vector& y) const = 0;
  virtual double value(const Vector& y) const { return evaluate(y).value; }
  // Column-wise evaluation. `duals` may be null.
  virtual void evaluate_columns(const Matrix& Y, Vector& values, Matrix* duals) const;
  // Same values, but may reuse and update `cache` (slot j belongs to column j).
  virtual void evaluate_columns_warm(const Matrix& Y, Vector& values, Matrix* duals, BasisCache& cache) const {
    (void)cache;
    evaluate_columns(Y, values, duals);
  }

  // Structural views used for closed forms.
  // N(y) = |L y|.
  virtual const Matrix* ellipse_map() const { return nullptr; }
  // N(y) = max_i |<W_i, y>|, W is n x p.
  virtual const Matrix* max_abs_map() const { return nullptr; }
  // N(y) = |L y|_1, L is p x n.
  virtual const Matrix* sum_abs_map() const { return nullptr; }
  virtual std::shared_ptr<const PolyNorm> polyhedral() const { return nullptr; }
};

using NormPtr = std::shared_ptr<const Norm>;

// N(y) = |L y|_q.
class LqNorm : public Norm {
 public:
  LqNorm(Matrix L, double q);
  int dim() const override { return static_cast<int>(L_.cols()); }
  NormValue evaluate(const Vector& y) const override;
  double value(const Vector& y) const override;
  void evaluate_columns(const Matrix& Y, Vector& values, Matrix* duals) const override;
  const Matrix* ellipse_map() const override { return q_ == 2.0 ? &L_ : nullptr; }
  const Matrix* max_abs_map() const override { return std::isinf(q_) ? &Lt_ : nullptr; }
  const Matrix* sum_abs_map() const override { return q_ == 1.0 ? &L_ : nullptr; }
  std::shared_ptr<const PolyNorm> polyhedral() const override;
  const Matrix& map() const { return L_; }
  double q() const { return q_; }

 private:
  double vec_value(const Vector& z) const;
  Vector vec_dual(const Vector& z, double value) const;
  Matrix L_, Lt_;
  double q_;
};

// Polyhedral norms in two closed families.
//   synthesis: N(y) = min{ |lambda|_1 : A lambda + G xi = R y }
//   analysis:  N(y) = min_xi max_i |(A^T (R y + G xi))_i|
// Both are closed under precomposition and minimisation over affine fibres.
class PolyNorm : public Norm, public std::enable_shared_from_this<PolyNorm> {
 public:
  enum class Form { synthesis, analysis };
  PolyNorm(Form form, Matrix A, Matrix G, Matrix R);
  int dim() const override { return static_cast<int>(R_.cols()); }
  NormValue evaluate(const Vector& y) const override;
  double value(const Vector& y) const override;
  void evaluate_columns_warm(const Matrix& Y, Vector& values, Matrix* duals, BasisCache& cache) const override;
  const Matrix* max_abs_map() const override { return closed_ ? &W_ : nullptr; }
  std::shared_ptr<const PolyNorm> polyhedral() const override;

  AffineMin minimize_affine(const Vector& y0, const Matrix& M) const;
  std::shared_ptr<const PolyNorm> precompose(const Matrix& T) const;
  std::shared_ptr<const PolyNorm> fiber_min(const Matrix& B, const Matrix& M) const;

  Form form() const { return form_; }

 private:
  // Left null space W of a free-variable block and its pseudo-inverse.
  struct Reduction {
    Matrix W, pinv;
  };
  static Reduction reduce(const Matrix& Gx);

  Form form_;
  Matrix A_, G_, R_;
  bool closed_;
  Matrix W_;  // R^T A when the analysis form has no G
  Reduction reduction_;  // for G alone (synthesis form)
};

std::shared_ptr<const PolyNorm> make_poly(PolyNorm::Form form, Matrix A, Matrix G, Matrix R);

// y -> base(T y).
class PrecomposedNorm : public Norm {
 public:
  PrecomposedNorm(NormPtr base, Matrix T);
  int dim() const override { return static_cast<int>(T_.cols()); }
  NormValue evaluate(const Vector& y) const override;
  double value(const Vector& y) const override;
  void evaluate_columns(const Matrix& Y, Vector& values, Matrix* duals) const override;
  void evaluate_columns_warm(const Matrix& Y, Vector& values, Matrix* duals, BasisCache& cache) const override;
  const NormPtr& base() const { return base_; }
  const Matrix& map() const { return T_; }

 private:
  NormPtr base_;
  Matrix T_;
};

// c -> min_t base(B c + M t), solved by L-BFGS. Used for smooth bases only.
class FiberMinNorm : public Norm {
 public:
  FiberMinNorm(NormPtr base, Matrix B, Matrix M);
  int dim() const override { return static_cast<int>(B_.cols()); }
  NormValue evaluate(const Vector& c) const override;

 private:
  NormPtr base_;
  Matrix B_, M_;
};

NormPtr precompose(const NormPtr& base, const Matrix& T);
NormPtr fiber_min(const NormPtr& base, const Matrix& B, const Matrix& M);

// min over y0 + span(M) of N; exact for ellipsoidal and polyhedral norms.
AffineMin min_norm_affine(const Norm& N, const Vector& y0, const Matrix& M);

// Exponent conjugate to q (1 <-> inf).
double conjugate_exponent(double q);

}  // namespace npp
