#include "npp/norms.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "npp/lbfgs.hpp"
#include "npp/lp.hpp"
#include "npp/parallel.hpp"

namespace npp {

double conjugate_exponent(double q) {
  if (q == 1.0) return std::numeric_limits<double>::infinity();
  if (std::isinf(q)) return 1.0;
  return q / (q - 1.0);
}

void Norm::evaluate_columns(const Matrix& Y, Vector& values, Matrix* duals) const {
  values.resize(Y.cols());
  if (duals) duals->resize(Y.rows(), Y.cols());
  const Eigen::Index chunk = 32;
  const std::size_t chunks = static_cast<std::size_t>((Y.cols() + chunk - 1) / chunk);
  parallel_for(chunks, [&](std::size_t c) {
    const Eigen::Index lo = static_cast<Eigen::Index>(c) * chunk, hi = std::min(Y.cols(), lo + chunk);
    for (Eigen::Index j = lo; j < hi; ++j) {
      if (duals) {
        NormValue nv = evaluate(Y.col(j));
        values(j) = nv.value;
        duals->col(j) = nv.dual;
      } else {
        values(j) = value(Y.col(j));
      }
    }
  });
}

// ---------------------------------------------------------------- LqNorm

LqNorm::LqNorm(Matrix L, double q) : L_(std::move(L)), q_(q) {
  if (!(q_ >= 1.0)) throw InputError("lq exponent must lie in [1, inf]");
  Lt_ = L_.transpose();
}

double LqNorm::vec_value(const Vector& z) const {
  if (z.size() == 0) return 0.0;
  if (q_ == 1.0) return z.lpNorm<1>();
  if (q_ == 2.0) return z.norm();
  if (std::isinf(q_)) return z.lpNorm<Eigen::Infinity>();
  double mx = z.lpNorm<Eigen::Infinity>();
  if (mx == 0.0) return 0.0;
  double s = 0.0;
  for (Eigen::Index i = 0; i < z.size(); ++i) s += std::pow(std::abs(z(i)) / mx, q_);
  return mx * std::pow(s, 1.0 / q_);
}

Vector LqNorm::vec_dual(const Vector& z, double value) const {
  Vector w = Vector::Zero(z.size());
  if (value == 0.0) return w;
  if (q_ == 1.0) {
    for (Eigen::Index i = 0; i < z.size(); ++i) w(i) = (z(i) > 0) - (z(i) < 0);
  } else if (q_ == 2.0) {
    w = z / value;
  } else if (std::isinf(q_)) {
    Eigen::Index best = 0;
    for (Eigen::Index i = 1; i < z.size(); ++i)
      if (std::abs(z(i)) > std::abs(z(best))) best = i;
    w(best) = z(best) > 0 ? 1.0 : -1.0;
  } else {
    for (Eigen::Index i = 0; i < z.size(); ++i) {
      double a = std::abs(z(i)) / value;
      w(i) = (z(i) > 0 ? 1.0 : -1.0) * std::pow(a, q_ - 1.0);
    }
  }
  return w;
}

NormValue LqNorm::evaluate(const Vector& y) const {
  if (y.size() != L_.cols()) throw InputError("dimension mismatch");
  Vector z = L_ * y;
  NormValue nv;
  nv.value = vec_value(z);
  nv.dual = Lt_ * vec_dual(z, nv.value);
  return nv;
}

double LqNorm::value(const Vector& y) const {
  if (y.size() != L_.cols()) throw InputError("dimension mismatch");
  return vec_value(L_ * y);
}

void LqNorm::evaluate_columns(const Matrix& Y, Vector& values, Matrix* duals) const {
  Matrix Z = L_ * Y;
  values.resize(Y.cols());
  Matrix W;
  if (duals) W.resize(Z.rows(), Z.cols());
  for (Eigen::Index j = 0; j < Z.cols(); ++j) {
    Vector z = Z.col(j);
    values(j) = vec_value(z);
    if (duals) W.col(j) = vec_dual(z, values(j));
  }
  if (duals) *duals = Lt_ * W;
}

std::shared_ptr<const PolyNorm> LqNorm::polyhedral() const {
  const Eigen::Index p = L_.rows();
  if (q_ == 1.0) return make_poly(PolyNorm::Form::synthesis, Matrix::Identity(p, p), Matrix(p, 0), L_);
  if (std::isinf(q_)) return make_poly(PolyNorm::Form::analysis, Matrix::Identity(p, p), Matrix(p, 0), L_);
  return nullptr;
}

// -------------------------------------------------------------- PolyNorm

namespace {

// min 1^T lam s.t. Alp lam = a, lam >= 0, by dual simplex from `basis`. The
// costs do not depend on a, so a basis that was optimal for another right-hand
// side is still dual feasible. Returns false (and leaves the cold solver to
// decide) on a singular basis, primal infeasibility or too many pivots.
bool warm_dual_simplex(const Matrix& Alp, const Vector& a, std::vector<Eigen::Index>& basis, double& value,
                       Vector& y) {
  const Eigen::Index m = Alp.rows(), cols = Alp.cols();
  Matrix B(m, m), Binv;
  Eigen::PartialPivLU<Matrix> lu;
  auto factor = [&]() {
    for (Eigen::Index i = 0; i < m; ++i) B.col(i) = Alp.col(basis[static_cast<std::size_t>(i)]);
    lu.compute(B);
    return lu.rcond() > 1e-12;
  };
  // Accepts the current basis if it is primal feasible, using a fresh factorization.
  auto accept = [&]() {
    const Vector lam = lu.solve(a);
    const double scale = std::max(1.0, lam.cwiseAbs().maxCoeff());
    if (lam.minCoeff() < -1e-12 * scale) return false;
    y = lu.transpose().solve(Vector::Ones(m));
    if ((Alp.transpose() * y).maxCoeff() > 1.0 + 1e-9) return false;
    value = lam.cwiseMax(0.0).sum();
    return true;
  };
  if (!factor()) return false;
  if (accept()) return true;
  Binv = lu.inverse();
  for (int it = 1; it <= 4 * m; ++it) {
    const Vector lam = Binv * a;
    const double scale = std::max(1.0, lam.cwiseAbs().maxCoeff());
    Eigen::Index r = 0;
    const double worst = lam.minCoeff(&r);
    if (worst >= -1e-12 * scale) {
      if (!factor()) return false;
      if (accept()) return true;
      Binv = lu.inverse();
      continue;
    }
    y = Binv.transpose() * Vector::Ones(m);
    const Vector alpha = Alp.transpose() * Binv.row(r).transpose();
    const Vector d = Vector::Ones(cols) - Alp.transpose() * y;
    Eigen::Index enter = -1;
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < cols; ++j) {
      if (alpha(j) >= -1e-9) continue;
      const double ratio = std::max(d(j), 0.0) / -alpha(j);
      if (ratio < best) {
        best = ratio;
        enter = j;
      }
    }
    if (enter < 0) return false;
    basis[static_cast<std::size_t>(r)] = enter;
    // Product-form update of the inverse, refactorized every 16 pivots.
    if (it % 16 == 0) {
      if (!factor()) return false;
      Binv = lu.inverse();
      continue;
    }
    const Vector w = Binv * Alp.col(enter);
    Binv.row(r) /= w(r);
    for (Eigen::Index i = 0; i < m; ++i)
      if (i != r) Binv.row(i) -= w(i) * Binv.row(r);
  }
  return false;
}

}  // namespace

std::shared_ptr<const PolyNorm> make_poly(PolyNorm::Form form, Matrix A, Matrix G, Matrix R) {
  return std::make_shared<const PolyNorm>(form, std::move(A), std::move(G), std::move(R));
}

PolyNorm::Reduction PolyNorm::reduce(const Matrix& Gx) {
  const Eigen::Index p = Gx.rows(), k = Gx.cols();
  Reduction red;
  if (k == 0) {
    red.W = Matrix::Identity(p, p);
    red.pinv = Matrix(0, p);
    return red;
  }
  Eigen::JacobiSVD<Matrix> svd(Gx, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vector& sv = svd.singularValues();
  const double tol = 1e-12 * std::max(p, k) * (sv.size() ? sv(0) : 0.0);
  Eigen::Index rank = 0;
  while (rank < sv.size() && sv(rank) > tol) ++rank;
  red.W = svd.matrixU().rightCols(p - rank);
  red.pinv = svd.matrixV().leftCols(rank) * sv.head(rank).cwiseInverse().asDiagonal() *
             svd.matrixU().leftCols(rank).transpose();
  return red;
}

PolyNorm::PolyNorm(Form form, Matrix A, Matrix G, Matrix R)
    : form_(form), A_(std::move(A)), G_(std::move(G)), R_(std::move(R)) {
  closed_ = form_ == Form::analysis && G_.cols() == 0;
  if (closed_) W_ = R_.transpose() * A_;
  if (form_ == Form::synthesis) reduction_ = reduce(G_);
}

std::shared_ptr<const PolyNorm> PolyNorm::polyhedral() const { return shared_from_this(); }

NormValue PolyNorm::evaluate(const Vector& y) const {
  if (y.size() != R_.cols()) throw InputError("dimension mismatch");
  AffineMin am = minimize_affine(y, Matrix(y.size(), 0));
  return {am.value, std::move(am.dual)};
}

double PolyNorm::value(const Vector& y) const {
  if (y.size() != R_.cols()) throw InputError("dimension mismatch");
  if (closed_) return W_.size() ? (W_.transpose() * y).cwiseAbs().maxCoeff() : 0.0;
  return evaluate(y).value;
}

AffineMin PolyNorm::minimize_affine(const Vector& y0, const Matrix& M) const {
  AffineMin out;
  const Eigen::Index r = M.cols();
  const Vector a = R_ * y0;
  if (form_ == Form::synthesis) {
    if (a.cwiseAbs().maxCoeff() == 0.0 && r == 0) {
      out.value = 0.0;
      out.argmin = y0;
      out.dual = Vector::Zero(y0.size());
      return out;
    }
    Matrix Gx(A_.rows(), G_.cols() + r);
    Gx << G_, -(R_ * M);
    // The free term Gx xi absorbs any component in range(Gx); only the
    // orthogonal part constrains lambda. This keeps free columns out of the LP.
    const Reduction red = r == 0 ? reduction_ : reduce(Gx);
    const Eigen::Index N = A_.cols();
    Vector lambda = Vector::Zero(N);
    Vector yw;
    out.value = 0.0;
    if (red.W.cols() > 0) {
      const Matrix WA = red.W.transpose() * A_;
      Matrix Alp(WA.rows(), 2 * N);
      Alp << WA, -WA;
      LpResult lp = solve_lp(Alp, red.W.transpose() * a, Vector::Ones(2 * N));
      if (lp.status != LpStatus::optimal) {
        out.value = std::numeric_limits<double>::infinity();
        out.argmin = y0;
        out.dual = Vector::Zero(y0.size());
        return out;
      }
      out.value = lp.objective;
      lambda = lp.x.head(N) - lp.x.tail(N);
      yw = lp.dual;
    }
    const Vector xi = red.pinv * (a - A_ * lambda);
    out.argmin = y0 + M * xi.tail(r);
    out.dual = red.W.cols() > 0 ? Vector(R_.transpose() * (red.W * yw)) : Vector(Vector::Zero(y0.size()));
    return out;
  }
  Matrix Gx(R_.rows(), G_.cols() + r);
  Gx << G_, R_ * M;
  const Vector v = A_.transpose() * a;
  if (Gx.cols() == 0) {
    Eigen::Index best = 0;
    double val = 0.0;
    for (Eigen::Index i = 0; i < v.size(); ++i)
      if (std::abs(v(i)) > val) {
        val = std::abs(v(i));
        best = i;
      }
    out.value = val;
    out.argmin = y0;
    out.dual = val > 0 ? Vector((v(best) > 0 ? 1.0 : -1.0) * (R_.transpose() * A_.col(best)))
                       : Vector(Vector::Zero(y0.size()));
    return out;
  }
  const Eigen::Index P = A_.cols(), k = Gx.cols();
  Matrix H = Gx.transpose() * A_;
  Matrix Alp = Matrix::Zero(k + 1, 2 * P + 1);
  Alp.block(0, 0, k, P) = H;
  Alp.block(0, P, k, P) = -H;
  Alp.row(k).setOnes();
  Vector b = Vector::Zero(k + 1);
  b(k) = 1.0;
  Vector c = Vector::Zero(2 * P + 1);
  c.head(P) = -v;
  c.segment(P, P) = v;
  LpResult lp = solve_lp(Alp, b, c);
  if (lp.status != LpStatus::optimal) {
    out.value = std::numeric_limits<double>::infinity();
    out.argmin = y0;
    out.dual = Vector::Zero(y0.size());
    return out;
  }
  out.value = std::max(0.0, -lp.objective);
  Vector lambda = lp.x.head(P) - lp.x.segment(P, P);
  out.dual = R_.transpose() * (A_ * lambda);
  Vector xi = lp.dual.head(k);
  out.argmin = y0 + M * xi.tail(r);
  return out;
}

void PolyNorm::evaluate_columns_warm(const Matrix& Y, Vector& values, Matrix* duals, BasisCache& cache) const {
  if (form_ != Form::synthesis || G_.cols() != 0) {
    evaluate_columns(Y, values, duals);
    return;
  }
  const Eigen::Index N = A_.cols(), m = A_.rows();
  values.resize(Y.cols());
  if (duals) duals->resize(R_.cols(), Y.cols());
  if (cache.bases.size() != static_cast<std::size_t>(Y.cols())) cache.bases.assign(Y.cols(), {});
  Matrix Alp(m, 2 * N);
  Alp << A_, -A_;
  const Vector ones = Vector::Ones(2 * N);
  const Eigen::Index chunk = 32;
  const std::size_t chunks = static_cast<std::size_t>((Y.cols() + chunk - 1) / chunk);
  parallel_for(chunks, [&](std::size_t c) {
    const Eigen::Index lo = static_cast<Eigen::Index>(c) * chunk, hi = std::min(Y.cols(), lo + chunk);
    for (Eigen::Index j = lo; j < hi; ++j) {
      const Vector a = R_ * Y.col(j);
      std::vector<Eigen::Index>& basis = cache.bases[static_cast<std::size_t>(j)];
      Vector y;
      double value = 0.0;
      bool done = false;
      if (a.cwiseAbs().maxCoeff() == 0.0) {
        y = Vector::Zero(m);
        done = true;
      } else if (static_cast<Eigen::Index>(basis.size()) == m) {
        done = warm_dual_simplex(Alp, a, basis, value, y);
      }
      if (!done) {
        LpResult lp = solve_lp(Alp, a, ones);
        basis.clear();
        if (lp.status != LpStatus::optimal) {
          value = std::numeric_limits<double>::infinity();
          y = Vector::Zero(m);
        } else {
          value = lp.objective;
          y = lp.dual;
          if (std::all_of(lp.basis.begin(), lp.basis.end(), [&](Eigen::Index b) { return b < 2 * N; })) basis = lp.basis;
        }
      }
      values(j) = value;
      if (duals) duals->col(j) = R_.transpose() * y;
    }
  });
}

std::shared_ptr<const PolyNorm> PolyNorm::precompose(const Matrix& T) const {
  return make_poly(form_, A_, G_, R_ * T);
}

std::shared_ptr<const PolyNorm> PolyNorm::fiber_min(const Matrix& B, const Matrix& M) const {
  Matrix Gx(R_.rows(), G_.cols() + M.cols());
  if (form_ == Form::synthesis)
    Gx << G_, -(R_ * M);
  else
    Gx << G_, R_ * M;
  return make_poly(form_, A_, Gx, R_ * B);
}

// ------------------------------------------------------- PrecomposedNorm

PrecomposedNorm::PrecomposedNorm(NormPtr base, Matrix T) : base_(std::move(base)), T_(std::move(T)) {}

NormValue PrecomposedNorm::evaluate(const Vector& y) const {
  if (y.size() != T_.cols()) throw InputError("dimension mismatch");
  NormValue nv = base_->evaluate(T_ * y);
  nv.dual = T_.transpose() * nv.dual;
  return nv;
}

double PrecomposedNorm::value(const Vector& y) const {
  if (y.size() != T_.cols()) throw InputError("dimension mismatch");
  return base_->value(T_ * y);
}

void PrecomposedNorm::evaluate_columns(const Matrix& Y, Vector& values, Matrix* duals) const {
  base_->evaluate_columns(T_ * Y, values, duals);
  if (duals) *duals = T_.transpose() * (*duals);
}

void PrecomposedNorm::evaluate_columns_warm(const Matrix& Y, Vector& values, Matrix* duals, BasisCache& cache) const {
  base_->evaluate_columns_warm(T_ * Y, values, duals, cache);
  if (duals) *duals = T_.transpose() * (*duals);
}

// ---------------------------------------------------------- FiberMinNorm

FiberMinNorm::FiberMinNorm(NormPtr base, Matrix B, Matrix M)
    : base_(std::move(base)), B_(std::move(B)), M_(std::move(M)) {}

NormValue FiberMinNorm::evaluate(const Vector& c) const {
  if (c.size() != B_.cols()) throw InputError("dimension mismatch");
  AffineMin am = min_norm_affine(*base_, B_ * c, M_);
  return {am.value, B_.transpose() * am.dual};
}

// -------------------------------------------------------------- builders

NormPtr precompose(const NormPtr& base, const Matrix& T) {
  if (auto lq = std::dynamic_pointer_cast<const LqNorm>(base)) return std::make_shared<LqNorm>(lq->map() * T, lq->q());
  if (auto poly = std::dynamic_pointer_cast<const PolyNorm>(base)) return poly->precompose(T);
  if (auto pre = std::dynamic_pointer_cast<const PrecomposedNorm>(base))
    return std::make_shared<PrecomposedNorm>(pre->base(), pre->map() * T);
  return std::make_shared<PrecomposedNorm>(base, T);
}

NormPtr fiber_min(const NormPtr& base, const Matrix& B, const Matrix& M) {
  if (M.cols() == 0) return precompose(base, B);
  if (const Matrix* L = base->ellipse_map()) {
    Matrix LB = (*L) * B, LM = (*L) * M;
    Eigen::ColPivHouseholderQR<Matrix> qr(LM);
    const Eigen::Index rank = qr.rank();
    Matrix Q = (qr.householderQ() * Matrix::Identity(LM.rows(), LM.rows())).leftCols(rank);
    return std::make_shared<LqNorm>(LB - Q * (Q.transpose() * LB), 2.0);
  }
  if (auto poly = base->polyhedral()) return poly->fiber_min(B, M);
  return std::make_shared<FiberMinNorm>(base, B, M);
}

AffineMin min_norm_affine(const Norm& N, const Vector& y0, const Matrix& M) {
  AffineMin out;
  if (M.cols() == 0) {
    NormValue nv = N.evaluate(y0);
    out.value = nv.value;
    out.argmin = y0;
    out.dual = std::move(nv.dual);
    return out;
  }
  if (const Matrix* L = N.ellipse_map()) {
    Matrix LM = (*L) * M;
    Vector t = -LM.colPivHouseholderQr().solve((*L) * y0);
    out.argmin = y0 + M * t;
    Vector r = (*L) * out.argmin;
    out.value = r.norm();
    out.dual = out.value > 0 ? Vector(L->transpose() * (r / out.value)) : Vector(Vector::Zero(y0.size()));
    return out;
  }
  if (auto poly = N.polyhedral()) return poly->minimize_affine(y0, M);
  Objective fg = [&](const Vector& t, Vector& g) {
    NormValue nv = N.evaluate(y0 + M * t);
    g = M.transpose() * nv.dual;
    return nv.value;
  };
  LbfgsResult res = minimize_lbfgs(fg, Vector::Zero(M.cols()), 1000, 1e-11);
  out.argmin = y0 + M * res.x;
  NormValue nv = N.evaluate(out.argmin);
  out.value = nv.value;
  out.dual = std::move(nv.dual);
  return out;
}

}  // namespace npp
