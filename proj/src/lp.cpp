#include "npp/lp.hpp"

#include <cmath>
#include <limits>
#include <vector>

namespace npp {
namespace {

using Tableau = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

constexpr double kPivotTol = 1e-11;

class Simplex {
 public:
  Simplex(const Matrix& A, const Vector& b)
      : m_(A.rows()), n_(A.cols()), t_(Tableau::Zero(A.rows() + 1, A.cols() + A.rows() + 1)),
        basis_(A.rows()), sign_(A.rows()) {
    for (Eigen::Index i = 0; i < m_; ++i) {
      sign_[i] = b(i) < 0 ? -1.0 : 1.0;
      t_.row(i).head(n_) = sign_[i] * A.row(i);
      t_(i, n_ + i) = 1.0;
      t_(i, rhs()) = sign_[i] * b(i);
      basis_[i] = n_ + i;
    }
    b0_ = t_.col(rhs()).head(m_);
    bscale_ = std::max(1.0, b.cwiseAbs().maxCoeff());
  }

  Eigen::Index rhs() const { return n_ + m_; }

  void set_costs(const Vector& full_cost) {
    // Objective row holds reduced costs c_j - c_B^T B^{-1} A_j and -c_B^T x_B.
    cost_ = full_cost;
    t_.row(m_).setZero();
    t_.row(m_).head(n_ + m_) = full_cost.transpose();
    for (Eigen::Index i = 0; i < m_; ++i) {
      double cb = full_cost(basis_[i]);
      if (cb != 0.0) t_.row(m_) -= cb * t_.row(i);
    }
  }

  LpStatus run(Eigen::Index allowed_columns, long max_iter) {
    long stalled = 0;
    bool bland = false;
    for (long it = 0; it < max_iter; ++it) {
      // A long run of degenerate pivots is broken by perturbing the right-hand
      // side once; Bland's rule is the fallback if that does not help.
      if (stalled > 50 && !perturbed_) {
        perturb();
        stalled = 0;
      } else if (stalled > 50) {
        bland = true;
      }
      Eigen::Index enter = -1;
      double best = -opt_tol_;
      for (Eigen::Index j = 0; j < allowed_columns; ++j) {
        double r = t_(m_, j);
        if (r < best) {
          enter = j;
          if (bland) break;
          best = r;
        }
      }
      if (enter < 0) {
        if (perturbed_ && !restore(allowed_columns, max_iter)) return LpStatus::iteration_limit;
        return LpStatus::optimal;
      }
      Eigen::Index leave = -1;
      double ratio = std::numeric_limits<double>::infinity();
      for (Eigen::Index i = 0; i < m_; ++i) {
        double a = t_(i, enter);
        if (a > kPivotTol) {
          double q = std::max(0.0, t_(i, rhs())) / a;
          if (q < ratio - 1e-14 || (q <= ratio + 1e-14 && leave >= 0 && basis_[i] < basis_[leave])) {
            if (q < ratio) ratio = q;
            leave = i;
          }
        }
      }
      if (leave < 0) return LpStatus::unbounded;
      stalled = ratio <= 1e-12 * bscale_ ? stalled + 1 : 0;
      pivot(leave, enter);
    }
    return LpStatus::iteration_limit;
  }

  // Shifts the basic values by small distinct amounts.
  void perturb() {
    const double eps = 1e-9 * bscale_;
    for (Eigen::Index i = 0; i < m_; ++i) {
      double frac = std::fmod(0.6180339887498949 * static_cast<double>(i + 1), 1.0);
      t_(i, rhs()) += eps * (1.0 + frac);
    }
    refresh_objective();
    perturbed_ = true;
  }

  // Recomputes the basic values for the true right-hand side, then repairs
  // any infeasibility with dual simplex pivots (reduced costs stay optimal).
  bool restore(Eigen::Index allowed_columns, long max_iter) {
    perturbed_ = false;
    t_.col(rhs()).head(m_) = t_.block(0, n_, m_, m_) * b0_;
    refresh_objective();
    const double tol = 1e-11 * bscale_;
    for (long it = 0; it < max_iter; ++it) {
      Eigen::Index r = -1;
      double worst = -tol;
      for (Eigen::Index i = 0; i < m_; ++i)
        if (t_(i, rhs()) < worst) {
          worst = t_(i, rhs());
          r = i;
        }
      if (r < 0) return true;
      Eigen::Index enter = -1;
      double ratio = std::numeric_limits<double>::infinity();
      for (Eigen::Index j = 0; j < allowed_columns; ++j) {
        double a = t_(r, j);
        if (a < -kPivotTol) {
          double q = std::max(0.0, t_(m_, j)) / -a;
          if (q < ratio) {
            ratio = q;
            enter = j;
          }
        }
      }
      // No repair column: the row is infeasible only up to rounding.
      if (enter < 0) {
        t_(r, rhs()) = 0.0;
        continue;
      }
      pivot(r, enter);
    }
    return false;
  }

  void refresh_objective() {
    double v = 0.0;
    for (Eigen::Index i = 0; i < m_; ++i) v += cost_(basis_[i]) * t_(i, rhs());
    t_(m_, rhs()) = -v;
  }

  void pivot(Eigen::Index r, Eigen::Index c) {
    t_.row(r) /= t_(r, c);
    t_(r, c) = 1.0;
    for (Eigen::Index i = 0; i <= m_; ++i) {
      if (i == r) continue;
      double f = t_(i, c);
      if (f != 0.0) {
        t_.row(i) -= f * t_.row(r);
        t_(i, c) = 0.0;
      }
    }
    basis_[r] = c;
  }

  // Pivots remaining artificial variables out of the basis where possible.
  void expel_artificials() {
    for (Eigen::Index i = 0; i < m_; ++i) {
      if (basis_[i] < n_) continue;
      Eigen::Index best = -1;
      double mag = 1e-9;
      for (Eigen::Index j = 0; j < n_; ++j) {
        if (std::abs(t_(i, j)) > mag) {
          mag = std::abs(t_(i, j));
          best = j;
        }
      }
      if (best >= 0) pivot(i, best);
    }
  }

  double objective() const { return -t_(m_, rhs()); }

  Vector primal() const {
    Vector x = Vector::Zero(n_);
    for (Eigen::Index i = 0; i < m_; ++i)
      if (basis_[i] < n_) x(basis_[i]) = std::max(0.0, t_(i, rhs()));
    return x;
  }

  Vector dual() const {
    Vector y = Vector::Zero(m_);
    for (Eigen::Index k = 0; k < m_; ++k) {
      double s = 0.0;
      for (Eigen::Index i = 0; i < m_; ++i) s += cost_(basis_[i]) * t_(i, n_ + k);
      y(k) = s * sign_[k];
    }
    return y;
  }

  void set_opt_tol(double tol) { opt_tol_ = tol; }
  const std::vector<Eigen::Index>& basis() const { return basis_; }

 private:
  Eigen::Index m_, n_;
  Tableau t_;
  std::vector<Eigen::Index> basis_;
  std::vector<double> sign_;
  Vector cost_;
  Vector b0_;
  double bscale_ = 1.0;
  bool perturbed_ = false;
  double opt_tol_ = 1e-11;
};

}  // namespace

LpResult solve_lp(const Matrix& A, const Vector& b, const Vector& c) {
  const Eigen::Index m = A.rows(), n = A.cols();
  LpResult result;
  Simplex sx(A, b);
  const long max_iter = 50 * (m + n) + 1000;

  Vector phase1 = Vector::Zero(n + m);
  phase1.tail(m).setOnes();
  sx.set_costs(phase1);
  sx.set_opt_tol(1e-12);
  LpStatus st = sx.run(n, max_iter);
  if (st == LpStatus::iteration_limit) {
    result.status = st;
    return result;
  }
  const double bscale = std::max(1.0, b.cwiseAbs().maxCoeff());
  if (sx.objective() > 1e-9 * bscale) {
    result.status = LpStatus::infeasible;
    return result;
  }
  sx.expel_artificials();

  Vector phase2 = Vector::Zero(n + m);
  phase2.head(n) = c;
  sx.set_costs(phase2);
  sx.set_opt_tol(1e-11 * std::max(1.0, c.cwiseAbs().maxCoeff()));
  st = sx.run(n, max_iter);
  result.status = st;
  if (st != LpStatus::optimal) return result;
  result.x = sx.primal();
  result.dual = sx.dual();
  result.objective = c.dot(result.x);
  result.basis = sx.basis();
  return result;
}

}  // namespace npp
