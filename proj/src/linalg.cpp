#include "npp/linalg.hpp"

#include <algorithm>
#include <cmath>

namespace npp {

Matrix orthonormalize(const Matrix& A, double tol) {
  if (A.cols() == 0) throw InputError("empty basis");
  if (A.cols() > A.rows()) throw InputError("more basis vectors than ambient dimension");
  Eigen::HouseholderQR<Matrix> qr(A);
  Matrix R = qr.matrixQR().topRows(A.cols()).triangularView<Eigen::Upper>();
  Matrix Q = qr.householderQ() * Matrix::Identity(A.rows(), A.cols());
  double scale = std::max(1.0, A.cwiseAbs().maxCoeff());
  for (Eigen::Index i = 0; i < A.cols(); ++i) {
    if (std::abs(R(i, i)) < tol * scale) throw InputError("basis is rank deficient");
    if (R(i, i) < 0) Q.col(i) = -Q.col(i);
  }
  return Q;
}

Matrix orthogonal_complement(const Matrix& Q) {
  const Eigen::Index n = Q.rows(), m = Q.cols();
  if (m == 0) return Matrix::Identity(n, n);
  if (m == n) return Matrix(n, 0);
  Eigen::HouseholderQR<Matrix> qr(Q);
  Matrix full = qr.householderQ() * Matrix::Identity(n, n);
  return full.rightCols(n - m);
}

int numerical_rank(const Matrix& A, double tol) {
  if (A.size() == 0) return 0;
  Eigen::JacobiSVD<Matrix> svd(A);
  const Vector& s = svd.singularValues();
  int r = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s(i) > tol) ++r;
  return r;
}

double sigma_min(const Matrix& A) {
  if (A.size() == 0) return 0.0;
  Eigen::JacobiSVD<Matrix> svd(A);
  const Vector& s = svd.singularValues();
  if (A.cols() > A.rows()) return 0.0;
  return s(s.size() - 1);
}

double sigma_max(const Matrix& A) {
  if (A.size() == 0) return 0.0;
  Eigen::JacobiSVD<Matrix> svd(A);
  return svd.singularValues()(0);
}

Matrix sym_expm(const Matrix& S) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (S + S.transpose()));
  Vector e = es.eigenvalues().array().exp().matrix();
  return es.eigenvectors() * e.asDiagonal() * es.eigenvectors().transpose();
}

bool is_column_orthonormal(const Matrix& B, double tol) {
  Matrix G = B.transpose() * B;
  return (G - Matrix::Identity(G.rows(), G.cols())).cwiseAbs().maxCoeff() <= tol;
}

}  // namespace npp
