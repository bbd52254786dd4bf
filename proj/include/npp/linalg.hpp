#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace npp {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Raised for malformed user input (bad dimensions, unparsable specs, ...).
class InputError : public std::runtime_error {
 public:
  explicit InputError(const std::string& what) : std::runtime_error(what) {}
};

// Orthonormal basis of the column span of A; throws InputError when A is rank deficient.
Matrix orthonormalize(const Matrix& A, double tol = 1e-10);

// Orthonormal basis of the orthogonal complement of the (orthonormal) columns of Q.
Matrix orthogonal_complement(const Matrix& Q);

int numerical_rank(const Matrix& A, double tol);
double sigma_min(const Matrix& A);
double sigma_max(const Matrix& A);

// exp(S) for symmetric S.
Matrix sym_expm(const Matrix& S);

bool is_column_orthonormal(const Matrix& B, double tol);

}  // namespace npp
