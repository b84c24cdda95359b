#pragma once

#include <Eigen/Dense>

namespace detavg {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Dense symmetric matrix. Symmetry is enforced on construction by mirroring
// the lower triangle, so downstream code never sees |M_ij - M_ji| > 0.
class SymMatrix {
 public:
  SymMatrix() = default;
  explicit SymMatrix(Matrix m);

  static SymMatrix Identity(Eigen::Index d) { return SymMatrix(Matrix::Identity(d, d)); }
  static SymMatrix Zero(Eigen::Index d) { return SymMatrix(Matrix::Zero(d, d)); }

  Eigen::Index dim() const { return m_.rows(); }
  double operator()(Eigen::Index i, Eigen::Index j) const { return m_(i, j); }
  const Matrix& matrix() const { return m_; }

 private:
  Matrix m_;
};

// Lower-triangular Cholesky factor L with L * L^T equal to the source matrix.
class CholFactor {
 public:
  explicit CholFactor(Matrix lower) : l_(std::move(lower)) {}

  Eigen::Index dim() const { return l_.rows(); }
  const Matrix& lower() const { return l_; }

  Vector solve(const Vector& v) const;
  Matrix solve(const Matrix& rhs) const;
  double log_det() const;

 private:
  Matrix l_;
};

// Throws NotPositiveDefinite when a pivot is not strictly positive.
CholFactor cholesky(const SymMatrix& m);

double log_det_psd(const SymMatrix& m);

Vector solve_psd(const SymMatrix& m, const Vector& v);

// Square-root of v^T M v. Tiny negative values from rounding are clamped to
// zero; anything below -1e-12 means M is indefinite.
double mahalanobis_norm(const Vector& v, const SymMatrix& m);

// Largest dimension handled by exact cofactor expansion in adjugate().
inline constexpr Eigen::Index kCofactorMaxDim = 5;

// Determinant by Laplace expansion. Exact for singular input; cost grows
// factorially so keep d small.
double cofactor_determinant(const Matrix& m);

// Classical adjugate, entry (i,j) = (-1)^(i+j) det(M without row j, column i).
Matrix cofactor_adjugate(const Matrix& m);

// adj(M) for symmetric M. Cofactor expansion for d <= kCofactorMaxDim (any M,
// including singular ones); det(M) * M^-1 via Cholesky above that, which
// requires M positive definite.
SymMatrix adjugate(const SymMatrix& m);

// det(M) * M^-1 via Cholesky, regardless of size.
SymMatrix adjugate_via_inverse(const SymMatrix& m);

}  // namespace detavg
