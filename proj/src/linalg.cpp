#include "detavg/linalg.hpp"

#include <cmath>
#include <utility>

#include "detavg/errors.hpp"

namespace detavg {

SymMatrix::SymMatrix(Matrix m) : m_(std::move(m)) {
  if (m_.rows() != m_.cols()) {
    throw DimensionMismatch("symmetric matrix must be square");
  }
  Matrix full = m_.selfadjointView<Eigen::Lower>();
  m_ = std::move(full);
}

Vector CholFactor::solve(const Vector& v) const {
  if (v.size() != dim()) throw DimensionMismatch("right-hand side has wrong length");
  Vector x = l_.triangularView<Eigen::Lower>().solve(v);
  l_.triangularView<Eigen::Lower>().transpose().solveInPlace(x);
  return x;
}

Matrix CholFactor::solve(const Matrix& rhs) const {
  if (rhs.rows() != dim()) throw DimensionMismatch("right-hand side has wrong row count");
  Matrix x = l_.triangularView<Eigen::Lower>().solve(rhs);
  l_.triangularView<Eigen::Lower>().transpose().solveInPlace(x);
  return x;
}

double CholFactor::log_det() const { return 2.0 * l_.diagonal().array().log().sum(); }

CholFactor cholesky(const SymMatrix& m) {
  Eigen::LLT<Matrix> llt(m.matrix());
  if (llt.info() != Eigen::Success) throw NotPositiveDefinite();
  Matrix lower = llt.matrixL();
  for (Eigen::Index i = 0; i < lower.rows(); ++i) {
    if (!(lower(i, i) > 0.0) || !std::isfinite(lower(i, i))) throw NotPositiveDefinite();
  }
  return CholFactor(std::move(lower));
}

double log_det_psd(const SymMatrix& m) { return cholesky(m).log_det(); }

Vector solve_psd(const SymMatrix& m, const Vector& v) { return cholesky(m).solve(v); }

double mahalanobis_norm(const Vector& v, const SymMatrix& m) {
  if (v.size() != m.dim()) throw DimensionMismatch("vector and matrix dimensions differ");
  const double q = v.dot(m.matrix() * v);
  if (q < -1e-12) throw NegativeQuadraticForm(q);
  return std::sqrt(std::max(q, 0.0));
}

namespace {

Matrix minor_of(const Matrix& m, Eigen::Index row, Eigen::Index col) {
  const Eigen::Index d = m.rows();
  Matrix out(d - 1, d - 1);
  for (Eigen::Index i = 0, r = 0; i < d; ++i) {
    if (i == row) continue;
    for (Eigen::Index j = 0, c = 0; j < d; ++j) {
      if (j == col) continue;
      out(r, c++) = m(i, j);
    }
    ++r;
  }
  return out;
}

}  // namespace

double cofactor_determinant(const Matrix& m) {
  if (m.rows() != m.cols()) throw DimensionMismatch("determinant of non-square matrix");
  const Eigen::Index d = m.rows();
  switch (d) {
    case 0:
      return 1.0;
    case 1:
      return m(0, 0);
    case 2:
      return m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
    case 3:
      return m(0, 0) * (m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1)) -
             m(0, 1) * (m(1, 0) * m(2, 2) - m(1, 2) * m(2, 0)) +
             m(0, 2) * (m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0));
    default:
      break;
  }
  // expand along the first row
  double det = 0.0;
  for (Eigen::Index j = 0; j < d; ++j) {
    if (m(0, j) == 0.0) continue;
    const double sign = (j % 2 == 0) ? 1.0 : -1.0;
    det += sign * m(0, j) * cofactor_determinant(minor_of(m, 0, j));
  }
  return det;
}

Matrix cofactor_adjugate(const Matrix& m) {
  if (m.rows() != m.cols()) throw DimensionMismatch("adjugate of non-square matrix");
  const Eigen::Index d = m.rows();
  Matrix adj(d, d);
  if (d == 1) {
    adj(0, 0) = 1.0;
    return adj;
  }
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) {
      const double sign = ((i + j) % 2 == 0) ? 1.0 : -1.0;
      adj(i, j) = sign * cofactor_determinant(minor_of(m, j, i));
    }
  }
  return adj;
}

SymMatrix adjugate_via_inverse(const SymMatrix& m) {
  const CholFactor chol = cholesky(m);
  const Eigen::Index d = m.dim();
  return SymMatrix(std::exp(chol.log_det()) * chol.solve(Matrix(Matrix::Identity(d, d))));
}

SymMatrix adjugate(const SymMatrix& m) {
  if (m.dim() <= kCofactorMaxDim) return SymMatrix(cofactor_adjugate(m.matrix()));
  return adjugate_via_inverse(m);
}

}  // namespace detavg
