#include "symmor/symplectic.hpp"

#include <string>

namespace symmor {
namespace {

void require_even(Index n, const char* what) {
  if (n % 2 != 0) throw DimensionError(std::string(what) + ": dimension must be even");
}

}  // namespace

Vector poisson_apply(Index half_dim, const Vector& v) {
  if (v.size() != 2 * half_dim) {
    throw DimensionError("poisson_apply: expected length " + std::to_string(2 * half_dim) +
                         ", got " + std::to_string(v.size()));
  }
  Vector out(v.size());
  out.head(half_dim) = v.tail(half_dim);
  out.tail(half_dim) = -v.head(half_dim);
  return out;
}

Vector poisson_transpose_apply(Index half_dim, const Vector& v) {
  Vector out = poisson_apply(half_dim, v);
  out = -out;
  return out;
}

Matrix poisson_apply(Index half_dim, const Matrix& m) {
  if (m.rows() != 2 * half_dim) throw DimensionError("poisson_apply: row count mismatch");
  Matrix out(m.rows(), m.cols());
  out.topRows(half_dim) = m.bottomRows(half_dim);
  out.bottomRows(half_dim) = -m.topRows(half_dim);
  return out;
}

Matrix poisson_matrix(Index half_dim) {
  Matrix j = Matrix::Zero(2 * half_dim, 2 * half_dim);
  j.topRightCorner(half_dim, half_dim).setIdentity();
  j.bottomLeftCorner(half_dim, half_dim) = -Matrix::Identity(half_dim, half_dim);
  return j;
}

Vector symplectic_inverse_apply(const Matrix& a, const Vector& y) {
  require_even(a.rows(), "symplectic_inverse_apply");
  require_even(a.cols(), "symplectic_inverse_apply");
  if (y.size() != a.rows()) throw DimensionError("symplectic_inverse_apply: length mismatch");
  const Vector jy = poisson_apply(a.rows() / 2, y);
  const Vector atjy = a.transpose() * jy;
  return poisson_transpose_apply(a.cols() / 2, atjy);
}

Matrix symplecticity_residual(const Matrix& a) {
  require_even(a.rows(), "symplecticity_residual");
  require_even(a.cols(), "symplecticity_residual");
  const Index n = a.cols() / 2;
  Matrix r = a.transpose() * poisson_apply(a.rows() / 2, a);
  r.topRightCorner(n, n).diagonal().array() -= 1.0;
  r.bottomLeftCorner(n, n).diagonal().array() += 1.0;
  return r;
}

double symplecticity_defect(const Matrix& a) {
  const double two_n = static_cast<double>(a.cols());
  return symplecticity_residual(a).squaredNorm() / (two_n * two_n);
}

bool is_symplectic(const Matrix& a, double tol) {
  return symplecticity_residual(a).norm() <= tol;
}

}  // namespace symmor
