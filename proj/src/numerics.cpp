#include "symmor/numerics.hpp"

#include <cmath>
#include <cstdio>
#include <random>
#include <string>

namespace symmor {

ThinSvd svd_thin(const Matrix& a, Index k) {
  if (k < 0 || k > std::min(a.rows(), a.cols())) {
    throw DimensionError("svd_thin: k=" + std::to_string(k) + " exceeds min(rows, cols)");
  }
  if (!all_finite(a)) throw NumericalError("svd_thin: non-finite entries");
  Eigen::BDCSVD<Matrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (svd.info() != Eigen::Success) {
    throw ConvergenceError("svd_thin: bidiagonal divide-and-conquer did not converge");
  }
  ThinSvd out;
  out.U = svd.matrixU().leftCols(k);
  out.singular_values = svd.singularValues().head(k);
  out.V = svd.matrixV().leftCols(k);
  return out;
}

DenseLu::DenseLu(const Matrix& a) {
  if (a.rows() != a.cols()) throw DimensionError("DenseLu: matrix is not square");
  if (a.size() == 0) throw DimensionError("DenseLu: empty matrix");
  lu_.compute(a);
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  const auto& packed = lu_.matrixLU();
  for (Index i = 0; i < packed.rows(); ++i) {
    const double pivot = std::abs(packed(i, i));
    if (!(pivot >= kPivotTolerance * scale)) {
      throw SingularMatrixError("DenseLu: pivot " + format_real(packed(i, i)) + " at row " +
                                std::to_string(i) + " below tolerance");
    }
  }
}

Vector DenseLu::solve(const Vector& b) const {
  if (b.size() != lu_.rows()) throw DimensionError("DenseLu::solve: rhs length mismatch");
  return lu_.solve(b);
}

Matrix DenseLu::solve(const Matrix& b) const {
  if (b.rows() != lu_.rows()) throw DimensionError("DenseLu::solve: rhs row mismatch");
  return lu_.solve(b);
}

Vector solve_dense(const Matrix& a, const Vector& b) { return DenseLu(a).solve(b); }

LinearOperator as_operator(const Matrix& a) {
  return LinearOperator{a.rows(), a.cols(), [a](const Vector& x) -> Vector { return a * x; },
                        [a](const Vector& y) -> Vector { return a.transpose() * y; }};
}

double spectral_norm(const LinearOperator& op, const PowerIterationOptions& opts) {
  if (op.cols == 0 || op.rows == 0) throw DimensionError("spectral_norm: empty operator");
  std::mt19937_64 rng(opts.seed);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  Vector v(op.cols);
  for (Index i = 0; i < v.size(); ++i) v(i) = unif(rng);
  v.normalize();

  for (int it = 0; it < opts.max_iter; ++it) {
    const Vector av = op.apply(v);
    const Vector bv = op.apply_transpose(av);
    const double rho = v.dot(bv);
    if (rho <= 0.0) {
      if (bv.norm() == 0.0) throw NumericalError("spectral_norm: operator vanishes on iterate");
    }
    const double residual = (bv - rho * v).norm();
    if (residual <= opts.tol * rho) return std::sqrt(rho);
    const double nb = bv.norm();
    if (nb == 0.0) throw NumericalError("spectral_norm: operator vanishes on iterate");
    v = bv / nb;
  }
  throw ConvergenceError("spectral_norm: power iteration cap of " + std::to_string(opts.max_iter) +
                         " reached");
}

double spectral_norm(const Matrix& a, double tol) {
  if (a.size() == 0 || a.cwiseAbs().maxCoeff() == 0.0) {
    throw DimensionError("spectral_norm: matrix must be nonzero");
  }
  PowerIterationOptions opts;
  opts.tol = tol;
  return spectral_norm(as_operator(a), opts);
}

std::string format_real(double value) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

bool all_finite(const Matrix& m) { return m.allFinite(); }

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t derive_seed(std::uint64_t root, const std::string& label) {
  std::uint64_t z = (root ^ fnv1a64(label)) + 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace symmor
