#pragma once

// Dense linear algebra shared by every module. Matrices and vectors are plain
// Eigen types in double precision; this header adds the handful of kernels
// with project-specific contracts (pivot tolerance, sweep limits, power
// iteration for operator norms).

#include <cstdint>
#include <functional>
#include <string>

#include <Eigen/Dense>

#include "symmor/errors.hpp"

namespace symmor {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

struct ThinSvd {
  Matrix U;  // rows x k, orthonormal columns
  Vector singular_values;  // k values, nonincreasing
  Matrix V;  // cols x k
};

// Leading k singular triplets of a.
ThinSvd svd_thin(const Matrix& a, Index k);

// LU factorization with partial pivoting. A pivot whose magnitude falls below
// kPivotTolerance relative to the largest entry of the input raises
// SingularMatrixError. Reusable for many right-hand sides.
class DenseLu {
 public:
  static constexpr double kPivotTolerance = 1e-14;

  explicit DenseLu(const Matrix& a);

  Vector solve(const Vector& b) const;
  Matrix solve(const Matrix& b) const;
  Index size() const { return lu_.rows(); }

 private:
  Eigen::PartialPivLU<Matrix> lu_;
};

Vector solve_dense(const Matrix& a, const Vector& b);

// Matrix-free linear map together with its transpose.
struct LinearOperator {
  Index rows = 0;
  Index cols = 0;
  std::function<Vector(const Vector&)> apply;
  std::function<Vector(const Vector&)> apply_transpose;
};

LinearOperator as_operator(const Matrix& a);

struct PowerIterationOptions {
  double tol = 1e-10;
  int max_iter = 500000;
  std::uint64_t seed = 0x5eed5eedULL;
};

// ||A||_2 by power iteration on A^T A. Stops once the eigen-residual
// ||A^T A v - rho v|| drops below tol * rho; throws ConvergenceError when the
// iteration cap is reached first.
double spectral_norm(const LinearOperator& op, const PowerIterationOptions& opts = {});
double spectral_norm(const Matrix& a, double tol = 1e-10);

// Formats a double with 17 significant digits (round-trip exact).
std::string format_real(double value);

bool all_finite(const Matrix& m);

// Per-component seed: splitmix64(root ^ fnv1a64(label)). Components with
// distinct labels draw independent streams from one root seed.
std::uint64_t derive_seed(std::uint64_t root, const std::string& label);
std::uint64_t fnv1a64(const std::string& bytes);

}  // namespace symmor
