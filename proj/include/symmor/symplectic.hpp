#pragma once

// Canonical Poisson matrix J_2n = [[0, I], [-I, 0]] applied structurally
// (index shuffle plus sign flip), symplectic inverse and symplecticity checks.

#include "symmor/numerics.hpp"

namespace symmor {

// J_2n v = [v_{n+1..2n}; -v_{1..n}].
Vector poisson_apply(Index half_dim, const Vector& v);
// J_2n^T v = -J_2n v.
Vector poisson_transpose_apply(Index half_dim, const Vector& v);
// Column-wise J_2n M.
Matrix poisson_apply(Index half_dim, const Matrix& m);

// Dense J_2n. Only test oracles and small diagnostics should need this.
Matrix poisson_matrix(Index half_dim);

// A^+ y = J_2n^T A^T J_2N y for A of size 2N x 2n.
Vector symplectic_inverse_apply(const Matrix& a, const Vector& y);

// A^T J_2N A - J_2n.
Matrix symplecticity_residual(const Matrix& a);

// (1 / (2n)^2) * ||A^T J_2N A - J_2n||_F^2.
double symplecticity_defect(const Matrix& a);

inline constexpr double kDefaultSymplecticTol = 1e-8;

// ||A^T J_2N A - J_2n||_F <= tol.
bool is_symplectic(const Matrix& a, double tol = kDefaultSymplecticTol);

}  // namespace symmor
