#pragma once

// Parametric 1D linear wave equation with homogeneous Dirichlet boundaries,
// written as a canonical Hamiltonian system in x = [q; p] after central
// finite differences on N interior points of (-1/2, 1/2).

#include <functional>
#include <string>
#include <vector>

#include "symmor/numerics.hpp"

namespace symmor {

struct WaveConfig {
  Index N = 256;        // interior grid points
  double mu = 5.0 / 12.0;  // wave speed
  double T = 1.0;       // final time
  int K = 500;          // time steps

  double dxi() const { return 1.0 / static_cast<double>(N + 1); }
  double dt() const { return T / static_cast<double>(K); }

  // Throws DimensionError for N < 2 or K < 1.
  void validate() const;
  // Soft checks, e.g. mu outside [5/12, 5/6].
  std::vector<std::string> warnings() const;
};

struct CanonicalState {
  Vector x;  // [q_1..q_N, p_1..p_N]
  double mu = 0.0;
  double t = 0.0;
};

// Quadratic Hamiltonian H(x) = 1/2 x^T A x with symmetric A. The dense A is
// always available; an optional structured apply replaces the dense product
// in the hot paths.
class HamiltonianModel {
 public:
  using Apply = std::function<Vector(const Vector&)>;

  explicit HamiltonianModel(Matrix system_matrix, double mu = 0.0, Apply fast_apply = {});

  Index dim() const { return a_.rows(); }
  Index half_dim() const { return a_.rows() / 2; }
  double mu() const { return mu_; }
  const Matrix& system_matrix() const { return a_; }

  Vector apply_system(const Vector& x) const;
  Matrix apply_system(const Matrix& x) const;

  double hamiltonian(const Vector& x) const;
  Vector grad_hamiltonian(const Vector& x) const;
  // X_H(x) = J_2N grad H(x).
  Vector vector_field(const Vector& x) const;

  // Dense J_2N A.
  Matrix field_matrix() const;
  LinearOperator field_operator() const;

 private:
  void check(const Vector& x, const char* what) const;

  Matrix a_;
  double mu_;
  Apply fast_apply_;
};

// Cubic spline pulse h(s) and its derivative.
double spline_h(double s);
double spline_h_derivative(double s);

// u0(xi; mu) = h(4/mu * |xi + 1/2 - mu/2|) and its analytic xi-derivative.
double pulse_profile(double xi, double mu);
double pulse_slope(double xi, double mu);

// xi_i = i * dxi - 1/2, i = 1..N.
Vector wave_grid(const WaveConfig& cfg);

// Central difference second-derivative matrix (1, -2, 1)/dxi^2.
Matrix second_difference_matrix(Index n, double dxi);

CanonicalState initial_state(const WaveConfig& cfg);
HamiltonianModel build_model(const WaveConfig& cfg);

// Traveling wave u(t, xi) = u0(xi - mu t). Only valid before the pulse
// reaches the right boundary (t < 1/mu - 1); throws std::domain_error after.
CanonicalState exact_solution(const WaveConfig& cfg, double t);

// kappa = ||J A||_2, the Lipschitz constant of the linear field.
double lipschitz_constant(const HamiltonianModel& model, double tol = 1e-8);

}  // namespace symmor
