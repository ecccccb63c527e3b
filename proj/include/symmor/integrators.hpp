#pragma once

// s-stage Runge-Kutta integration on a fixed equidistant grid. Stage
// equations are solved by Newton's method; for linear fields the stage
// Jacobian is constant and factored once.

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "symmor/numerics.hpp"
#include "symmor/wave.hpp"

namespace symmor {

struct RkTableau {
  Matrix a;  // s x s
  Vector b;  // s

  Index stages() const { return b.size(); }

  static RkTableau implicit_midpoint();
  static RkTableau explicit_euler();
  static RkTableau heun();
  static RkTableau gauss2();
};

// max_ij |b_i a_ij + b_j a_ji - b_i b_j| <= tol.
bool is_symplectic_tableau(const RkTableau& tab, double tol);

struct NewtonOptions {
  double abs_tol = 1e-12;
  // Added to abs_tol per stage as rel_tol * ||w_i||. Zero reproduces a pure
  // absolute test; the full-order default needs it because the stencil
  // entries are O(mu^2 / dxi^2).
  double rel_tol = 1e-12;
  int max_iter = 25;

  static NewtonOptions full_order() { return {}; }
  static NewtonOptions reduced_order() { return {1e-8, 0.0, 15}; }
  void validate() const;
};

// Autonomous field with a Jacobian for Newton. Linear fields return the same
// Jacobian everywhere.
struct VectorField {
  Index dim = 0;
  std::function<Vector(const Vector&)> eval;
  std::function<Matrix(const Vector&)> jacobian;
  bool linear = false;
};

VectorField hamiltonian_field(const HamiltonianModel& model);
VectorField linear_field(Matrix m);

struct StageSolution {
  std::vector<Vector> stages;          // w_1..w_s
  std::vector<double> residual_norms;  // ||r_i|| at acceptance
  int iterations = 0;
};

class NonconvergenceError : public ConvergenceError {
 public:
  NonconvergenceError(const std::string& what, std::vector<double> residuals, int step = -1)
      : ConvergenceError(what), residuals_(std::move(residuals)), step_(step) {}
  const std::vector<double>& residuals() const { return residuals_; }
  int step() const { return step_; }

 private:
  std::vector<double> residuals_;
  int step_;
};

// Newton solver for the stage system of one tableau, step size and field.
class RkStageSolver {
 public:
  RkStageSolver(VectorField field, RkTableau tab, double dt, NewtonOptions opts);

  StageSolution solve(const Vector& x_prev) const;
  // x_prev + dt * sum_i b_i w_i.
  Vector update(const Vector& x_prev, const StageSolution& sol) const;

  const RkTableau& tableau() const { return tab_; }
  double dt() const { return dt_; }

 private:
  Matrix stage_jacobian(const Vector& x_prev, const std::vector<Vector>& w) const;
  std::vector<Vector> residuals(const Vector& x_prev, const std::vector<Vector>& w) const;

  VectorField field_;
  RkTableau tab_;
  double dt_;
  NewtonOptions opts_;
  std::optional<DenseLu> cached_lu_;
};

StageSolution rk_stage_solve(const VectorField& field, const Vector& x_prev, double dt,
                             const RkTableau& tab, const NewtonOptions& opts);
Vector rk_step(const VectorField& field, const Vector& x_prev, double dt, const RkTableau& tab,
               const NewtonOptions& opts);

struct Trajectory {
  std::vector<Vector> states;  // x^0..x^K
  double dt = 0.0;
  std::vector<double> hamiltonian_trace;
  // Stage velocities per step (entry k holds the stages producing x^{k+1});
  // only filled when requested.
  std::vector<std::vector<Vector>> stages;
  std::vector<int> iterations;
};

Trajectory integrate(const HamiltonianModel& model, const Vector& x0, int K, double T,
                     const RkTableau& tab, const NewtonOptions& opts = NewtonOptions::full_order(),
                     bool keep_stages = false);

}  // namespace symmor
