#include "symmor/integrators.hpp"

#include <algorithm>
#include <cmath>

#include "symmor/symplectic.hpp"

namespace symmor {

RkTableau RkTableau::implicit_midpoint() {
  RkTableau t;
  t.a = Matrix::Constant(1, 1, 0.5);
  t.b = Vector::Constant(1, 1.0);
  return t;
}

RkTableau RkTableau::explicit_euler() {
  RkTableau t;
  t.a = Matrix::Zero(1, 1);
  t.b = Vector::Constant(1, 1.0);
  return t;
}

RkTableau RkTableau::heun() {
  RkTableau t;
  t.a = Matrix::Zero(2, 2);
  t.a(1, 0) = 1.0;
  t.b = Vector::Constant(2, 0.5);
  return t;
}

RkTableau RkTableau::gauss2() {
  const double r = std::sqrt(3.0) / 6.0;
  RkTableau t;
  t.a.resize(2, 2);
  t.a << 0.25, 0.25 - r, 0.25 + r, 0.25;
  t.b = Vector::Constant(2, 0.5);
  return t;
}

bool is_symplectic_tableau(const RkTableau& tab, double tol) {
  const Index s = tab.stages();
  double worst = 0.0;
  for (Index i = 0; i < s; ++i) {
    for (Index j = 0; j < s; ++j) {
      const double c = tab.b(i) * tab.a(i, j) + tab.b(j) * tab.a(j, i) - tab.b(i) * tab.b(j);
      worst = std::max(worst, std::abs(c));
    }
  }
  return worst <= tol;
}

void NewtonOptions::validate() const {
  if (!(abs_tol > 0.0)) throw DimensionError("NewtonOptions: abs_tol must be positive");
  if (rel_tol < 0.0) throw DimensionError("NewtonOptions: rel_tol must be nonnegative");
  if (max_iter < 1) throw DimensionError("NewtonOptions: max_iter must be >= 1");
}

VectorField hamiltonian_field(const HamiltonianModel& model) {
  Matrix jac = model.field_matrix();
  return VectorField{model.dim(), [&model](const Vector& x) { return model.vector_field(x); },
                     [jac = std::move(jac)](const Vector&) { return jac; }, true};
}

VectorField linear_field(Matrix m) {
  const Index n = m.rows();
  return VectorField{n, [m](const Vector& x) -> Vector { return m * x; },
                     [m](const Vector&) { return m; }, true};
}

RkStageSolver::RkStageSolver(VectorField field, RkTableau tab, double dt, NewtonOptions opts)
    : field_(std::move(field)), tab_(std::move(tab)), dt_(dt), opts_(opts) {
  if (!(dt_ > 0.0)) throw DimensionError("RkStageSolver: dt must be positive");
  opts_.validate();
  if (field_.linear) {
    cached_lu_.emplace(stage_jacobian(Vector::Zero(field_.dim),
                                      std::vector<Vector>(tab_.stages(), Vector::Zero(field_.dim))));
  }
}

std::vector<Vector> RkStageSolver::residuals(const Vector& x_prev,
                                             const std::vector<Vector>& w) const {
  const Index s = tab_.stages();
  std::vector<Vector> r(s);
  for (Index i = 0; i < s; ++i) {
    Vector y = x_prev;
    for (Index j = 0; j < s; ++j) {
      if (tab_.a(i, j) != 0.0) y += dt_ * tab_.a(i, j) * w[j];
    }
    r[i] = w[i] - field_.eval(y);
  }
  return r;
}

Matrix RkStageSolver::stage_jacobian(const Vector& x_prev, const std::vector<Vector>& w) const {
  const Index s = tab_.stages();
  const Index n = field_.dim;
  Matrix jac = Matrix::Identity(s * n, s * n);
  for (Index i = 0; i < s; ++i) {
    Vector y = x_prev;
    for (Index j = 0; j < s; ++j) {
      if (tab_.a(i, j) != 0.0) y += dt_ * tab_.a(i, j) * w[j];
    }
    const Matrix dx = field_.jacobian(y);
    for (Index j = 0; j < s; ++j) {
      if (tab_.a(i, j) != 0.0) jac.block(i * n, j * n, n, n) -= dt_ * tab_.a(i, j) * dx;
    }
  }
  return jac;
}

StageSolution RkStageSolver::solve(const Vector& x_prev) const {
  const Index s = tab_.stages();
  const Index n = field_.dim;
  if (x_prev.size() != n) throw DimensionError("rk_stage_solve: state length mismatch");

  StageSolution sol;
  sol.stages.assign(s, Vector::Zero(n));
  for (int iter = 0;; ++iter) {
    const std::vector<Vector> r = residuals(x_prev, sol.stages);
    bool ok = true;
    sol.residual_norms.resize(s);
    for (Index i = 0; i < s; ++i) {
      sol.residual_norms[i] = r[i].norm();
      if (!std::isfinite(sol.residual_norms[i])) {
        throw NonconvergenceError("rk_stage_solve: non-finite residual", sol.residual_norms);
      }
      ok = ok && sol.residual_norms[i] <= opts_.abs_tol + opts_.rel_tol * sol.stages[i].norm();
    }
    if (ok) {
      sol.iterations = iter;
      return sol;
    }
    if (iter == opts_.max_iter) {
      throw NonconvergenceError("rk_stage_solve: no convergence in " +
                                    std::to_string(opts_.max_iter) + " Newton iterations",
                                sol.residual_norms);
    }
    Vector rhs(s * n);
    for (Index i = 0; i < s; ++i) rhs.segment(i * n, n) = r[i];
    const Vector delta = cached_lu_ ? cached_lu_->solve(rhs)
                                    : DenseLu(stage_jacobian(x_prev, sol.stages)).solve(rhs);
    for (Index i = 0; i < s; ++i) sol.stages[i] -= delta.segment(i * n, n);
  }
}

Vector RkStageSolver::update(const Vector& x_prev, const StageSolution& sol) const {
  Vector x = x_prev;
  for (Index i = 0; i < tab_.stages(); ++i) {
    if (tab_.b(i) != 0.0) x += dt_ * tab_.b(i) * sol.stages[i];
  }
  return x;
}

StageSolution rk_stage_solve(const VectorField& field, const Vector& x_prev, double dt,
                             const RkTableau& tab, const NewtonOptions& opts) {
  return RkStageSolver(field, tab, dt, opts).solve(x_prev);
}

Vector rk_step(const VectorField& field, const Vector& x_prev, double dt, const RkTableau& tab,
               const NewtonOptions& opts) {
  RkStageSolver solver(field, tab, dt, opts);
  return solver.update(x_prev, solver.solve(x_prev));
}

Trajectory integrate(const HamiltonianModel& model, const Vector& x0, int K, double T,
                     const RkTableau& tab, const NewtonOptions& opts, bool keep_stages) {
  if (K < 0) throw DimensionError("integrate: K must be >= 0");
  if (x0.size() != model.dim()) throw DimensionError("integrate: initial state length mismatch");
  Trajectory traj;
  traj.dt = K > 0 ? T / K : 0.0;
  traj.states.reserve(K + 1);
  traj.states.push_back(x0);
  traj.hamiltonian_trace.push_back(model.hamiltonian(x0));
  if (K == 0) return traj;

  const RkStageSolver solver(hamiltonian_field(model), tab, traj.dt, opts);
  for (int k = 1; k <= K; ++k) {
    StageSolution sol;
    try {
      sol = solver.solve(traj.states.back());
    } catch (const NonconvergenceError& e) {
      throw NonconvergenceError(std::string(e.what()) + " at step " + std::to_string(k),
                                e.residuals(), k);
    }
    traj.states.push_back(solver.update(traj.states.back(), sol));
    traj.hamiltonian_trace.push_back(model.hamiltonian(traj.states.back()));
    traj.iterations.push_back(sol.iterations);
    if (keep_stages) traj.stages.push_back(std::move(sol.stages));
  }
  return traj;
}

}  // namespace symmor
