#include "symmor/analysis.hpp"

#include <cmath>

#include "symmor/symplectic.hpp"

namespace symmor {

BoundConditions bound_conditions(double kappa, double dt, const RkTableau& tab) {
  if (!(kappa > 0.0)) throw DimensionError("bound_conditions: kappa must be positive");
  if (!(dt > 0.0)) throw DimensionError("bound_conditions: dt must be positive");
  const Index s = tab.stages();
  BoundConditions bc;
  bc.D = Matrix::Identity(s, s) - kappa * dt * tab.a.cwiseAbs();
  if (s == 1) {
    if (bc.D(0, 0) > 0.0) {
      bc.D_inv = Matrix::Constant(1, 1, 1.0 / bc.D(0, 0));
      bc.valid = true;
    } else {
      bc.reason = "D = " + format_real(bc.D(0, 0)) + " is not positive (needs kappa dt |a_11| < 1)";
    }
    return bc;
  }
  try {
    bc.D_inv = DenseLu(bc.D).solve(Matrix(Matrix::Identity(s, s)));
  } catch (const SingularMatrixError&) {
    bc.reason = "D is singular";
    return bc;
  }
  if (bc.D_inv.minCoeff() < 0.0) {
    bc.reason = "D^{-1} has negative entries";
    return bc;
  }
  bc.valid = true;
  return bc;
}

StepResiduals reconstructed_residuals(const HamiltonianModel& model, const DecoderHandle& decoder,
                                      const RomTrace& trace, const RkTableau& tab, double dt, int k) {
  if (k < 1 || k >= static_cast<int>(trace.reduced_states.size())) {
    throw DimensionError("reconstructed_residuals: step index out of range");
  }
  if (static_cast<int>(trace.stage_velocities.size()) < k) {
    throw DimensionError("reconstructed_residuals: trace has no stage velocities for step " + std::to_string(k));
  }
  const auto& wr = trace.stage_velocities[k - 1];
  const Index s = tab.stages();
  if (static_cast<Index>(wr.size()) != s) throw DimensionError("reconstructed_residuals: stage count mismatch");
  const Vector& xr_prev = trace.reduced_states[k - 1];
  const Vector& xt_prev = trace.reconstructed[k - 1];
  const Vector& xt = trace.reconstructed[k];
  std::vector<Vector> wt(s);
  for (Index i = 0; i < s; ++i) wt[i] = decoder.jvp(xr_prev, wr[i]);
  StepResiduals out;
  Vector update = xt - xt_prev;
  for (Index i = 0; i < s; ++i) {
    Vector y = xt_prev;
    for (Index j = 0; j < s; ++j) {
      if (tab.a(i, j) != 0.0) y += dt * tab.a(i, j) * wt[j];
    }
    out.stage.push_back((wt[i] - model.vector_field(y)).norm());
    update -= dt * tab.b(i) * wt[i];
  }
  out.update = update.norm();
  return out;
}

BoundTrace error_bound_from_residuals(double kappa, double dt, const RkTableau& tab,
                                      std::vector<StepResiduals> residuals, double initial_error) {
  const BoundConditions bc = bound_conditions(kappa, dt, tab);
  if (!bc.valid) throw StructureError("error_bound: conditions on dt violated: " + bc.reason);
  const Index s = tab.stages();
  // weights_i = sum_m |b_m| [D^{-1}]_{mi}
  const Vector weights = bc.D_inv.transpose() * tab.b.cwiseAbs();
  BoundTrace bt;
  bt.kappa = kappa;
  bt.D = bc.D;
  bt.c1 = 1.0 + kappa * dt * weights.sum();
  bt.valid = true;
  bt.bound.push_back(initial_error);
  for (const StepResiduals& r : residuals) {
    if (static_cast<Index>(r.stage.size()) != s) throw DimensionError("error_bound: stage count mismatch");
    double stage_term = 0.0;
    for (Index i = 0; i < s; ++i) stage_term += weights(i) * r.stage[i];
    bt.bound.push_back(bt.c1 * bt.bound.back() + dt * stage_term + r.update);
  }
  bt.residuals = std::move(residuals);
  return bt;
}

BoundTrace error_bound(const HamiltonianModel& model, const DecoderHandle& decoder, const RomTrace& trace,
                       const RkTableau& tab, double dt, double kappa, const Vector& x0) {
  std::vector<StepResiduals> res;
  const int steps = trace.steps();
  for (int k = 1; k <= steps; ++k) res.push_back(reconstructed_residuals(model, decoder, trace, tab, dt, k));
  return error_bound_from_residuals(kappa, dt, tab, std::move(res), (x0 - trace.reconstructed.front()).norm());
}

Projector linear_projector(const Matrix& V, const Vector& x_ref) {
  return [V, x_ref](const Vector& x) -> Vector { return x_ref + V * (V.transpose() * (x - x_ref)); };
}

Projector network_projector(std::shared_ptr<const Autoencoder> ae, const Vector& x_ref) {
  return [ae, x_ref](const Vector& x) -> Vector { return x_ref + decode(*ae, encode(*ae, x - x_ref)); };
}

namespace {

double snapshot_energy(const std::vector<Vector>& states) {
  if (states.empty()) throw DimensionError("relative error: empty trajectory");
  double den = 0.0;
  for (const Vector& x : states) den += (x - states.front()).squaredNorm();
  if (!(den > 0.0)) throw DimensionError("relative error: trajectory is stationary");
  return den;
}

}  // namespace

double proj_error(const std::vector<Vector>& fom_states, const Projector& projector) {
  const double den = snapshot_energy(fom_states);
  double num = 0.0;
  for (const Vector& x : fom_states) num += (projector(x) - x).squaredNorm();
  return std::sqrt(num / den);
}

double red_error(const std::vector<Vector>& fom_states, const RomTrace& rom) {
  if (rom.reconstructed.size() != fom_states.size()) {
    throw DimensionError("red_error: ROM and FOM traces differ in length");
  }
  const double den = snapshot_energy(fom_states);
  double num = 0.0;
  for (std::size_t k = 0; k < fom_states.size(); ++k) num += (rom.reconstructed[k] - fom_states[k]).squaredNorm();
  return std::sqrt(num / den);
}

std::vector<double> hamiltonian_error_trace(const std::vector<Vector>& fom_states, const RomTrace& rom,
                                            const HamiltonianModel& model) {
  const std::size_t n = std::min(fom_states.size(), rom.reconstructed.size());
  std::vector<double> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    out[k] = std::abs(model.hamiltonian(fom_states[k]) - model.hamiltonian(rom.reconstructed[k]));
  }
  return out;
}

std::vector<double> hamiltonian_drift_trace(const RomTrace& rom, const HamiltonianModel& model) {
  std::vector<double> out;
  if (rom.reconstructed.empty()) return out;
  const double h0 = model.hamiltonian(rom.reconstructed.front());
  for (const Vector& x : rom.reconstructed) out.push_back(std::abs(model.hamiltonian(x) - h0));
  return out;
}

std::vector<double> symplecticity_error_trace(const RomTrace& rom, const DecoderHandle& decoder) {
  std::vector<double> out;
  for (const Vector& xr : rom.reduced_states) out.push_back(symplecticity_defect(decoder.jacobian(xr)));
  return out;
}

ConvergenceReport convergence_report(const std::vector<std::pair<RunTag, bool>>& runs) {
  ConvergenceReport rep;
  for (const auto& [tag, ok] : runs) {
    ConvergenceCounts& m = rep.per_method[tag.method];
    (ok ? rep.total.converged : rep.total.failed) += 1;
    (ok ? m.converged : m.failed) += 1;
  }
  return rep;
}

ConvergenceReport convergence_report(const std::vector<std::pair<RunTag, const RomTrace*>>& runs) {
  std::vector<std::pair<RunTag, bool>> flags;
  for (const auto& [tag, trace] : runs) flags.emplace_back(tag, trace->converged);
  return convergence_report(flags);
}

}  // namespace symmor
