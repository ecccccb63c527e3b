#pragma once

// A-posteriori error bound for RK-discretized reduced models and the
// diagnostics used to compare reduction techniques.

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "symmor/integrators.hpp"
#include "symmor/manifold_rom.hpp"
#include "symmor/rom_trace.hpp"
#include "symmor/wave.hpp"

namespace symmor {

struct BoundConditions {
  Matrix D;      // d_ij = delta_ij - kappa dt |a_ij|
  Matrix D_inv;  // empty when D is singular
  bool valid = false;
  std::string reason;
};

// (a1): D invertible. (a2): for s = 1, D > 0; for s > 1, the sufficient
// check that D^{-1} is entrywise nonnegative.
BoundConditions bound_conditions(double kappa, double dt, const RkTableau& tab);

struct StepResiduals {
  std::vector<double> stage;  // ||r~_i^k||
  double update = 0.0;        // ||r~_x^k||
};

// Residuals of step k >= 1 with respect to the reconstructed trajectory,
// using w~_i = Dd(x_r^{k-1}) w_{r,i}. Needs the stage velocities of the trace.
StepResiduals reconstructed_residuals(const HamiltonianModel& model, const DecoderHandle& decoder,
                                      const RomTrace& trace, const RkTableau& tab, double dt, int k);

struct BoundTrace {
  std::vector<StepResiduals> residuals;  // entry k - 1 belongs to step k
  double kappa = 0.0;
  Matrix D;
  double c1 = 0.0;
  std::vector<double> bound;  // bound[0] = ||x^0 - x~^0||
  bool valid = false;
};

// The recursion alone, for externally supplied residual norms.
BoundTrace error_bound_from_residuals(double kappa, double dt, const RkTableau& tab,
                                      std::vector<StepResiduals> residuals, double initial_error);

// Throws StructureError if the conditions on dt fail.
BoundTrace error_bound(const HamiltonianModel& model, const DecoderHandle& decoder, const RomTrace& trace,
                       const RkTableau& tab, double dt, double kappa, const Vector& x0);

// Maps a full state x to x_ref + d(e(x - x_ref)).
using Projector = std::function<Vector(const Vector&)>;
Projector linear_projector(const Matrix& V, const Vector& x_ref);
Projector network_projector(std::shared_ptr<const Autoencoder> ae, const Vector& x_ref);

// Relative errors over one parameter; the denominator is sum_k ||x^k - x^0||^2
// over the full-order states.
double proj_error(const std::vector<Vector>& fom_states, const Projector& projector);
double red_error(const std::vector<Vector>& fom_states, const RomTrace& rom);

// |H(x^k) - H(x~^k)| for the common prefix of both traces.
std::vector<double> hamiltonian_error_trace(const std::vector<Vector>& fom_states, const RomTrace& rom,
                                            const HamiltonianModel& model);
// |H(x~^k) - H(x~^0)|.
std::vector<double> hamiltonian_drift_trace(const RomTrace& rom, const HamiltonianModel& model);
std::vector<double> symplecticity_error_trace(const RomTrace& rom, const DecoderHandle& decoder);

struct RunTag {
  std::string method;
  Index two_n = 0;
  double mu = 0.0;
};

struct ConvergenceCounts {
  int converged = 0;
  int failed = 0;
};

struct ConvergenceReport {
  ConvergenceCounts total;
  std::map<std::string, ConvergenceCounts> per_method;
};

ConvergenceReport convergence_report(const std::vector<std::pair<RunTag, bool>>& runs);
ConvergenceReport convergence_report(const std::vector<std::pair<RunTag, const RomTrace*>>& runs);

}  // namespace symmor
