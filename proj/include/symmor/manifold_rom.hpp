#pragma once

// Reduced models on a decoder manifold x~ = x_ref + d(x_r): SMG, MG and
// M-LSPG, all stepped with the implicit midpoint rule.

#include <functional>
#include <memory>
#include <string>

#include "symmor/autonet.hpp"
#include "symmor/integrators.hpp"
#include "symmor/rom_trace.hpp"
#include "symmor/wave.hpp"

namespace symmor {

enum class DecoderSource { network, linear_basis };

// Uniform view of linear bases and trained decoders.
struct DecoderHandle {
  Index full_dim = 0;
  Index reduced_dim = 0;
  DecoderSource source = DecoderSource::linear_basis;
  std::function<Vector(const Vector&)> eval;
  std::function<Vector(const Vector&, const Vector&)> jvp;  // (x_r, v) -> Dd v
  std::function<Vector(const Vector&, const Vector&)> vjp;  // (x_r, w) -> Dd^T w
  std::function<Matrix(const Vector&)> jacobian;
  // 0 for linear bases, e(0) for networks.
  std::function<Vector()> initial_reduced;

  // (Dd(x_r))^+ y.
  Vector symplectic_inverse_apply(const Vector& x_r, const Vector& y) const;
};

DecoderHandle linear_decoder(Matrix V);
DecoderHandle network_decoder(std::shared_ptr<const Autoencoder> ae);

enum class RomMethod { SMG, MG, MLSPG };
std::string to_string(RomMethod m);

struct RomSetup {
  DecoderHandle decoder;
  Vector x_ref;
  Vector x_r0;
  const HamiltonianModel* model = nullptr;
  RomMethod method = RomMethod::SMG;

  Vector reconstruct(const Vector& x_r) const { return x_ref + decoder.eval(x_r); }
};

// x_r0 from the decoder policy and x_ref = x0 - d(x_r0). The model must
// outlive the setup.
RomSetup make_setup(DecoderHandle decoder, const Vector& x0, const HamiltonianModel& model,
                    RomMethod method = RomMethod::SMG);

// J_2n Dd^T grad H(x_ref + d(x_r)).
Vector smg_field(const RomSetup& s, const Vector& x_r);
// (Dd^T Dd)^{-1} Dd^T X_H(x_ref + d(x_r)).
Vector mg_field(const RomSetup& s, const Vector& x_r);

struct RomStep {
  Vector x_next;
  Vector w;  // midpoint stage velocity, or (x_next - x_prev) / dt for M-LSPG
  int iterations = 0;
  double residual = 0.0;
  bool converged = false;
};

// Quasi-Newton on the midpoint stage equation w = f(x_prev + dt/2 w); the
// Jacobian keeps Dd at the current iterate and drops second derivatives of d.
RomStep smg_step(const RomSetup& s, const Vector& x_prev, double dt,
                 const NewtonOptions& opts = NewtonOptions::reduced_order());
RomStep mg_step(const RomSetup& s, const Vector& x_prev, double dt,
                const NewtonOptions& opts = NewtonOptions::reduced_order());
// Gauss-Newton on min ||x~ - x~_prev - dt J A (x~ + x~_prev) / 2||; converged
// when ||Psi^T r|| <= abs_tol with Psi = (I - dt/2 J A) Dd.
RomStep mlspg_step(const RomSetup& s, const Vector& x_prev, double dt,
                   const NewtonOptions& opts = NewtonOptions::reduced_order());

RomStep rom_step(const RomSetup& s, const Vector& x_prev, double dt, const NewtonOptions& opts);

// Stops at the first failed step, keeping the states computed so far.
RomTrace integrate_rom(const RomSetup& s, int K, double T,
                       const NewtonOptions& opts = NewtonOptions::reduced_order());

}  // namespace symmor
