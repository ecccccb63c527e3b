#include "symmor/manifold_rom.hpp"

#include <cmath>

#include "symmor/symplectic.hpp"

namespace symmor {

Vector DecoderHandle::symplectic_inverse_apply(const Vector& x_r, const Vector& y) const {
  return symmor::symplectic_inverse_apply(jacobian(x_r), y);
}

DecoderHandle linear_decoder(Matrix V) {
  auto v = std::make_shared<const Matrix>(std::move(V));
  DecoderHandle h;
  h.full_dim = v->rows();
  h.reduced_dim = v->cols();
  h.source = DecoderSource::linear_basis;
  const Index r = h.reduced_dim;
  const Index f = h.full_dim;
  h.eval = [v, r](const Vector& x_r) -> Vector {
    if (x_r.size() != r) throw DimensionError("decoder: reduced length mismatch");
    return *v * x_r;
  };
  h.jvp = [v, r](const Vector& x_r, const Vector& dv) -> Vector {
    if (x_r.size() != r || dv.size() != r) throw DimensionError("decoder jvp: length mismatch");
    return *v * dv;
  };
  h.vjp = [v, r, f](const Vector& x_r, const Vector& w) -> Vector {
    if (x_r.size() != r || w.size() != f) throw DimensionError("decoder vjp: length mismatch");
    return v->transpose() * w;
  };
  h.jacobian = [v, r](const Vector& x_r) -> Matrix {
    if (x_r.size() != r) throw DimensionError("decoder jacobian: length mismatch");
    return *v;
  };
  h.initial_reduced = [r]() -> Vector { return Vector::Zero(r); };
  return h;
}

DecoderHandle network_decoder(std::shared_ptr<const Autoencoder> ae) {
  if (!ae) throw DimensionError("network_decoder: null autoencoder");
  DecoderHandle h;
  h.full_dim = ae->full_dim;
  h.reduced_dim = ae->reduced_dim;
  h.source = DecoderSource::network;
  h.eval = [ae](const Vector& x_r) { return decode(*ae, x_r); };
  h.jvp = [ae](const Vector& x_r, const Vector& v) { return decoder_jvp(*ae, x_r, v); };
  h.vjp = [ae](const Vector& x_r, const Vector& w) { return decoder_vjp(*ae, x_r, w); };
  h.jacobian = [ae](const Vector& x_r) { return decoder_jacobian(*ae, x_r); };
  h.initial_reduced = [ae]() { return encode(*ae, Vector::Zero(ae->full_dim)); };
  return h;
}

std::string to_string(RomMethod m) {
  switch (m) {
    case RomMethod::SMG: return "SMG";
    case RomMethod::MG: return "MG";
    case RomMethod::MLSPG: return "M-LSPG";
  }
  return "SMG";
}

RomSetup make_setup(DecoderHandle decoder, const Vector& x0, const HamiltonianModel& model, RomMethod method) {
  if (decoder.full_dim != model.dim() || x0.size() != model.dim()) {
    throw DimensionError("make_setup: decoder, state and model dimensions differ");
  }
  if (method == RomMethod::SMG && decoder.reduced_dim % 2 != 0) {
    throw DimensionError("make_setup: SMG needs an even reduced dimension");
  }
  RomSetup s;
  s.x_r0 = decoder.initial_reduced();
  s.x_ref = x0 - decoder.eval(s.x_r0);
  s.decoder = std::move(decoder);
  s.model = &model;
  s.method = method;
  return s;
}

Vector smg_field(const RomSetup& s, const Vector& x_r) {
  const Vector g = s.model->grad_hamiltonian(s.reconstruct(x_r));
  return poisson_apply(s.decoder.reduced_dim / 2, s.decoder.vjp(x_r, g));
}

namespace {

DenseLu gram_lu(const Matrix& dd) {
  try {
    return DenseLu(dd.transpose() * dd);
  } catch (const SingularMatrixError& e) {
    throw RankDeficiencyError(std::string("mg: decoder Jacobian is rank deficient: ") + e.what());
  }
}

Vector mg_field_with(const RomSetup& s, const Vector& x_r, const Matrix& dd) {
  const Vector xh = s.model->vector_field(s.reconstruct(x_r));
  return gram_lu(dd).solve(Vector(dd.transpose() * xh));
}

// Newton-type loop shared by SMG and MG on the midpoint stage equation
// w = f(x_prev + dt/2 w). tangent(y, dd) returns the first-order Jacobian of f
// at y with Dd = dd.
template <class Field, class Tangent>
RomStep stage_loop(const RomSetup& s, const Vector& x_prev, double dt, const NewtonOptions& opts, Field field,
                   Tangent tangent) {
  if (!(dt > 0.0)) throw DimensionError("rom step: dt must be positive");
  if (x_prev.size() != s.decoder.reduced_dim) throw DimensionError("rom step: reduced length mismatch");
  const Index r = s.decoder.reduced_dim;
  RomStep out;
  Vector w = field(x_prev, s.decoder.jacobian(x_prev));
  for (int iter = 0;; ++iter) {
    const Vector y = x_prev + 0.5 * dt * w;
    const Matrix dd = s.decoder.jacobian(y);
    const Vector res = w - field(y, dd);
    out.residual = res.norm();
    out.iterations = iter;
    if (!std::isfinite(out.residual)) break;
    if (out.residual <= opts.abs_tol + opts.rel_tol * w.norm()) {
      out.converged = true;
      break;
    }
    if (iter == opts.max_iter) break;
    const Matrix jac = Matrix::Identity(r, r) - 0.5 * dt * tangent(dd);
    w -= DenseLu(jac).solve(res);
  }
  out.w = w;
  out.x_next = x_prev + dt * w;
  return out;
}

}  // namespace

Vector mg_field(const RomSetup& s, const Vector& x_r) { return mg_field_with(s, x_r, s.decoder.jacobian(x_r)); }

RomStep smg_step(const RomSetup& s, const Vector& x_prev, double dt, const NewtonOptions& opts) {
  const Index n = s.decoder.reduced_dim / 2;
  return stage_loop(
      s, x_prev, dt, opts,
      [&](const Vector& y, const Matrix& dd) {
        return poisson_apply(n, Vector(dd.transpose() * s.model->grad_hamiltonian(s.reconstruct(y))));
      },
      [&](const Matrix& dd) { return poisson_apply(n, Matrix(dd.transpose() * s.model->apply_system(dd))); });
}

RomStep mg_step(const RomSetup& s, const Vector& x_prev, double dt, const NewtonOptions& opts) {
  const Index nf = s.model->half_dim();
  return stage_loop(
      s, x_prev, dt, opts, [&](const Vector& y, const Matrix& dd) { return mg_field_with(s, y, dd); },
      [&](const Matrix& dd) {
        const Matrix jadd = poisson_apply(nf, s.model->apply_system(dd));
        return gram_lu(dd).solve(Matrix(dd.transpose() * jadd));
      });
}

RomStep mlspg_step(const RomSetup& s, const Vector& x_prev, double dt, const NewtonOptions& opts) {
  if (!(dt > 0.0)) throw DimensionError("rom step: dt must be positive");
  if (x_prev.size() != s.decoder.reduced_dim) throw DimensionError("rom step: reduced length mismatch");
  const HamiltonianModel& m = *s.model;
  const Index nf = m.half_dim();
  const Vector xt_prev = s.reconstruct(x_prev);
  // Constant part: -(I + dt/2 J A) x~_prev.
  const Vector c = -(xt_prev + 0.5 * dt * m.vector_field(xt_prev));
  RomStep out;
  Vector x = x_prev;
  for (int iter = 0;; ++iter) {
    const Vector xt = s.reconstruct(x);
    const Vector res = xt - 0.5 * dt * m.vector_field(xt) + c;
    const Matrix dd = s.decoder.jacobian(x);
    const Matrix psi = dd - 0.5 * dt * poisson_apply(nf, m.apply_system(dd));
    out.residual = (psi.transpose() * res).norm();
    out.iterations = iter;
    if (!std::isfinite(out.residual)) break;
    if (out.residual <= opts.abs_tol) {
      out.converged = true;
      break;
    }
    if (iter == opts.max_iter) break;
    Eigen::ColPivHouseholderQR<Matrix> qr(psi);
    if (qr.rank() < psi.cols()) throw RankDeficiencyError("mlspg_step: test basis is rank deficient");
    x -= qr.solve(res);
  }
  out.x_next = x;
  out.w = (x - x_prev) / dt;
  return out;
}

RomStep rom_step(const RomSetup& s, const Vector& x_prev, double dt, const NewtonOptions& opts) {
  switch (s.method) {
    case RomMethod::SMG: return smg_step(s, x_prev, dt, opts);
    case RomMethod::MG: return mg_step(s, x_prev, dt, opts);
    case RomMethod::MLSPG: return mlspg_step(s, x_prev, dt, opts);
  }
  return smg_step(s, x_prev, dt, opts);
}

RomTrace integrate_rom(const RomSetup& s, int K, double T, const NewtonOptions& opts) {
  if (K < 0) throw DimensionError("integrate_rom: K must be >= 0");
  if (!s.model) throw DimensionError("integrate_rom: setup without model");
  opts.validate();
  RomTrace trace;
  trace.method = to_string(s.method);
  trace.reduced_states.push_back(s.x_r0);
  trace.reconstructed.push_back(s.reconstruct(s.x_r0));
  const double dt = K > 0 ? T / K : 0.0;
  for (int k = 1; k <= K; ++k) {
    RomStep step;
    try {
      step = rom_step(s, trace.reduced_states.back(), dt, opts);
    } catch (const NumericalError&) {
      step.converged = false;
    }
    if (!step.converged) {
      trace.converged = false;
      trace.failed_step = k;
      trace.iterations.push_back(step.iterations);
      trace.residual_norms.push_back(step.residual);
      break;
    }
    trace.reduced_states.push_back(step.x_next);
    trace.reconstructed.push_back(s.reconstruct(step.x_next));
    trace.stage_velocities.push_back({std::move(step.w)});
    trace.iterations.push_back(step.iterations);
    trace.residual_norms.push_back(step.residual);
  }
  return trace;
}

}  // namespace symmor
