#include "symmor/reduction_linear.hpp"

#include <cmath>

#include "symmor/symplectic.hpp"

namespace symmor {

Matrix SnapshotSet::columns_for(double mu) const {
  std::vector<Index> idx;
  for (Index j = 0; j < size(); ++j) {
    if (params[j] == mu) idx.push_back(j);
  }
  if (idx.empty()) throw DimensionError("SnapshotSet: no columns for mu=" + format_real(mu));
  Matrix out(dim(), static_cast<Index>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) out.col(static_cast<Index>(i)) = columns.col(idx[i]);
  return out;
}

const Vector& SnapshotSet::shift_for(double mu) const {
  for (const auto& [m, x0] : shifts) {
    if (m == mu) return x0;
  }
  throw DimensionError("SnapshotSet: no shift for mu=" + format_real(mu));
}

SnapshotSet assemble_snapshots(const std::vector<std::pair<double, Trajectory>>& runs) {
  if (runs.empty()) throw DimensionError("assemble_snapshots: no trajectories");
  const Index dim = runs.front().second.states.front().size();
  Index total = 0;
  for (const auto& [mu, traj] : runs) {
    if (traj.states.empty()) throw DimensionError("assemble_snapshots: empty trajectory");
    for (const Vector& x : traj.states) {
      if (x.size() != dim) throw DimensionError("assemble_snapshots: inconsistent state dimension");
    }
    total += static_cast<Index>(traj.states.size());
  }
  SnapshotSet s;
  s.columns.resize(dim, total);
  s.params.reserve(total);
  Index col = 0;
  for (const auto& [mu, traj] : runs) {
    const Vector& x0 = traj.states.front();
    s.shifts.emplace_back(mu, x0);
    for (const Vector& x : traj.states) {
      s.columns.col(col++) = x - x0;
      s.params.push_back(mu);
    }
  }
  return s;
}

std::string to_string(BasisKind kind) {
  switch (kind) {
    case BasisKind::pod: return "pod";
    case BasisKind::cotangent_lift: return "cotangent_lift";
    case BasisKind::custom: return "custom";
  }
  return "custom";
}

std::string to_string(LinearRomKind kind) {
  switch (kind) {
    case LinearRomKind::SG: return "SG";
    case LinearRomKind::G: return "G";
    case LinearRomKind::LSPG: return "LSPG";
  }
  return "G";
}

namespace {

Matrix leading_left_vectors(const Matrix& data, Index k, const char* what) {
  if (k < 1) throw DimensionError(std::string(what) + ": reduced dimension must be >= 1");
  if (k > std::min(data.rows(), data.cols())) {
    throw RankDeficiencyError(std::string(what) + ": requested " + std::to_string(k) +
                              " vectors from a " + std::to_string(data.rows()) + "x" +
                              std::to_string(data.cols()) + " matrix");
  }
  ThinSvd svd = svd_thin(data, k);
  const double s0 = svd.singular_values(0);
  if (!(s0 > 0.0) || svd.singular_values(k - 1) <= kRankTolerance * s0) {
    throw RankDeficiencyError(std::string(what) + ": snapshot rank below " + std::to_string(k));
  }
  return svd.U;
}

}  // namespace

SymplecticBasis pod_basis(const SnapshotSet& s, Index two_n) {
  return SymplecticBasis{leading_left_vectors(s.columns, two_n, "pod_basis"), BasisKind::pod};
}

SymplecticBasis cotangent_lift_basis(const SnapshotSet& s, Index two_n) {
  if (two_n < 2 || two_n % 2 != 0) throw DimensionError("cotangent_lift_basis: two_n must be even and >= 2");
  if (s.dim() % 2 != 0) throw DimensionError("cotangent_lift_basis: snapshot dimension must be even");
  const Index N = s.dim() / 2;
  const Index n = two_n / 2;
  Matrix stacked(N, 2 * s.size());
  stacked << s.columns.topRows(N), s.columns.bottomRows(N);
  const Matrix phi = leading_left_vectors(stacked, n, "cotangent_lift_basis");
  Matrix v = Matrix::Zero(2 * N, two_n);
  v.topLeftCorner(N, n) = phi;
  v.bottomRightCorner(N, n) = phi;
  return SymplecticBasis{std::move(v), BasisKind::cotangent_lift};
}

LinearRom::LinearRom(const HamiltonianModel& model, SymplecticBasis basis, LinearRomKind kind,
                     Vector x_ref)
    : model_(&model), basis_(std::move(basis)), kind_(kind), x_ref_(std::move(x_ref)) {
  const Matrix& v = basis_.V;
  if (v.rows() != model.dim()) throw DimensionError("LinearRom: basis rows must equal the model dimension");
  if (x_ref_.size() != model.dim()) throw DimensionError("LinearRom: x_ref length mismatch");
  if (v.cols() < 1) throw DimensionError("LinearRom: empty basis");
  if (kind_ == LinearRomKind::SG) {
    if (v.cols() % 2 != 0 || !is_symplectic(v)) {
      throw StructureError("LinearRom: SG requires a symplectic basis");
    }
  }
  const Index n_full = model.half_dim();
  jav_ = poisson_apply(n_full, model.apply_system(v));
  jaxref_ = model.vector_field(x_ref_);
  switch (kind_) {
    case LinearRomKind::SG: {
      const Index n = v.cols() / 2;
      const Matrix av = model.apply_system(v);
      m_ = poisson_apply(n, Matrix(v.transpose() * av));
      c_ = poisson_apply(n, Vector(v.transpose() * model.grad_hamiltonian(x_ref_)));
      break;
    }
    case LinearRomKind::G:
      m_ = v.transpose() * jav_;
      c_ = v.transpose() * jaxref_;
      break;
    case LinearRomKind::LSPG:
      break;
  }
}

Vector LinearRom::field(const Vector& x_r) const {
  if (kind_ == LinearRomKind::LSPG) throw StructureError("LinearRom: LSPG has no continuous reduced field");
  if (x_r.size() != reduced_dim()) throw DimensionError("LinearRom::field: length mismatch");
  return m_ * x_r + c_;
}

void LinearRom::prepare(double dt) const {
  if (dt == cached_dt_ && (stage_lu_ || lspg_qr_)) return;
  const Index r = reduced_dim();
  if (kind_ == LinearRomKind::LSPG) {
    const Matrix& v = basis_.V;
    const Matrix psi = v - 0.5 * dt * jav_;
    lspg_qr_.emplace(psi);
    if (lspg_qr_->rank() < r) throw SingularMatrixError("LinearRom: LSPG test basis is rank deficient");
    lspg_rhs_ = v + 0.5 * dt * jav_;
  } else {
    stage_lu_.emplace(Matrix::Identity(r, r) - 0.5 * dt * m_);
  }
  cached_dt_ = dt;
}

LinearRom::Step LinearRom::step(const Vector& x_prev, double dt) const {
  if (!(dt > 0.0)) throw DimensionError("LinearRom::step: dt must be positive");
  if (x_prev.size() != reduced_dim()) throw DimensionError("LinearRom::step: length mismatch");
  prepare(dt);
  Step out;
  if (kind_ == LinearRomKind::LSPG) {
    // min || (I - dt/2 JA) V x - (I + dt/2 JA) V x_prev - dt JA x_ref ||.
    const Vector rhs = lspg_rhs_ * x_prev + dt * jaxref_;
    out.x_next = lspg_qr_->solve(rhs);
    out.w = (out.x_next - x_prev) / dt;
    const Matrix psi = basis_.V - 0.5 * dt * jav_;
    out.residual = (psi.transpose() * (psi * out.x_next - rhs)).norm();
  } else {
    out.w = stage_lu_->solve(Vector(field(x_prev)));
    out.x_next = x_prev + dt * out.w;
    out.residual = (out.w - field(x_prev + 0.5 * dt * out.w)).norm();
  }
  return out;
}

RomTrace LinearRom::integrate(const Vector& x_r0, int K, double T) const {
  if (K < 0) throw DimensionError("LinearRom::integrate: K must be >= 0");
  RomTrace trace;
  trace.method = to_string(kind_);
  trace.reduced_states.push_back(x_r0);
  trace.reconstructed.push_back(reconstruct(x_r0));
  const double dt = K > 0 ? T / K : 0.0;
  for (int k = 1; k <= K; ++k) {
    Step s = step(trace.reduced_states.back(), dt);
    if (!all_finite(s.x_next)) {
      trace.converged = false;
      trace.failed_step = k;
      break;
    }
    trace.reduced_states.push_back(s.x_next);
    trace.reconstructed.push_back(reconstruct(s.x_next));
    trace.stage_velocities.push_back({std::move(s.w)});
    trace.iterations.push_back(1);
    trace.residual_norms.push_back(s.residual);
  }
  return trace;
}

}  // namespace symmor
