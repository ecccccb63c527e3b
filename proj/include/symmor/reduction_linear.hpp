#pragma once

// Snapshot assembly, linear bases (POD, cotangent lift) and the linear
// reduced models SG, G and LSPG with implicit midpoint time stepping.

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "symmor/integrators.hpp"
#include "symmor/rom_trace.hpp"
#include "symmor/wave.hpp"

namespace symmor {

// Columns x^k(mu) - x^0(mu), ordered mu-major, k-minor.
struct SnapshotSet {
  Matrix columns;
  std::vector<double> params;                     // mu per column
  std::vector<std::pair<double, Vector>> shifts;  // x^0(mu) per parameter

  Index dim() const { return columns.rows(); }
  Index size() const { return columns.cols(); }
  // Columns belonging to one parameter value, in time order.
  Matrix columns_for(double mu) const;
  const Vector& shift_for(double mu) const;
};

SnapshotSet assemble_snapshots(const std::vector<std::pair<double, Trajectory>>& runs);

enum class BasisKind { pod, cotangent_lift, custom };
std::string to_string(BasisKind kind);

struct SymplecticBasis {
  Matrix V;  // 2N x 2n
  BasisKind kind = BasisKind::custom;

  Index full_dim() const { return V.rows(); }
  Index reduced_dim() const { return V.cols(); }
};

// Singular values below this fraction of the largest count as zero.
inline constexpr double kRankTolerance = 1e-12;

// Leading left singular vectors of the snapshot matrix.
SymplecticBasis pod_basis(const SnapshotSet& s, Index two_n);

// V = blockdiag(Phi, Phi) with Phi the leading n left singular vectors of the
// N-row matrix [Q | P] built from the snapshot halves. two_n must be even.
SymplecticBasis cotangent_lift_basis(const SnapshotSet& s, Index two_n);

enum class LinearRomKind { SG, G, LSPG };
std::string to_string(LinearRomKind kind);

// Linear reduced model x~ = x_ref + V x_r with implicit midpoint stepping.
// SG and G reduce to x_r' = M x_r + c; LSPG minimizes the discrete midpoint
// residual, a single least-squares solve per step.
class LinearRom {
 public:
  LinearRom(const HamiltonianModel& model, SymplecticBasis basis, LinearRomKind kind, Vector x_ref);

  LinearRomKind kind() const { return kind_; }
  const SymplecticBasis& basis() const { return basis_; }
  const Vector& x_ref() const { return x_ref_; }
  Index reduced_dim() const { return basis_.reduced_dim(); }

  // Continuous reduced field (SG and G only).
  Vector field(const Vector& x_r) const;
  const Matrix& reduced_matrix() const { return m_; }
  const Vector& reduced_offset() const { return c_; }

  // One midpoint step. For SG/G, w is the stage velocity; for LSPG it is the
  // equivalent (x_next - x_prev) / dt.
  struct Step {
    Vector x_next;
    Vector w;
    double residual = 0.0;
  };
  Step step(const Vector& x_prev, double dt) const;

  Vector reconstruct(const Vector& x_r) const { return x_ref_ + basis_.V * x_r; }

  RomTrace integrate(const Vector& x_r0, int K, double T) const;

 private:
  void prepare(double dt) const;

  const HamiltonianModel* model_;
  SymplecticBasis basis_;
  LinearRomKind kind_;
  Vector x_ref_;
  Matrix m_;
  Vector c_;
  Matrix jav_;     // J A V
  Vector jaxref_;  // J A x_ref
  // Factorizations cached per step size.
  mutable double cached_dt_ = 0.0;
  mutable std::optional<DenseLu> stage_lu_;
  mutable std::optional<Eigen::ColPivHouseholderQR<Matrix>> lspg_qr_;
  mutable Matrix lspg_rhs_;
};

}  // namespace symmor
