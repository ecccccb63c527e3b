#include "symmor/wave.hpp"

#include <cmath>
#include <stdexcept>

#include "symmor/symplectic.hpp"

namespace symmor {

void WaveConfig::validate() const {
  if (N < 2) throw DimensionError("WaveConfig: N must be >= 2");
  if (K < 1) throw DimensionError("WaveConfig: K must be >= 1");
  if (!(T > 0.0)) throw DimensionError("WaveConfig: T must be positive");
  if (!(mu >= 0.0) || !std::isfinite(mu)) throw DimensionError("WaveConfig: mu must be finite, >= 0");
}

std::vector<std::string> WaveConfig::warnings() const {
  std::vector<std::string> out;
  if (mu < 5.0 / 12.0 - 1e-12 || mu > 5.0 / 6.0 + 1e-12) {
    out.push_back("wave speed mu=" + format_real(mu) + " outside the parameter range [5/12, 5/6]");
  }
  return out;
}

HamiltonianModel::HamiltonianModel(Matrix system_matrix, double mu, Apply fast_apply)
    : a_(std::move(system_matrix)), mu_(mu), fast_apply_(std::move(fast_apply)) {
  if (a_.rows() != a_.cols() || a_.rows() % 2 != 0) {
    throw DimensionError("HamiltonianModel: system matrix must be square of even size");
  }
}

void HamiltonianModel::check(const Vector& x, const char* what) const {
  if (x.size() != a_.rows()) {
    throw DimensionError(std::string(what) + ": expected length " + std::to_string(a_.rows()) +
                         ", got " + std::to_string(x.size()));
  }
}

Vector HamiltonianModel::apply_system(const Vector& x) const {
  check(x, "apply_system");
  if (fast_apply_) return fast_apply_(x);
  return a_ * x;
}

Matrix HamiltonianModel::apply_system(const Matrix& x) const {
  if (x.rows() != a_.rows()) throw DimensionError("apply_system: row count mismatch");
  if (!fast_apply_) return a_ * x;
  Matrix out(x.rows(), x.cols());
  for (Index j = 0; j < x.cols(); ++j) out.col(j) = fast_apply_(x.col(j));
  return out;
}

double HamiltonianModel::hamiltonian(const Vector& x) const {
  return 0.5 * x.dot(apply_system(x));
}

Vector HamiltonianModel::grad_hamiltonian(const Vector& x) const { return apply_system(x); }

Vector HamiltonianModel::vector_field(const Vector& x) const {
  return poisson_apply(half_dim(), apply_system(x));
}

Matrix HamiltonianModel::field_matrix() const { return poisson_apply(half_dim(), a_); }

LinearOperator HamiltonianModel::field_operator() const {
  const Index n = half_dim();
  // (J A)^T y = A^T J^T y = A (-J y) since A is symmetric.
  return LinearOperator{dim(), dim(), [this, n](const Vector& x) { return poisson_apply(n, apply_system(x)); },
                        [this, n](const Vector& y) { return apply_system(poisson_transpose_apply(n, y)); }};
}

double spline_h(double s) {
  if (s >= 0.0 && s <= 1.0) return 1.0 - 1.5 * s * s + 0.75 * s * s * s;
  if (s > 1.0 && s <= 2.0) {
    const double r = 2.0 - s;
    return r * r * r / 4.0;
  }
  return 0.0;
}

double spline_h_derivative(double s) {
  if (s >= 0.0 && s <= 1.0) return -3.0 * s + 2.25 * s * s;
  if (s > 1.0 && s <= 2.0) {
    const double r = 2.0 - s;
    return -0.75 * r * r;
  }
  return 0.0;
}

double pulse_profile(double xi, double mu) {
  const double s = 4.0 / mu * std::abs(xi + 0.5 - 0.5 * mu);
  return spline_h(s);
}

double pulse_slope(double xi, double mu) {
  const double z = xi + 0.5 - 0.5 * mu;
  const double s = 4.0 / mu * std::abs(z);
  const double sign = z > 0.0 ? 1.0 : (z < 0.0 ? -1.0 : 0.0);
  return spline_h_derivative(s) * 4.0 / mu * sign;
}

Vector wave_grid(const WaveConfig& cfg) {
  cfg.validate();
  Vector xi(cfg.N);
  const double h = cfg.dxi();
  for (Index i = 0; i < cfg.N; ++i) xi(i) = static_cast<double>(i + 1) * h - 0.5;
  return xi;
}

Matrix second_difference_matrix(Index n, double dxi) {
  Matrix d = Matrix::Zero(n, n);
  const double w = 1.0 / (dxi * dxi);
  for (Index i = 0; i < n; ++i) {
    d(i, i) = -2.0 * w;
    if (i > 0) d(i, i - 1) = w;
    if (i + 1 < n) d(i, i + 1) = w;
  }
  return d;
}

namespace {

CanonicalState travelling_state(const WaveConfig& cfg, double t) {
  const Vector xi = wave_grid(cfg);
  CanonicalState st;
  st.mu = cfg.mu;
  st.t = t;
  st.x.resize(2 * cfg.N);
  for (Index i = 0; i < cfg.N; ++i) {
    const double shifted = xi(i) - cfg.mu * t;
    st.x(i) = pulse_profile(shifted, cfg.mu);
    st.x(cfg.N + i) = -cfg.mu * pulse_slope(shifted, cfg.mu);
  }
  return st;
}

}  // namespace

CanonicalState initial_state(const WaveConfig& cfg) { return travelling_state(cfg, 0.0); }

HamiltonianModel build_model(const WaveConfig& cfg) {
  cfg.validate();
  const Index n = cfg.N;
  const double mu2 = cfg.mu * cfg.mu;
  Matrix a = Matrix::Zero(2 * n, 2 * n);
  a.topLeftCorner(n, n) = -mu2 * second_difference_matrix(n, cfg.dxi());
  a.bottomRightCorner(n, n).setIdentity();

  const double c = mu2 / (cfg.dxi() * cfg.dxi());
  auto stencil = [n, c](const Vector& x) {
    Vector y(2 * n);
    for (Index i = 0; i < n; ++i) {
      const double left = i > 0 ? x(i - 1) : 0.0;
      const double right = i + 1 < n ? x(i + 1) : 0.0;
      y(i) = c * (2.0 * x(i) - left - right);
    }
    y.tail(n) = x.tail(n);
    return y;
  };
  return HamiltonianModel(std::move(a), cfg.mu, stencil);
}

CanonicalState exact_solution(const WaveConfig& cfg, double t) {
  if (cfg.mu > 0.0 && !(t < 1.0 / cfg.mu - 1.0)) {
    throw std::domain_error("exact_solution: t=" + format_real(t) +
                            " is past the first boundary reflection (t < 1/mu - 1 required)");
  }
  return travelling_state(cfg, t);
}

double lipschitz_constant(const HamiltonianModel& model, double tol) {
  PowerIterationOptions opts;
  opts.tol = tol;
  return spectral_norm(model.field_operator(), opts);
}

}  // namespace symmor
