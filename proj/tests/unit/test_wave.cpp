#include <cmath>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "symmor/wave.hpp"

using namespace symmor;

namespace {

const double kPi = std::acos(-1.0);

WaveConfig config(Index n, double mu) {
  WaveConfig c;
  c.N = n;
  c.mu = mu;
  return c;
}

// d/dxi h(4/mu |xi + 1/2 - mu/2|), differentiated by hand branch by branch.
double slope_oracle(double xi, double mu) {
  const double z = xi + 0.5 - 0.5 * mu;
  const double s = 4.0 / mu * std::abs(z);
  const double ds = z > 0 ? 4.0 / mu : -4.0 / mu;
  if (s <= 1.0) return (-3.0 * s + 2.25 * s * s) * ds;
  if (s <= 2.0) return -0.75 * (2.0 - s) * (2.0 - s) * ds;
  return 0.0;
}

double curvature_oracle(double xi, double mu) {
  const double z = xi + 0.5 - 0.5 * mu;
  const double s = 4.0 / mu * std::abs(z);
  const double ds2 = 16.0 / (mu * mu);
  if (s <= 1.0) return (-3.0 + 4.5 * s) * ds2;
  if (s <= 2.0) return 1.5 * (2.0 - s) * ds2;
  return 0.0;
}

}  // namespace

TEST_CASE("spline_h branches") {
  CHECK(spline_h(0.0) == 1.0);
  CHECK(spline_h(1.0) == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(spline_h(std::nextafter(1.0, 2.0)) == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(spline_h(2.0) == 0.0);
  CHECK(spline_h(3.0) == 0.0);
  for (double s = 0.0; s < 3.0; s += 0.0625) CHECK(spline_h(s) == doctest::Approx(oracle::spline(s)).epsilon(1e-15));
  // Derivative against central differences away from the knots.
  for (double s : {0.3, 0.7, 1.4, 1.9}) {
    const double fd = (spline_h(s + 1e-6) - spline_h(s - 1e-6)) / 2e-6;
    CHECK(spline_h_derivative(s) == doctest::Approx(fd).epsilon(1e-8));
  }
}

TEST_CASE("initial_state fixtures") {
  // N + 1 even places a node exactly at the pulse centre -1/2 + mu/2 for mu = 1/2.
  const WaveConfig c = config(7, 0.5);
  const Vector xi = wave_grid(c);
  const CanonicalState st = initial_state(c);
  REQUIRE(st.x.size() == 14);
  bool found_centre = false;
  for (Index i = 0; i < c.N; ++i) {
    if (std::abs(xi(i) - (-0.5 + 0.25)) < 1e-15) {
      found_centre = true;
      CHECK(st.x(i) == doctest::Approx(1.0).epsilon(1e-14));
    }
    if (xi(i) < -0.5 || xi(i) > 0.0) {
      CHECK(st.x(i) == 0.0);
      CHECK(st.x(c.N + i) == 0.0);
    }
  }
  CHECK(found_centre);
}

TEST_CASE("initial_state matches the hand-differentiated pulse") {
  const WaveConfig c = config(8, 0.5);
  const Vector xi = wave_grid(c);
  const CanonicalState st = initial_state(c);
  for (Index i = 0; i < c.N; ++i) {
    const double s = 4.0 / c.mu * std::abs(xi(i) + 0.5 - 0.5 * c.mu);
    CHECK(std::abs(st.x(i) - oracle::spline(s)) <= 1e-12);
    CHECK(std::abs(st.x(c.N + i) + c.mu * slope_oracle(xi(i), c.mu)) <= 1e-12);
  }
}

TEST_CASE("initial momentum matches a central difference of q to second order") {
  double prev = 0.0;
  for (Index n : {63, 127, 255, 511}) {
    const WaveConfig c = config(n, 5.0 / 12.0);
    const Vector x = initial_state(c).x;
    const double h = c.dxi();
    double err = 0.0;
    for (Index i = 1; i + 1 < n; ++i) {
      const double fd = -c.mu * (x(i + 1) - x(i - 1)) / (2.0 * h);
      err = std::max(err, std::abs(x(n + i) - fd));
    }
    if (prev > 0.0) CHECK(prev / err == doctest::Approx(4.0).epsilon(0.25));
    prev = err;
  }
}

TEST_CASE("build_model stencil and symmetry") {
  const WaveConfig c = config(3, 0.5);
  const Matrix d = second_difference_matrix(3, c.dxi());
  const double w = 1.0 / (c.dxi() * c.dxi());
  CHECK(d(1, 0) == w);
  CHECK(d(1, 1) == -2.0 * w);
  CHECK(d(1, 2) == w);
  CHECK((d - oracle::laplacian(3, c.dxi())).norm() == 0.0);

  const HamiltonianModel m = build_model(config(16, 0.6));
  CHECK((m.system_matrix() - m.system_matrix().transpose()).norm() == 0.0);
  Matrix a_ref = Matrix::Zero(32, 32);
  a_ref.topLeftCorner(16, 16) = -0.36 * oracle::laplacian(16, 1.0 / 17.0);
  a_ref.bottomRightCorner(16, 16).setIdentity();
  CHECK((m.system_matrix() - a_ref).norm() <= 1e-12 * a_ref.norm());
  // The structured apply agrees with the dense product.
  std::mt19937_64 gen(5);
  std::normal_distribution<double> nd;
  Vector x(32);
  for (Index i = 0; i < 32; ++i) x(i) = nd(gen);
  CHECK((m.apply_system(x) - a_ref * x).norm() <= 1e-12 * (a_ref * x).norm());
}

TEST_CASE("discrete Hamiltonian converges to the continuous energy") {
  // E = mu^2 int (u0')^2 dxi; the grid energy is dxi * H.
  const double mu = 0.5;
  double exact = 0.0;
  const int fine = 400000;
  for (int i = 0; i < fine; ++i) {
    const double xi = -0.5 + (i + 0.5) / fine;
    exact += mu * mu * std::pow(slope_oracle(xi, mu), 2) / fine;
  }
  double prev = 0.0;
  for (Index n : {8, 16, 32, 64}) {
    const WaveConfig c = config(n, mu);
    const double e = c.dxi() * build_model(c).hamiltonian(initial_state(c).x);
    const double err = std::abs(e - exact);
    CHECK(err <= 20.0 * c.dxi() * c.dxi() * exact);
    if (prev > 0.0) CHECK(prev / err > 2.5);
    prev = err;
  }
}

TEST_CASE("hamiltonian, gradient and field") {
  const WaveConfig c = config(10, 0.55);
  const HamiltonianModel m = build_model(c);
  const Matrix a = m.system_matrix();
  CHECK(m.hamiltonian(Vector::Zero(20)) == 0.0);
  CHECK(m.grad_hamiltonian(Vector::Zero(20)).norm() == 0.0);
  CHECK(m.vector_field(Vector::Zero(20)).norm() == 0.0);
  Vector e1 = Vector::Zero(20);
  e1(0) = 1.0;
  CHECK(m.hamiltonian(e1) == doctest::Approx(0.5 * a(0, 0)).epsilon(1e-15));
  CHECK_THROWS_AS(m.hamiltonian(Vector::Zero(3)), DimensionError);

  std::mt19937_64 gen(17);
  std::normal_distribution<double> nd;
  for (int trial = 0; trial < 20; ++trial) {
    Vector x(20);
    for (Index i = 0; i < 20; ++i) x(i) = nd(gen);
    CHECK(m.hamiltonian(x) == doctest::Approx(0.5 * x.dot(a * x)).epsilon(1e-13));
    const Vector g = m.grad_hamiltonian(x), f = m.vector_field(x);
    CHECK((m.grad_hamiltonian(2.0 * x) - 2.0 * g).norm() <= 1e-12 * g.norm());
    CHECK(std::abs(g.dot(f)) <= 1e-12 * g.norm() * f.norm());
    CHECK((f - oracle::poisson(10) * a * x).norm() <= 1e-12 * f.norm());
    const Vector fd = oracle::fd_gradient([&](const Vector& y) { return m.hamiltonian(y); }, x, 1e-6);
    CHECK((fd - g).norm() <= 1e-6 * g.norm());
  }
}

TEST_CASE("exact_solution") {
  const WaveConfig c = config(200, 5.0 / 12.0);
  CHECK((exact_solution(c, 0.0).x - initial_state(c).x).norm() == 0.0);
  // Translating by mu t = k dxi moves the samples by exactly k nodes.
  const double t = 10.0 * c.dxi() / c.mu;
  const Vector x0 = initial_state(c).x, xt = exact_solution(c, t).x;
  for (Index i = 10; i < c.N; ++i) {
    CHECK(xt(i) == doctest::Approx(x0(i - 10)).epsilon(1e-9));
    CHECK(xt(c.N + i) == doctest::Approx(x0(c.N + i - 10)).epsilon(1e-9));
  }
  CHECK_THROWS_AS(exact_solution(c, 1.0 / c.mu - 1.0), std::domain_error);
  CHECK_NOTHROW(exact_solution(c, 0.5));
}

TEST_CASE("exact_solution satisfies the semi-discrete PDE") {
  // q_tt = mu^2 u0''(xi - mu t) against mu^2 D q. The pulse is C^2 with jumps
  // in the third derivative at the knots, so the grid-weighted L2 residual
  // decays like dxi^1.5 at worst, and erratically since the knots move
  // relative to the grid. Checked over three halvings.
  std::vector<double> errs;
  for (Index n : {127, 255, 511, 1023}) {
    const WaveConfig c = config(n, 0.5);
    const HamiltonianModel m = build_model(c);
    const double t = 0.3;
    const Vector xi = wave_grid(c);
    Vector q_tt(n);
    for (Index i = 0; i < n; ++i) q_tt(i) = c.mu * c.mu * curvature_oracle(xi(i) - c.mu * t, c.mu);
    const Vector rhs = -m.apply_system(exact_solution(c, t).x).head(n);
    const double err = std::sqrt(c.dxi()) * (q_tt - rhs).norm();
    errs.push_back(err);
  }
  CHECK(errs.front() / errs.back() > std::pow(8.0, 1.5));
  // The momentum is the time derivative of q.
  const WaveConfig c = config(255, 0.5);
  const double t = 0.2, dt = 1e-6;
  const Vector q_t = (exact_solution(c, t + dt).x.head(255) - exact_solution(c, t - dt).x.head(255)) / (2.0 * dt);
  CHECK((q_t - exact_solution(c, t).x.tail(255)).lpNorm<Eigen::Infinity>() <= 1e-6);
}

TEST_CASE("lipschitz_constant") {
  CHECK(lipschitz_constant(build_model(config(6, 0.0))) == doctest::Approx(1.0).epsilon(1e-10));
  const HamiltonianModel m8 = build_model(config(8, 0.5));
  const double ref = oracle::gram_singular_values(m8.field_matrix())(0);
  CHECK(std::abs(lipschitz_constant(m8) - ref) <= 1e-8 * ref);
  // ||J A||_2 = mu^2 * lambda_max(-D) = (2 mu / dxi)^2 sin^2(N pi / (2 (N + 1))).
  for (Index n : {32, 64}) {
    const WaveConfig c = config(n, 5.0 / 12.0);
    const double sinv = std::sin(n * kPi / (2.0 * (n + 1)));
    const double formula = std::pow(2.0 * c.mu / c.dxi() * sinv, 2);
    CHECK(lipschitz_constant(build_model(c)) == doctest::Approx(formula).epsilon(1e-7));
  }
}

TEST_CASE("config validation") {
  WaveConfig c;
  c.N = 1;
  CHECK_THROWS_AS(c.validate(), DimensionError);
  c = WaveConfig{};
  c.K = 0;
  CHECK_THROWS_AS(c.validate(), DimensionError);
  c = WaveConfig{};
  c.mu = 0.3;
  CHECK(c.warnings().size() == 1);
  c.mu = 5.0 / 12.0;
  CHECK(c.warnings().empty());
}
