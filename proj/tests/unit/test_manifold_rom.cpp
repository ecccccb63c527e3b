#include <cmath>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "symmor/manifold_rom.hpp"
#include "symmor/reduction_linear.hpp"
#include "symmor/symplectic.hpp"

using namespace symmor;

namespace {

Vector random_vector(Index n, std::uint64_t seed, double scale = 1.0) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> d(0.0, scale);
  Vector v(n);
  for (Index i = 0; i < n; ++i) v(i) = d(gen);
  return v;
}

struct Fixture {
  WaveConfig cfg;
  HamiltonianModel model;
  Vector x0;
  SnapshotSet snaps;
  Trajectory fom;

  Fixture() : cfg(make_cfg()), model(build_model(cfg)), x0(initial_state(cfg).x) {
    std::vector<std::pair<double, Trajectory>> runs;
    for (double mu : {5.0 / 12.0, 0.70833}) {
      WaveConfig c = cfg;
      c.mu = mu;
      runs.emplace_back(mu, integrate(build_model(c), initial_state(c).x, c.K, c.T, RkTableau::implicit_midpoint()));
    }
    snaps = assemble_snapshots(runs);
    fom = integrate(model, x0, cfg.K, cfg.T, RkTableau::implicit_midpoint());
  }

  static WaveConfig make_cfg() {
    WaveConfig c;
    c.N = 32;
    c.K = 100;
    c.mu = 0.51;
    return c;
  }
};

const Fixture& fixture() {
  static const Fixture f;
  return f;
}

// Small convolutional decoder for a wave state of length 2N = 16.
std::shared_ptr<const Autoencoder> small_network(std::uint64_t seed, Index two_n = 2) {
  ArchitectureSpec arch;
  arch.channels = {2, 2};
  arch.lengths = {8, 4};
  arch.strides = {2};
  arch.hidden_full = {6};
  const auto [enc, dec] = mirrored_specs(arch, 16, two_n);
  auto ae = std::make_shared<Autoencoder>(build_autoencoder(enc, dec, 16, two_n, InitScheme::kaiming_normal, seed));
  ae->params.theta += random_vector(ae->params.size(), seed + 1, 0.2);
  return ae;
}

WaveConfig small_wave() {
  WaveConfig c;
  c.N = 8;
  c.K = 40;
  c.T = 0.2;
  return c;
}

double max_diff(const std::vector<Vector>& a, const std::vector<Vector>& b) {
  REQUIRE(a.size() == b.size());
  double m = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) m = std::max(m, (a[k] - b[k]).norm());
  return m;
}

}  // namespace

TEST_CASE("decoder handles are adjoint and consistent") {
  const Fixture& f = fixture();
  const DecoderHandle lin = linear_decoder(cotangent_lift_basis(f.snaps, 4).V);
  const DecoderHandle net = network_decoder(small_network(3));
  CHECK(lin.source == DecoderSource::linear_basis);
  CHECK(net.source == DecoderSource::network);
  CHECK(lin.initial_reduced() == Vector::Zero(4));
  for (const DecoderHandle* h : {&lin, &net}) {
    for (std::uint64_t s = 0; s < 4; ++s) {
      const Vector xr = random_vector(h->reduced_dim, 10 + s);
      const Vector v = random_vector(h->reduced_dim, 20 + s), w = random_vector(h->full_dim, 30 + s);
      const double lhs = w.dot(h->jvp(xr, v)), rhs = h->vjp(xr, w).dot(v);
      CHECK(std::abs(lhs - rhs) <= 1e-12 * std::max(1.0, std::abs(lhs)));
      CHECK((h->jacobian(xr) * v - h->jvp(xr, v)).norm() <= 1e-12 * (1.0 + h->jvp(xr, v).norm()));
    }
  }
  // Symplectic inverse of the Jacobian against the dense formula.
  const Vector xr = random_vector(2, 40);
  const Vector y = random_vector(16, 41);
  CHECK((net.symplectic_inverse_apply(xr, y) - symplectic_inverse_apply(net.jacobian(xr), y)).norm() <= 1e-12 * y.norm());
}

TEST_CASE("make_setup reproduces the initial state") {
  const Fixture& f = fixture();
  const RomSetup ls = make_setup(linear_decoder(pod_basis(f.snaps, 4).V), f.x0, f.model, RomMethod::MG);
  CHECK(ls.x_ref == f.x0);
  CHECK(ls.x_r0 == Vector::Zero(4));

  const WaveConfig c = small_wave();
  const HamiltonianModel m = build_model(c);
  const Vector x0 = initial_state(c).x;
  const auto ae = small_network(4);
  const RomSetup ns = make_setup(network_decoder(ae), x0, m);
  CHECK((ns.x_r0 - encode(*ae, Vector::Zero(16))).norm() == 0.0);
  CHECK((ns.reconstruct(ns.x_r0) - x0).norm() <= 1e-14 * (1.0 + x0.norm()));
  CHECK(std::abs(m.hamiltonian(ns.reconstruct(ns.x_r0)) - m.hamiltonian(x0)) <= 1e-12 * (1.0 + m.hamiltonian(x0)));

  CHECK_THROWS_AS(make_setup(network_decoder(ae), f.x0, f.model), DimensionError);
  CHECK_THROWS_AS(make_setup(linear_decoder(pod_basis(f.snaps, 3).V), f.x0, f.model, RomMethod::SMG), DimensionError);
}

TEST_CASE("smg_field") {
  const Fixture& f = fixture();
  const SymplecticBasis cl = cotangent_lift_basis(f.snaps, 4);
  const RomSetup ls = make_setup(linear_decoder(cl.V), f.x0, f.model);
  const LinearRom sg(f.model, cl, LinearRomKind::SG, f.x0);
  for (std::uint64_t s = 0; s < 3; ++s) {
    const Vector xr = random_vector(4, 50 + s, 0.3);
    CHECK((smg_field(ls, xr) - sg.field(xr)).norm() <= 1e-12 * (1.0 + sg.field(xr).norm()));
  }

  // J grad H_r with H_r(x_r) = H(x_ref + d(x_r)).
  const WaveConfig c = small_wave();
  const HamiltonianModel m = build_model(c);
  const RomSetup ns = make_setup(network_decoder(small_network(5)), initial_state(c).x, m);
  const auto hr = [&](const Vector& y) { return m.hamiltonian(ns.reconstruct(y)); };
  for (std::uint64_t s = 0; s < 3; ++s) {
    const Vector xr = ns.x_r0 + random_vector(2, 60 + s, 0.2);
    const Vector expected = poisson_apply(1, oracle::fd_gradient(hr, xr, 1e-6));
    CHECK((smg_field(ns, xr) - expected).norm() <= 1e-6 * (1.0 + expected.norm()));
  }

  // A state at rest with zero gradient gives a zero field.
  HamiltonianModel zero = m;
  const Vector zx = Vector::Zero(16);
  const RomSetup zs = make_setup(linear_decoder(Matrix::Identity(16, 2)), zx, m);
  CHECK(smg_field(zs, Vector::Zero(2)).norm() == 0.0);
}

TEST_CASE("mg_field") {
  const Fixture& f = fixture();
  const Matrix JA = oracle::poisson(f.cfg.N) * f.model.system_matrix();
  for (const Matrix& V : {pod_basis(f.snaps, 4).V, cotangent_lift_basis(f.snaps, 4).V}) {
    const RomSetup s = make_setup(linear_decoder(V), f.x0, f.model, RomMethod::MG);
    const Vector xr = random_vector(4, 70, 0.3);
    const Vector expected = V.transpose() * JA * (f.x0 + V * xr);
    CHECK((mg_field(s, xr) - expected).norm() <= 1e-11 * (1.0 + expected.norm()));
  }

  const WaveConfig c = small_wave();
  const HamiltonianModel m = build_model(c);
  const RomSetup ns = make_setup(network_decoder(small_network(6)), initial_state(c).x, m, RomMethod::MG);
  const Vector xr = ns.x_r0 + random_vector(2, 71, 0.1);
  const Matrix dd = ns.decoder.jacobian(xr);
  const Vector xh = poisson_apply(c.N, m.grad_hamiltonian(ns.reconstruct(xr)));
  const Vector expected = (dd.transpose() * dd).fullPivLu().solve(dd.transpose() * xh);
  CHECK((mg_field(ns, xr) - expected).norm() <= 1e-10 * (1.0 + expected.norm()));

  Matrix rank_def = Matrix::Zero(64, 2);
  rank_def(0, 0) = rank_def(0, 1) = 1.0;
  const RomSetup bad = make_setup(linear_decoder(rank_def), f.x0, f.model, RomMethod::MG);
  CHECK_THROWS_AS(mg_field(bad, Vector::Zero(2)), RankDeficiencyError);
}

TEST_CASE("single steps with linear decoders") {
  const Fixture& f = fixture();
  const double dt = f.cfg.dt();
  const Vector xr = random_vector(4, 80, 0.2);
  const SymplecticBasis cl = cotangent_lift_basis(f.snaps, 4);
  const SymplecticBasis pod = pod_basis(f.snaps, 4);

  const RomStep smg = smg_step(make_setup(linear_decoder(cl.V), f.x0, f.model), xr, dt);
  const LinearRom::Step sg = LinearRom(f.model, cl, LinearRomKind::SG, f.x0).step(xr, dt);
  CHECK(smg.converged);
  CHECK((smg.x_next - sg.x_next).norm() <= 1e-12 * (1.0 + sg.x_next.norm()));

  const RomStep mg = mg_step(make_setup(linear_decoder(pod.V), f.x0, f.model, RomMethod::MG), xr, dt);
  const LinearRom::Step g = LinearRom(f.model, pod, LinearRomKind::G, f.x0).step(xr, dt);
  CHECK((mg.x_next - g.x_next).norm() <= 1e-12 * (1.0 + g.x_next.norm()));

  const RomStep ml = mlspg_step(make_setup(linear_decoder(pod.V), f.x0, f.model, RomMethod::MLSPG), xr, dt);
  const LinearRom::Step l = LinearRom(f.model, pod, LinearRomKind::LSPG, f.x0).step(xr, dt);
  CHECK(ml.converged);
  CHECK((ml.x_next - l.x_next).norm() <= 1e-10 * (1.0 + l.x_next.norm()));
}

TEST_CASE("zero field leaves the reduced state unchanged") {
  WaveConfig c = small_wave();
  const HamiltonianModel m = build_model(c);
  const auto ae = small_network(7);
  const Vector zero = Vector::Zero(16);
  for (RomMethod method : {RomMethod::SMG, RomMethod::MG, RomMethod::MLSPG}) {
    // x_ref = -d(x_r0) places the initial reconstruction at the origin, where grad H = 0.
    const RomSetup s = make_setup(network_decoder(ae), zero, m, method);
    const RomStep st = rom_step(s, s.x_r0, 0.01, NewtonOptions::reduced_order());
    CHECK(st.converged);
    CHECK((st.x_next - s.x_r0).norm() <= 1e-12);
  }
}

TEST_CASE("network steps converge and report diagnostics") {
  const WaveConfig c = small_wave();
  const HamiltonianModel m = build_model(c);
  const Vector x0 = initial_state(c).x;
  const auto ae = small_network(8);
  for (RomMethod method : {RomMethod::SMG, RomMethod::MG, RomMethod::MLSPG}) {
    const RomSetup s = make_setup(network_decoder(ae), x0, m, method);
    const RomTrace t = integrate_rom(s, c.K, c.T);
    CHECK(t.converged);
    CHECK(t.steps() == c.K);
    CHECK(t.method == to_string(method));
    for (std::size_t k = 0; k < t.iterations.size(); ++k) {
      CHECK(t.iterations[k] <= 15);
      CHECK(t.residual_norms[k] <= 1e-8);
      CHECK((t.reconstructed[k] - s.reconstruct(t.reduced_states[k])).norm() == 0.0);
    }
    if (method == RomMethod::SMG) {
      // The stage velocity satisfies its own midpoint equation.
      const Vector& w = t.stage_velocities[3][0];
      const Vector xm = t.reduced_states[3] + 0.5 * c.dt() * w;
      CHECK((w - smg_field(s, xm)).norm() <= 1e-8);
      CHECK((t.reduced_states[4] - t.reduced_states[3] - c.dt() * w).norm() <= 1e-14 * (1.0 + w.norm()));
    }
  }
}

TEST_CASE("failure bookkeeping") {
  const WaveConfig c = small_wave();
  const HamiltonianModel m = build_model(c);
  const RomSetup s = make_setup(network_decoder(small_network(9)), initial_state(c).x, m);
  const RomTrace t = integrate_rom(s, 4, 2.0, NewtonOptions{1e-14, 0.0, 1});
  CHECK_FALSE(t.converged);
  CHECK(t.failed_step == 1);
  CHECK(t.steps() == 0);
  CHECK(t.iterations.size() == 1);
  CHECK(t.residual_norms.back() > 1e-14);

  const RomTrace none = integrate_rom(s, 0, 1.0);
  CHECK(none.converged);
  CHECK(none.steps() == 0);
  CHECK(none.reconstructed.size() == 1);
  CHECK_THROWS_AS(integrate_rom(s, 4, 1.0, NewtonOptions{1e-8, 0.0, 0}), DimensionError);
}

TEST_CASE("manifold methods with linear decoders equal their linear counterparts") {
  const Fixture& f = fixture();
  const double scale = f.x0.norm();
  const SymplecticBasis cl = cotangent_lift_basis(f.snaps, 6);
  const SymplecticBasis pod = pod_basis(f.snaps, 6);
  const std::tuple<RomMethod, LinearRomKind, const SymplecticBasis*> cases[] = {
      {RomMethod::SMG, LinearRomKind::SG, &cl},
      {RomMethod::MG, LinearRomKind::G, &pod},
      {RomMethod::MLSPG, LinearRomKind::LSPG, &pod},
  };
  for (const auto& [method, kind, basis] : cases) {
    const RomTrace nl = integrate_rom(make_setup(linear_decoder(basis->V), f.x0, f.model, method), f.cfg.K, f.cfg.T);
    const RomTrace li = LinearRom(f.model, *basis, kind, f.x0).integrate(Vector::Zero(6), f.cfg.K, f.cfg.T);
    REQUIRE(nl.converged);
    REQUIRE(li.converged);
    CHECK(max_diff(nl.reconstructed, li.reconstructed) <= 1e-9 * scale);
  }
}

TEST_CASE("SMG Hamiltonian drift is second order in the step size") {
  const WaveConfig c = small_wave();
  const HamiltonianModel m = build_model(c);
  const RomSetup s = make_setup(network_decoder(small_network(11)), initial_state(c).x, m);
  const NewtonOptions tight{1e-13, 0.0, 30};
  std::vector<double> drift;
  for (int K : {100, 200, 400, 800, 1600, 3200}) {
    const RomTrace t = integrate_rom(s, K, 0.1, tight);
    REQUIRE(t.converged);
    double d = 0.0;
    const double h0 = m.hamiltonian(t.reconstructed[0]);
    for (const auto& x : t.reconstructed) d = std::max(d, std::abs(m.hamiltonian(x) - h0));
    drift.push_back(d);
  }
  // ELU has a jump in its second derivative, so single halvings scatter
  // around 4; the mean rate over five halvings is sharp.
  for (std::size_t i = 0; i + 1 < drift.size(); ++i) CHECK(drift[i] / drift[i + 1] > 2.0);
  const double mean_ratio = std::pow(drift.front() / drift.back(), 1.0 / static_cast<double>(drift.size() - 1));
  CHECK(mean_ratio == doctest::Approx(4.0).epsilon(0.15));
}
