#include <cmath>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "symmor/analysis.hpp"
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

// N = 64 with dt below 2 / kappa, where the bound applies.
struct Fixture {
  WaveConfig cfg;
  HamiltonianModel model;
  Vector x0;
  Trajectory fom;
  SnapshotSet snaps;
  double kappa = 0.0;

  Fixture() : cfg(make_cfg()), model(build_model(cfg)), x0(initial_state(cfg).x) {
    const NewtonOptions tight{1e-13, 1e-14, 30};
    fom = integrate(model, x0, cfg.K, cfg.T, RkTableau::implicit_midpoint(), tight);
    std::vector<std::pair<double, Trajectory>> runs;
    for (double mu : {0.45, 0.6}) {
      WaveConfig c = cfg;
      c.mu = mu;
      runs.emplace_back(mu, integrate(build_model(c), initial_state(c).x, c.K, c.T, RkTableau::implicit_midpoint()));
    }
    snaps = assemble_snapshots(runs);
    kappa = lipschitz_constant(model);
  }

  static WaveConfig make_cfg() {
    WaveConfig c;
    c.N = 64;
    c.K = 400;
    c.T = 0.1;
    c.mu = 0.51;
    return c;
  }
};

const Fixture& fixture() {
  static const Fixture f;
  return f;
}

std::shared_ptr<const Autoencoder> network(std::uint64_t seed) {
  ArchitectureSpec arch;
  arch.channels = {2, 4};
  arch.lengths = {64, 16};
  arch.strides = {4};
  arch.hidden_full = {8};
  const auto [enc, dec] = mirrored_specs(arch, 128, 2);
  auto ae = std::make_shared<Autoencoder>(build_autoencoder(enc, dec, 128, 2, InitScheme::kaiming_normal, seed));
  ae->params.theta += random_vector(ae->params.size(), seed + 1, 0.05);
  return ae;
}

std::vector<double> state_errors(const std::vector<Vector>& fom, const RomTrace& rom) {
  std::vector<double> e;
  for (std::size_t k = 0; k < rom.reconstructed.size(); ++k) e.push_back((fom[k] - rom.reconstructed[k]).norm());
  return e;
}

}  // namespace

TEST_CASE("bound_conditions") {
  const RkTableau mid = RkTableau::implicit_midpoint();
  BoundConditions bc = bound_conditions(2.0, 0.5, mid);
  CHECK(bc.valid);
  CHECK(bc.D(0, 0) == 0.5);
  CHECK(bc.D_inv(0, 0) == 2.0);
  bc = bound_conditions(4.0, 0.5, mid);
  CHECK_FALSE(bc.valid);
  CHECK(bc.D(0, 0) == 0.0);
  CHECK_FALSE(bc.reason.empty());
  CHECK_FALSE(bound_conditions(5.0, 0.5, mid).valid);

  const RkTableau g2 = RkTableau::gauss2();
  for (double kdt : {0.1, 0.5, 1.0}) {
    const BoundConditions b = bound_conditions(kdt, 1.0, g2);
    const Matrix d = Matrix::Identity(2, 2) - kdt * g2.a.cwiseAbs();
    CHECK((b.D - d).norm() <= 1e-15);
    if (b.valid) CHECK((b.D_inv - d.fullPivLu().inverse()).norm() <= 1e-13);
    CHECK(b.valid == (d.fullPivLu().inverse().minCoeff() >= 0.0));
  }
  CHECK_THROWS_AS(bound_conditions(0.0, 0.1, mid), DimensionError);
}

TEST_CASE("error_bound recursion") {
  const RkTableau mid = RkTableau::implicit_midpoint();
  std::vector<StepResiduals> zero(10, StepResiduals{{0.0}, 0.0});
  const BoundTrace z = error_bound_from_residuals(3.0, 0.1, mid, zero, 0.0);
  CHECK(z.valid);
  for (double b : z.bound) CHECK(b == 0.0);
  // Midpoint: c1 = 1 + kappa dt / (1 - kappa dt / 2).
  CHECK(z.c1 == doctest::Approx(1.0 + 0.3 / 0.85).epsilon(1e-14));

  std::vector<StepResiduals> res;
  for (int k = 0; k < 10; ++k) res.push_back({{0.1 * (k + 1)}, 0.01 * k});
  const BoundTrace base = error_bound_from_residuals(3.0, 0.1, mid, res, 0.2);
  double b = 0.2;
  for (int k = 0; k < 10; ++k) {
    b = base.c1 * b + 0.1 * res[k].stage[0] / 0.85 + res[k].update;
    CHECK(base.bound[k + 1] == doctest::Approx(b).epsilon(1e-14));
  }
  for (std::size_t k = 1; k < base.bound.size(); ++k) CHECK(base.bound[k] >= base.bound[k - 1]);

  // Raising any single residual never lowers any bound entry.
  for (int k = 0; k < 10; k += 3) {
    for (int which = 0; which < 2; ++which) {
      auto r = res;
      (which == 0 ? r[k].stage[0] : r[k].update) += 0.5;
      const BoundTrace up = error_bound_from_residuals(3.0, 0.1, mid, r, 0.2);
      for (std::size_t j = 0; j < up.bound.size(); ++j) CHECK(up.bound[j] >= base.bound[j]);
    }
  }
  CHECK_THROWS_AS(error_bound_from_residuals(30.0, 0.1, mid, res, 0.0), StructureError);
}

TEST_CASE("reconstructed residuals") {
  const Fixture& f = fixture();
  const double dt = f.cfg.dt();
  const RkTableau mid = RkTableau::implicit_midpoint();
  const NewtonOptions tight{1e-12, 0.0, 30};

  // The full model reduced with the identity embedding.
  const DecoderHandle id = linear_decoder(Matrix::Identity(128, 128));
  const RomTrace full = integrate_rom(make_setup(id, f.x0, f.model), 50, 50 * dt, tight);
  REQUIRE(full.converged);
  for (int k = 1; k <= 50; k += 7) {
    const StepResiduals r = reconstructed_residuals(f.model, id, full, mid, dt, k);
    CHECK(r.stage[0] <= 1e-11);
    CHECK(r.update <= 1e-12 * f.x0.norm());
  }
  const BoundTrace fb = error_bound(f.model, id, full, mid, dt, f.kappa, f.x0);
  CHECK(fb.bound.front() == 0.0);
  CHECK(fb.bound.back() <= 50 * 1e-11 * dt * std::pow(fb.c1, 50) * 2.0);

  // Linear decoder: the update residual vanishes.
  const DecoderHandle lin = linear_decoder(cotangent_lift_basis(f.snaps, 4).V);
  const RomTrace lt = integrate_rom(make_setup(lin, f.x0, f.model), f.cfg.K, f.cfg.T);
  REQUIRE(lt.converged);
  for (int k = 1; k <= f.cfg.K; ++k) CHECK(reconstructed_residuals(f.model, lin, lt, mid, dt, k).update <= 1e-12);

  // Network decoder against a dense recomputation.
  const DecoderHandle net = network_decoder(network(3));
  const RomTrace nt = integrate_rom(make_setup(net, f.x0, f.model), 20, 20 * dt);
  REQUIRE(nt.converged);
  const Matrix JA = oracle::poisson(64) * f.model.system_matrix();
  for (int k = 1; k <= 20; k += 4) {
    const Matrix dd = net.jacobian(nt.reduced_states[k - 1]);
    const Vector wt = dd * nt.stage_velocities[k - 1][0];
    const Vector& xp = nt.reconstructed[k - 1];
    const double stage = (wt - JA * (xp + 0.5 * dt * wt)).norm();
    const double update = (nt.reconstructed[k] - xp - dt * wt).norm();
    const StepResiduals r = reconstructed_residuals(f.model, net, nt, mid, dt, k);
    CHECK(r.stage[0] == doctest::Approx(stage).epsilon(1e-9));
    CHECK(r.update == doctest::Approx(update).epsilon(1e-9));
  }

  RomTrace no_stages = lt;
  no_stages.stage_velocities.clear();
  CHECK_THROWS_AS(reconstructed_residuals(f.model, lin, no_stages, mid, dt, 1), DimensionError);
}

TEST_CASE("the bound dominates the true error") {
  const Fixture& f = fixture();
  const double dt = f.cfg.dt();
  const RkTableau mid = RkTableau::implicit_midpoint();
  REQUIRE(bound_conditions(f.kappa, dt, mid).valid);
  CHECK(f.kappa * dt > 0.5);

  const DecoderHandle lin = linear_decoder(cotangent_lift_basis(f.snaps, 4).V);
  const DecoderHandle net = network_decoder(network(5));
  for (const DecoderHandle* h : {&lin, &net}) {
    const RomTrace t = integrate_rom(make_setup(*h, f.x0, f.model), f.cfg.K, f.cfg.T);
    REQUIRE(t.converged);
    const BoundTrace bt = error_bound(f.model, *h, t, mid, dt, f.kappa, f.x0);
    const std::vector<double> err = state_errors(f.fom.states, t);
    REQUIRE(bt.bound.size() == err.size());
    int violations = 0;
    for (std::size_t k = 0; k < err.size(); ++k) violations += bt.bound[k] < err[k];
    CHECK(violations == 0);
    CHECK(err.back() > 0.0);
  }
}

TEST_CASE("projection and reduction errors") {
  const Fixture& f = fixture();
  const std::vector<Vector>& x = f.fom.states;
  CHECK(proj_error(x, [](const Vector& v) { return v; }) == 0.0);
  RomTrace same;
  same.reconstructed = x;
  CHECK(red_error(x, same) == 0.0);

  // A basis spanning all displacements reproduces every state.
  Matrix disp(128, static_cast<Index>(x.size()));
  for (std::size_t k = 0; k < x.size(); ++k) disp.col(static_cast<Index>(k)) = x[k] - x[0];
  SnapshotSet s;
  s.columns = disp;
  const Vector sv = oracle::gram_singular_values(disp);
  Index rank = 0;
  while (rank < disp.rows() && sv(rank) > 1e-6 * sv(0)) ++rank;
  CHECK(proj_error(x, linear_projector(pod_basis(s, rank).V, x[0])) <= 1e-5);

  // POD on its own data: e_proj^2 equals the singular value tail over the energy.
  const Matrix V = pod_basis(s, 4).V;
  const double tail = sv.tail(sv.size() - 4).squaredNorm();
  CHECK(proj_error(x, linear_projector(V, x[0])) == doctest::Approx(std::sqrt(tail / disp.squaredNorm())).epsilon(1e-10));

  // Scale consistency.
  const Matrix W = cotangent_lift_basis(f.snaps, 4).V;
  const RomTrace t = LinearRom(f.model, {W, BasisKind::cotangent_lift}, LinearRomKind::SG, f.x0).integrate(Vector::Zero(4), f.cfg.K, f.cfg.T);
  const double c = 3.7;
  std::vector<Vector> xs;
  for (const auto& v : x) xs.push_back(c * v);
  RomTrace ts = t;
  for (auto& v : ts.reconstructed) v *= c;
  CHECK(proj_error(xs, linear_projector(W, c * f.x0)) == doctest::Approx(proj_error(x, linear_projector(W, f.x0))).epsilon(1e-12));
  CHECK(red_error(xs, ts) == doctest::Approx(red_error(x, t)).epsilon(1e-12));

  RomTrace short_trace = t;
  short_trace.reconstructed.pop_back();
  CHECK_THROWS_AS(red_error(x, short_trace), DimensionError);
  CHECK_THROWS_AS(proj_error(std::vector<Vector>(3, f.x0), linear_projector(W, f.x0)), DimensionError);
}

TEST_CASE("linear reduction error is bounded below by the projection error") {
  const Fixture& f = fixture();
  const SymplecticBasis pod = pod_basis(f.snaps, 4);
  const SymplecticBasis cl = cotangent_lift_basis(f.snaps, 4);
  for (const auto& [kind, basis] : {std::pair{LinearRomKind::G, &pod}, std::pair{LinearRomKind::LSPG, &pod},
                                    std::pair{LinearRomKind::SG, &cl}}) {
    const RomTrace t = LinearRom(f.model, *basis, kind, f.x0).integrate(Vector::Zero(4), f.cfg.K, f.cfg.T);
    REQUIRE(t.converged);
    CHECK(red_error(f.fom.states, t) >= proj_error(f.fom.states, linear_projector(basis->V, f.x0)));
  }
}

TEST_CASE("Hamiltonian and symplecticity traces") {
  const Fixture& f = fixture();
  RomTrace same;
  same.reconstructed = f.fom.states;
  for (double e : hamiltonian_error_trace(f.fom.states, same, f.model)) CHECK(e == 0.0);

  const DecoderHandle net = network_decoder(network(7));
  const RomTrace t = integrate_rom(make_setup(net, f.x0, f.model), 20, 20 * f.cfg.dt());
  const auto he = hamiltonian_error_trace(f.fom.states, t, f.model);
  CHECK(he.size() == 21);
  CHECK(he.front() <= 1e-12 * f.model.hamiltonian(f.x0));
  const auto drift = hamiltonian_drift_trace(t, f.model);
  CHECK(drift.front() == 0.0);
  for (std::size_t k = 0; k < drift.size(); ++k) {
    CHECK(drift[k] == doctest::Approx(std::abs(f.model.hamiltonian(t.reconstructed[k]) - f.model.hamiltonian(t.reconstructed[0]))));
  }

  const auto es = symplecticity_error_trace(t, net);
  for (std::size_t k = 0; k < es.size(); ++k) {
    CHECK(es[k] == doctest::Approx(symplecticity_defect(net.jacobian(t.reduced_states[k]))).epsilon(1e-14));
  }
  const DecoderHandle lin = linear_decoder(cotangent_lift_basis(f.snaps, 4).V);
  const RomTrace lt = integrate_rom(make_setup(lin, f.x0, f.model), 20, 20 * f.cfg.dt());
  for (double e : symplecticity_error_trace(lt, lin)) CHECK(e <= 1e-20);
  const DecoderHandle zero = linear_decoder(Matrix::Zero(128, 2));
  RomTrace zt;
  zt.reduced_states = {Vector::Zero(2), Vector::Ones(2)};
  for (double e : symplecticity_error_trace(zt, zero)) CHECK(e == 0.5);
}

TEST_CASE("convergence_report") {
  const Fixture& f = fixture();
  std::vector<std::pair<RunTag, bool>> all_ok{{{"SG", 2, 0.5}, true}, {{"SMG", 2, 0.5}, true}};
  const ConvergenceReport ok = convergence_report(all_ok);
  CHECK(ok.total.converged == 2);
  CHECK(ok.total.failed == 0);

  RomTrace good, bad;
  bad.converged = false;
  const RomSetup s = make_setup(network_decoder(network(9)), f.x0, f.model);
  const RomTrace forced = integrate_rom(s, 4, 1.0, NewtonOptions{1e-14, 0.0, 1});
  REQUIRE_FALSE(forced.converged);
  const std::vector<std::pair<RunTag, const RomTrace*>> runs{
      {{"SMG", 2, 0.5}, &good}, {{"SMG", 4, 0.5}, &bad}, {{"MG", 2, 0.5}, &forced}, {{"MG", 2, 0.6}, &good}};
  const ConvergenceReport r = convergence_report(runs);
  CHECK(r.total.converged == 2);
  CHECK(r.total.failed == 2);
  CHECK(r.per_method.at("SMG").failed == 1);
  CHECK(r.per_method.at("MG").failed == 1);
  CHECK(r.per_method.at("MG").converged == 1);
  int sum = 0;
  for (const auto& [m, c] : r.per_method) sum += c.converged + c.failed;
  CHECK(sum == static_cast<int>(runs.size()));
}
