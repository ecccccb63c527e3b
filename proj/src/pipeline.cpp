#include "symmor/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>

#include "symmor/analysis.hpp"
#include "symmor/io.hpp"
#include "symmor/manifold_rom.hpp"
#include "symmor/reduction_linear.hpp"

namespace symmor {

namespace {

namespace fs = std::filesystem;

std::string join(const std::string& dir, const std::string& name) { return (fs::path(dir) / name).string(); }

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

void write_run_metadata(const CommandContext& ctx, const std::string& dir, const std::string& command) {
  const auto& c = ctx.config;
  std::ofstream os(join(dir, "run.txt"), std::ios::binary);
  os << "command " << command << "\n"
     << "seed " << c.seed << "\n"
     << "config_digest " << hex64(fnv1a64(c.source_text)) << "\n"
     << "N " << c.wave.N << "\nK " << c.wave.K << "\nT " << format_real(c.wave.T) << "\n";
}

WaveConfig wave_for(const ExperimentConfig& cfg, double mu) {
  WaveConfig w = cfg.wave;
  w.mu = mu;
  return w;
}

std::map<std::string, std::string> trajectory_meta(const WaveConfig& w) {
  return {{"kind", "trajectory"},
          {"mu", format_real(w.mu)},
          {"N", std::to_string(w.N)},
          {"K", std::to_string(w.K)},
          {"T", format_real(w.T)}};
}

std::size_t parameter_index(const ExperimentConfig& cfg, double mu) {
  const auto params = all_parameters(cfg);
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i] == mu) return i;
  }
  throw std::invalid_argument("parameter not in config: " + format_real(mu));
}

std::vector<std::pair<double, Trajectory>> training_runs(const ExperimentConfig& cfg, const std::string& out) {
  std::vector<std::pair<double, Trajectory>> runs;
  for (double mu : cfg.train_mu) runs.emplace_back(mu, load_or_run_fom(cfg, out, mu));
  return runs;
}

struct NetNeeds {
  bool sympl = false;
  bool plain = false;
};

NetNeeds networks_needed(const ExperimentConfig& cfg) {
  NetNeeds n;
  for (const auto& m : cfg.methods) {
    if (m == "SMG") n.sympl = true;
    if (m == "MG" || m == "M-LSPG") n.plain = true;
  }
  return n;
}

}  // namespace

std::string trajectory_path(const std::string& out_dir, std::size_t index) {
  return join(join(out_dir, "fom"), "trajectory_" + std::to_string(index) + ".txt");
}

std::string checkpoint_path(const std::string& dir, const std::string& net, Index two_n) {
  return join(dir, "ae_" + net + "_" + std::to_string(two_n) + ".ckpt");
}

std::vector<double> all_parameters(const ExperimentConfig& cfg) {
  std::vector<double> out;
  for (const auto* list : {&cfg.train_mu, &cfg.test_mu}) {
    for (double mu : *list) {
      if (std::find(out.begin(), out.end(), mu) == out.end()) out.push_back(mu);
    }
  }
  return out;
}

Trajectory load_or_run_fom(const ExperimentConfig& cfg, const std::string& out_dir, double mu) {
  const WaveConfig w = wave_for(cfg, mu);
  const HamiltonianModel model = build_model(w);
  const std::string path = trajectory_path(out_dir, parameter_index(cfg, mu));
  if (file_exists(path)) {
    std::map<std::string, std::string> meta;
    const Matrix m = read_matrix(path, &meta);
    if (meta == trajectory_meta(w) && m.rows() == 2 * w.N && m.cols() == w.K + 1) {
      Trajectory t;
      t.dt = w.dt();
      t.states = columns_of(m);
      for (const auto& x : t.states) t.hamiltonian_trace.push_back(model.hamiltonian(x));
      return t;
    }
  }
  return integrate(model, initial_state(w).x, w.K, w.T, RkTableau::implicit_midpoint(), cfg.fom_newton);
}

void cmd_fom(const CommandContext& ctx) {
  const auto& cfg = ctx.config;
  const std::string dir = join(ctx.out_dir, "fom");
  ensure_directory(dir);
  write_run_metadata(ctx, dir, "fom");
  CsvWriter csv(join(dir, "hamiltonian.csv"), {"method", "two_n", "mu", "k", "metric", "value"});
  const auto params = all_parameters(cfg);
  try {
    for (std::size_t i = 0; i < params.size(); ++i) {
      const WaveConfig w = wave_for(cfg, params[i]);
      const HamiltonianModel model = build_model(w);
      const Trajectory t =
          integrate(model, initial_state(w).x, w.K, w.T, RkTableau::implicit_midpoint(), cfg.fom_newton);
      write_matrix(trajectory_path(ctx.out_dir, i), stack_columns(t.states), trajectory_meta(w));
      for (std::size_t k = 0; k < t.hamiltonian_trace.size(); ++k) {
        csv.row({"FOM", std::to_string(2 * w.N), format_real(w.mu), std::to_string(k), "hamiltonian",
                 format_real(t.hamiltonian_trace[k])});
      }
    }
  } catch (...) {
    csv.close();
    throw;
  }
  csv.close();
}

void cmd_train(const CommandContext& ctx) {
  const auto& cfg = ctx.config;
  const std::string dir = join(ctx.out_dir, "train");
  ensure_directory(dir);
  write_run_metadata(ctx, dir, "train");
  const NetNeeds needs = networks_needed(cfg);
  const Matrix data = assemble_snapshots(training_runs(cfg, ctx.out_dir)).columns;
  const Index full_dim = 2 * cfg.wave.N;

  CsvWriter summary(join(dir, "summary.csv"),
                    {"net", "two_n", "alpha", "epochs", "best_epoch", "best_val_total", "checkpoint_digest"});
  try {
    for (Index two_n : cfg.reduced_dims) {
      for (const std::string net : {"sympl", "plain"}) {
        if ((net == "sympl" && !needs.sympl) || (net == "plain" && !needs.plain)) continue;
        const std::string tag = net + "/" + std::to_string(two_n);
        TrainConfig tc = cfg.train;
        if (net == "plain") tc.alpha = cfg.plain_alpha;
        tc.seed = derive_seed(cfg.seed, "train/" + tag);
        const auto [enc, dec] = mirrored_specs(cfg.arch, full_dim, two_n);
        Autoencoder init = build_autoencoder(enc, dec, full_dim, two_n, tc.init, derive_seed(cfg.seed, "init/" + tag));
        const TrainResult res = train(data, std::move(init), tc);

        const std::string ckpt = checkpoint_path(dir, net, two_n);
        save_checkpoint(res.ae, ckpt);
        CsvWriter hist(join(dir, "history_" + net + "_" + std::to_string(two_n) + ".csv"),
                       {"epoch", "train_data", "train_sympl", "train_total", "val_data", "val_sympl", "val_total"});
        for (const auto& r : res.history) {
          hist.row({std::to_string(r.epoch), format_real(r.train.data), format_real(r.train.sympl),
                    format_real(r.train.total), format_real(r.val.data), format_real(r.val.sympl),
                    format_real(r.val.total)});
        }
        hist.close();
        summary.row({net, std::to_string(two_n), format_real(tc.alpha), std::to_string(tc.epochs),
                     std::to_string(res.best_epoch), format_real(res.history[res.best_epoch].val.total),
                     checkpoint_digest(ckpt)});
      }
    }
  } catch (...) {
    summary.close();
    throw;
  }
  summary.close();
}

namespace {

struct RunOutput {
  RomTrace trace;
  DecoderHandle decoder;
  Projector projector;
};

struct Bases {
  std::map<Index, SymplecticBasis> cl;
  std::map<Index, SymplecticBasis> pod;
};

Bases build_bases(const ExperimentConfig& cfg, const SnapshotSet& s, const std::string& dir) {
  Bases b;
  bool need_cl = false, need_pod = false;
  for (const auto& m : cfg.methods) {
    if (m == "SG" || m == "SMG-CL") need_cl = true;
    if (m == "G" || m == "LSPG") need_pod = true;
  }
  for (Index two_n : cfg.reduced_dims) {
    const auto write = [&](const SymplecticBasis& basis) {
      write_matrix(join(dir, "basis_" + to_string(basis.kind) + "_" + std::to_string(two_n) + ".txt"), basis.V,
                   {{"kind", to_string(basis.kind)},
                    {"two_N", std::to_string(basis.V.rows())},
                    {"two_n", std::to_string(two_n)}});
    };
    if (need_cl) {
      b.cl.emplace(two_n, cotangent_lift_basis(s, two_n));
      write(b.cl.at(two_n));
    }
    if (need_pod) {
      b.pod.emplace(two_n, pod_basis(s, two_n));
      write(b.pod.at(two_n));
    }
  }
  return b;
}

RunOutput run_method(const std::string& method, Index two_n, const HamiltonianModel& model, const Vector& x0,
                     const ExperimentConfig& cfg, const Bases& bases,
                     const std::map<std::pair<std::string, Index>, std::shared_ptr<const Autoencoder>>& nets) {
  const int K = cfg.wave.K;
  const double T = cfg.wave.T;
  RunOutput out;
  if (method == "SG" || method == "G" || method == "LSPG") {
    const SymplecticBasis& basis = (method == "SG") ? bases.cl.at(two_n) : bases.pod.at(two_n);
    const LinearRomKind kind =
        method == "SG" ? LinearRomKind::SG : (method == "G" ? LinearRomKind::G : LinearRomKind::LSPG);
    const LinearRom rom(model, basis, kind, x0);
    out.trace = rom.integrate(Vector::Zero(two_n), K, T);
    out.decoder = linear_decoder(basis.V);
    out.projector = linear_projector(basis.V, x0);
  } else if (method == "SMG-CL") {
    const Matrix& V = bases.cl.at(two_n).V;
    const RomSetup s = make_setup(linear_decoder(V), x0, model, RomMethod::SMG);
    out.trace = integrate_rom(s, K, T, cfg.rom_newton);
    out.decoder = s.decoder;
    out.projector = linear_projector(V, s.x_ref);
  } else {
    const RomMethod m = method == "SMG" ? RomMethod::SMG : (method == "MG" ? RomMethod::MG : RomMethod::MLSPG);
    const auto& ae = nets.at({method == "SMG" ? "sympl" : "plain", two_n});
    const RomSetup s = make_setup(network_decoder(ae), x0, model, m);
    out.trace = integrate_rom(s, K, T, cfg.rom_newton);
    out.decoder = s.decoder;
    out.projector = network_projector(ae, s.x_ref);
  }
  out.trace.method = method;
  return out;
}

}  // namespace

void cmd_rom(const CommandContext& ctx) {
  const auto& cfg = ctx.config;
  const std::string dir = join(ctx.out_dir, "rom");
  ensure_directory(dir);
  write_run_metadata(ctx, dir, "rom");

  const SnapshotSet snapshots = assemble_snapshots(training_runs(cfg, ctx.out_dir));
  const Bases bases = build_bases(cfg, snapshots, dir);

  std::map<std::pair<std::string, Index>, std::shared_ptr<const Autoencoder>> nets;
  const NetNeeds needs = networks_needed(cfg);
  const std::string ckpt_dir = cfg.checkpoint_dir.empty() ? join(ctx.out_dir, "train") : cfg.checkpoint_dir;
  for (Index two_n : cfg.reduced_dims) {
    for (const std::string net : {"sympl", "plain"}) {
      if ((net == "sympl" && !needs.sympl) || (net == "plain" && !needs.plain)) continue;
      const std::string path = checkpoint_path(ckpt_dir, net, two_n);
      if (!file_exists(path)) throw ConfigError("missing checkpoint " + path + " (run the train command first)");
      auto ae = std::make_shared<const Autoencoder>(load_checkpoint(path));
      if (ae->full_dim != 2 * cfg.wave.N || ae->reduced_dim != two_n) {
        throw ConfigError("checkpoint " + path + " does not match the configured dimensions");
      }
      nets[{net, two_n}] = std::move(ae);
    }
  }

  CsvWriter traces(join(dir, "traces.csv"), {"method", "two_n", "mu", "k", "metric", "value"});
  CsvWriter summary(join(dir, "summary.csv"), {"method", "two_n", "mu", "e_proj", "e_red", "converged"});
  const RkTableau tab = RkTableau::implicit_midpoint();
  const double dt = cfg.wave.dt();
  struct TestCase {
    HamiltonianModel model;
    Vector x0;
    Trajectory fom;
    double kappa;
  };
  std::vector<TestCase> cases;
  for (double mu : cfg.test_mu) {
    const WaveConfig w = wave_for(cfg, mu);
    HamiltonianModel model = build_model(w);
    const double kappa = lipschitz_constant(model);
    cases.push_back({std::move(model), initial_state(w).x, load_or_run_fom(cfg, ctx.out_dir, mu), kappa});
  }
  try {
    for (const auto& method : cfg.methods) {
      for (Index two_n : cfg.reduced_dims) {
        for (std::size_t j = 0; j < cfg.test_mu.size(); ++j) {
          const double mu = cfg.test_mu[j];
          const HamiltonianModel& model = cases[j].model;
          const Vector& x0 = cases[j].x0;
          const Trajectory& fom = cases[j].fom;
          const double kappa = cases[j].kappa;
          const RunOutput run = run_method(method, two_n, model, x0, cfg, bases, nets);
          const RomTrace& tr = run.trace;

          const std::string m2 = std::to_string(two_n);
          const std::string mus = format_real(mu);
          const auto emit = [&](const std::string& metric, const std::vector<double>& values) {
            for (std::size_t k = 0; k < values.size(); ++k) {
              traces.row({method, m2, mus, std::to_string(k), metric, format_real(values[k])});
            }
          };
          std::vector<double> state_error;
          for (std::size_t k = 0; k < tr.reconstructed.size(); ++k) {
            state_error.push_back((fom.states[k] - tr.reconstructed[k]).norm());
          }
          emit("state_error", state_error);
          emit("hamiltonian_error", hamiltonian_error_trace(fom.states, tr, model));
          emit("hamiltonian_drift", hamiltonian_drift_trace(tr, model));
          emit("e_symp", symplecticity_error_trace(tr, run.decoder));
          if (bound_conditions(kappa, dt, tab).valid) {
            emit("bound", error_bound(model, run.decoder, tr, tab, dt, kappa, x0).bound);
          }
          summary.row({method, m2, mus, format_real(proj_error(fom.states, run.projector)),
                       tr.converged ? format_real(red_error(fom.states, tr)) : std::string(),
                       tr.converged ? "true" : "false"});
        }
      }
    }
  } catch (...) {
    traces.close();
    summary.close();
    throw;
  }
  traces.close();
  summary.close();
}

void cmd_report(const CommandContext& ctx) {
  const auto& cfg = ctx.config;
  const std::string src = join(join(ctx.out_dir, "rom"), "summary.csv");
  if (!file_exists(src)) throw ConfigError("missing " + src + " (run the rom command first)");
  const CsvTable table = read_csv(src);
  const std::size_t c_method = table.column("method"), c_two_n = table.column("two_n"), c_mu = table.column("mu"),
                    c_proj = table.column("e_proj"), c_red = table.column("e_red"),
                    c_conv = table.column("converged");

  const std::string dir = join(ctx.out_dir, "report");
  ensure_directory(dir);
  write_run_metadata(ctx, dir, "report");

  CsvWriter report(join(dir, "report.csv"), {"method", "two_n", "mu", "e_proj", "e_red", "converged"});
  CsvWriter by_dim(join(dir, "by_two_n.csv"),
                   {"method", "two_n", "mean_e_proj", "mean_e_red", "max_e_red", "converged", "failed"});
  std::vector<std::pair<RunTag, bool>> runs;
  for (const auto& method : cfg.methods) {
    for (Index two_n : cfg.reduced_dims) {
      double sum_proj = 0.0, sum_red = 0.0, max_red = 0.0;
      int n_conv = 0, n_fail = 0;
      for (double mu : cfg.test_mu) {
        const std::string m2 = std::to_string(two_n), mus = format_real(mu);
        const auto it = std::find_if(table.rows.begin(), table.rows.end(), [&](const auto& r) {
          return r[c_method] == method && r[c_two_n] == m2 && r[c_mu] == mus;
        });
        if (it == table.rows.end()) {
          throw ConfigError("rom summary lacks " + method + " 2n=" + m2 + " mu=" + mus + " (rerun the rom command)");
        }
        const auto& r = *it;
        if (r[c_conv] != "true" && r[c_conv] != "false") throw ParseError("bad converged flag '" + r[c_conv] + "'");
        const bool conv = r[c_conv] == "true";
        report.row({method, m2, mus, r[c_proj], conv ? r[c_red] : std::string(), conv ? "true" : "false"});
        runs.push_back({RunTag{method, two_n, mu}, conv});
        sum_proj += std::stod(r[c_proj]);
        if (conv) {
          const double e = std::stod(r[c_red]);
          sum_red += e;
          max_red = std::max(max_red, e);
          ++n_conv;
        } else {
          ++n_fail;
        }
      }
      const double count = static_cast<double>(cfg.test_mu.size());
      by_dim.row({method, std::to_string(two_n), format_real(sum_proj / count),
                  n_conv ? format_real(sum_red / n_conv) : std::string(), n_conv ? format_real(max_red) : std::string(),
                  std::to_string(n_conv), std::to_string(n_fail)});
    }
  }
  report.close();
  by_dim.close();

  const ConvergenceReport conv = convergence_report(runs);
  CsvWriter tally(join(dir, "report_convergence.csv"), {"method", "converged", "failed"});
  for (const auto& method : cfg.methods) {
    const auto it = conv.per_method.find(method);
    const ConvergenceCounts c = it == conv.per_method.end() ? ConvergenceCounts{} : it->second;
    tally.row({method, std::to_string(c.converged), std::to_string(c.failed)});
  }
  tally.row({"all", std::to_string(conv.total.converged), std::to_string(conv.total.failed)});
  tally.close();
}

}  // namespace symmor
