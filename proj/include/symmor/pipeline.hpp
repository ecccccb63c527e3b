#pragma once

// Experiment commands. Each writes into <out>/<command>/ and is
// deterministic under a fixed config: re-running yields byte-identical CSVs.
//
// Layout:
//   fom/trajectory_<i>.txt      states of test/train parameter i (matrix container)
//   fom/hamiltonian.csv         trace schema, metric "hamiltonian"
//   train/ae_<net>_<2n>.ckpt    net is "sympl" (SMG) or "plain" (MG, M-LSPG)
//   train/history_<net>_<2n>.csv, train/summary.csv
//   rom/basis_<kind>_<2n>.txt, rom/traces.csv, rom/summary.csv
//   report/report.csv, report/by_two_n.csv, report/report_convergence.csv

#include <string>
#include <vector>

#include "symmor/config.hpp"
#include "symmor/integrators.hpp"

namespace symmor {

struct CommandContext {
  ExperimentConfig config;
  std::string out_dir;
};

// FOM trajectories for every training and test parameter. Trajectories
// already on disk with matching metadata are reused.
void cmd_fom(const CommandContext& ctx);

// Trains one symplectic and one plain autoencoder per reduced dimension.
void cmd_train(const CommandContext& ctx);

// Runs every configured method for every reduced dimension and test
// parameter. Reduced solver failures are recorded, not raised.
void cmd_rom(const CommandContext& ctx);

// Aggregates rom/summary.csv.
void cmd_report(const CommandContext& ctx);

// Helpers shared with tests.
std::string trajectory_path(const std::string& out_dir, std::size_t index);
std::vector<double> all_parameters(const ExperimentConfig& cfg);  // train then test, duplicates removed
Trajectory load_or_run_fom(const ExperimentConfig& cfg, const std::string& out_dir, double mu);
std::string checkpoint_path(const std::string& dir, const std::string& net, Index two_n);

}  // namespace symmor
