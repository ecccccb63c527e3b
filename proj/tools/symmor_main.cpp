// symmor fom|train|rom|report --config <path> [--out <dir>] [--seed <int>]
//
// Exit codes: 0 success, 2 configuration or input error, 3 numerical failure
// (outputs written so far are kept), 1 anything else.

#include <cstdint>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "symmor/config.hpp"
#include "symmor/errors.hpp"
#include "symmor/pipeline.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Symplectic model reduction experiments for the linear wave equation"};
  app.require_subcommand(1, 1);

  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  bool seed_given = false;

  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "Experiment config file")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", out_dir, "Output directory (overrides [run] output)");
    sub->add_option_function<std::uint64_t>(
        "--seed", [&](const std::uint64_t& s) { seed = s; seed_given = true; }, "Root seed (overrides [run] seed)");
  };
  CLI::App* fom = app.add_subcommand("fom", "Full-order trajectories and Hamiltonian traces");
  CLI::App* trn = app.add_subcommand("train", "Train the autoencoders");
  CLI::App* rom = app.add_subcommand("rom", "Run the reduced models and write metrics");
  CLI::App* rep = app.add_subcommand("report", "Aggregate the reduced-model summary");
  for (CLI::App* sub : {fom, trn, rom, rep}) add_common(sub);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    symmor::CommandContext ctx{symmor::ExperimentConfig::load(config_path), {}};
    if (seed_given) ctx.config.seed = seed;
    ctx.out_dir = out_dir.empty() ? ctx.config.output_dir : out_dir;
    for (const auto& w : symmor::WaveConfig(ctx.config.wave).warnings()) std::cerr << "warning: " << w << "\n";

    if (fom->parsed()) symmor::cmd_fom(ctx);
    if (trn->parsed()) symmor::cmd_train(ctx);
    if (rom->parsed()) symmor::cmd_rom(ctx);
    if (rep->parsed()) symmor::cmd_report(ctx);
  } catch (const symmor::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const symmor::ParseError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return 2;
  } catch (const symmor::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
