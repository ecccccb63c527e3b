#pragma once

// Experiment configuration: a UTF-8 file of "key = value" lines grouped under
// [section] headers. Lists are comma separated; '#' and ';' start comments.
// Reals accept a fraction "a/b". Unknown sections or keys raise ConfigError.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "symmor/autonet.hpp"
#include "symmor/integrators.hpp"
#include "symmor/wave.hpp"

namespace symmor {

struct IniFile {
  std::map<std::string, std::map<std::string, std::string>> sections;

  static IniFile parse(const std::string& text, const std::string& origin = "<string>");
  static IniFile load(const std::string& path);
};

double parse_real(const std::string& text);
long long parse_integer(const std::string& text);
std::vector<std::string> split_list(const std::string& text);

// Method labels accepted in [rom] methods. SMG-CL runs the manifold Galerkin
// machinery on the cotangent-lift basis as a linear decoder.
const std::vector<std::string>& known_methods();

struct ExperimentConfig {
  WaveConfig wave;  // mu is set per run
  std::vector<double> train_mu;
  std::vector<double> test_mu;

  ArchitectureSpec arch = ArchitectureSpec::desk();
  TrainConfig train;         // alpha applies to the symplectic autoencoder
  double plain_alpha = 1.0;  // autoencoder used by MG and M-LSPG

  std::vector<Index> reduced_dims{2, 4, 8};
  std::vector<std::string> methods{"SG", "G", "LSPG", "SMG", "MG", "M-LSPG"};
  NewtonOptions rom_newton = NewtonOptions::reduced_order();
  NewtonOptions fom_newton = NewtonOptions::full_order();

  std::uint64_t seed = 1;
  std::string output_dir = "out";
  std::string checkpoint_dir;  // optional: existing trained checkpoints

  std::string source_text;  // raw file contents, for run metadata

  static ExperimentConfig from_ini(const IniFile& ini);
  static ExperimentConfig load(const std::string& path);

  // Throws ConfigError.
  void validate() const;

  bool uses_network() const;
};

}  // namespace symmor
