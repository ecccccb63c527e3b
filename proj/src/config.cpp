#include "symmor/config.hpp"

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

namespace symmor {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

std::string strip_comment(const std::string& s) {
  const auto pos = s.find_first_of("#;");
  return pos == std::string::npos ? s : s.substr(0, pos);
}

}  // namespace

IniFile IniFile::parse(const std::string& text, const std::string& origin) {
  IniFile ini;
  std::istringstream is(text);
  std::string raw;
  std::string section;
  int line_no = 0;
  while (std::getline(is, raw)) {
    ++line_no;
    const std::string line = trim(strip_comment(raw));
    if (line.empty()) continue;
    const std::string where = origin + ":" + std::to_string(line_no);
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where + ": unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty()) throw ConfigError(where + ": empty section name");
      if (ini.sections.count(section)) throw ConfigError(where + ": duplicate section [" + section + "]");
      ini.sections[section];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where + ": expected key = value");
    if (section.empty()) throw ConfigError(where + ": key outside of a section");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError(where + ": empty key");
    auto& sec = ini.sections[section];
    if (sec.count(key)) throw ConfigError(where + ": duplicate key '" + key + "'");
    sec[key] = trim(line.substr(eq + 1));
  }
  return ini;
}

IniFile IniFile::load(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("cannot open config file " + path);
  std::ostringstream ss;
  ss << is.rdbuf();
  return parse(ss.str(), path);
}

double parse_real(const std::string& text) {
  const std::string t = trim(text);
  const auto slash = t.find('/');
  try {
    if (slash != std::string::npos) {
      const double num = parse_real(t.substr(0, slash));
      const double den = parse_real(t.substr(slash + 1));
      if (den == 0.0) throw ConfigError("zero denominator in '" + t + "'");
      return num / den;
    }
    std::size_t used = 0;
    const double v = std::stod(t, &used);
    if (used != t.size() || !std::isfinite(v)) throw ConfigError("");
    return v;
  } catch (const ConfigError& e) {
    if (std::string(e.what()).empty()) throw ConfigError("not a real number: '" + t + "'");
    throw;
  } catch (const std::exception&) {
    throw ConfigError("not a real number: '" + t + "'");
  }
}

long long parse_integer(const std::string& text) {
  const std::string t = trim(text);
  try {
    std::size_t used = 0;
    const long long v = std::stoll(t, &used);
    if (used != t.size()) throw ConfigError("");
    return v;
  } catch (const std::exception&) {
    throw ConfigError("not an integer: '" + t + "'");
  }
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream ss(text);
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) throw ConfigError("empty list entry in '" + text + "'");
    out.push_back(item);
  }
  if (out.empty() || trim(text).back() == ',') throw ConfigError("empty list entry in '" + text + "'");
  return out;
}

const std::vector<std::string>& known_methods() {
  static const std::vector<std::string> m{"SG", "G", "LSPG", "SMG", "MG", "M-LSPG", "SMG-CL"};
  return m;
}

namespace {

// Consumes keys of one section; anything left over is an error.
class SectionReader {
 public:
  SectionReader(const IniFile& ini, const std::string& name) : name_(name) {
    auto it = ini.sections.find(name);
    if (it != ini.sections.end()) entries_ = it->second;
  }

  bool has(const std::string& key) const { return entries_.count(key) > 0; }

  std::string take(const std::string& key) {
    auto it = entries_.find(key);
    if (it == entries_.end()) throw ConfigError("[" + name_ + "] missing key '" + key + "'");
    std::string v = it->second;
    entries_.erase(it);
    return v;
  }

  template <class F>
  void maybe(const std::string& key, F&& apply) {
    if (!has(key)) return;
    const std::string v = take(key);
    try {
      apply(v);
    } catch (const ConfigError& e) {
      throw ConfigError("[" + name_ + "] " + key + ": " + e.what());
    }
  }

  void finish() const {
    if (!entries_.empty()) throw ConfigError("[" + name_ + "] unknown key '" + entries_.begin()->first + "'");
  }

 private:
  std::string name_;
  std::map<std::string, std::string> entries_;
};

std::vector<double> real_list(const std::string& v) {
  std::vector<double> out;
  for (const auto& s : split_list(v)) out.push_back(parse_real(s));
  return out;
}

std::vector<Index> index_list(const std::string& v) {
  std::vector<Index> out;
  for (const auto& s : split_list(v)) out.push_back(static_cast<Index>(parse_integer(s)));
  return out;
}

}  // namespace

ExperimentConfig ExperimentConfig::from_ini(const IniFile& ini) {
  static const std::set<std::string> known{"wave", "autoencoder", "train", "rom", "run"};
  for (const auto& [name, _] : ini.sections) {
    if (!known.count(name)) throw ConfigError("unknown section [" + name + "]");
  }
  ExperimentConfig c;

  SectionReader wave(ini, "wave");
  wave.maybe("N", [&](const std::string& v) { c.wave.N = static_cast<Index>(parse_integer(v)); });
  wave.maybe("K", [&](const std::string& v) { c.wave.K = static_cast<int>(parse_integer(v)); });
  wave.maybe("T", [&](const std::string& v) { c.wave.T = parse_real(v); });
  wave.maybe("train_mu", [&](const std::string& v) { c.train_mu = real_list(v); });
  wave.maybe("test_mu", [&](const std::string& v) { c.test_mu = real_list(v); });
  wave.finish();

  SectionReader ae(ini, "autoencoder");
  ae.maybe("channels", [&](const std::string& v) { c.arch.channels = index_list(v); });
  ae.maybe("lengths", [&](const std::string& v) { c.arch.lengths = index_list(v); });
  ae.maybe("strides", [&](const std::string& v) { c.arch.strides = index_list(v); });
  ae.maybe("hidden_full", [&](const std::string& v) {
    c.arch.hidden_full = (v == "none") ? std::vector<Index>{} : index_list(v);
  });
  ae.maybe("kernel_factor", [&](const std::string& v) { c.arch.kernel_factor = static_cast<Index>(parse_integer(v)); });
  ae.maybe("init", [&](const std::string& v) {
    try {
      c.train.init = init_scheme_from_string(v);
    } catch (const std::exception& e) {
      throw ConfigError(e.what());
    }
  });
  ae.finish();

  SectionReader tr(ini, "train");
  tr.maybe("alpha", [&](const std::string& v) { c.train.alpha = parse_real(v); });
  tr.maybe("plain_alpha", [&](const std::string& v) { c.plain_alpha = parse_real(v); });
  tr.maybe("learning_rate", [&](const std::string& v) { c.train.learning_rate = parse_real(v); });
  tr.maybe("batch_size", [&](const std::string& v) { c.train.batch_size = static_cast<Index>(parse_integer(v)); });
  tr.maybe("epochs", [&](const std::string& v) { c.train.epochs = static_cast<int>(parse_integer(v)); });
  tr.maybe("val_fraction", [&](const std::string& v) { c.train.val_fraction = parse_real(v); });
  tr.maybe("data_norm", [&](const std::string& v) {
    if (v == "half_dim") c.train.loss.norm = DataNorm::half_dim;
    else if (v == "full_dim") c.train.loss.norm = DataNorm::full_dim;
    else throw ConfigError("expected half_dim or full_dim, got '" + v + "'");
  });
  tr.maybe("checkpoint_dir", [&](const std::string& v) { c.checkpoint_dir = v; });
  tr.finish();

  SectionReader rom(ini, "rom");
  rom.maybe("reduced_dims", [&](const std::string& v) { c.reduced_dims = index_list(v); });
  rom.maybe("methods", [&](const std::string& v) { c.methods = split_list(v); });
  rom.maybe("abs_tol", [&](const std::string& v) { c.rom_newton.abs_tol = parse_real(v); });
  rom.maybe("rel_tol", [&](const std::string& v) { c.rom_newton.rel_tol = parse_real(v); });
  rom.maybe("max_iter", [&](const std::string& v) { c.rom_newton.max_iter = static_cast<int>(parse_integer(v)); });
  rom.finish();

  SectionReader run(ini, "run");
  run.maybe("seed", [&](const std::string& v) {
    const long long s = parse_integer(v);
    if (s < 0) throw ConfigError("seed must be nonnegative");
    c.seed = static_cast<std::uint64_t>(s);
  });
  run.maybe("output", [&](const std::string& v) { c.output_dir = v; });
  run.maybe("fom_abs_tol", [&](const std::string& v) { c.fom_newton.abs_tol = parse_real(v); });
  run.maybe("fom_rel_tol", [&](const std::string& v) { c.fom_newton.rel_tol = parse_real(v); });
  run.finish();

  c.validate();
  return c;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("cannot open config file " + path);
  std::ostringstream ss;
  ss << is.rdbuf();
  auto c = from_ini(IniFile::parse(ss.str(), path));
  c.source_text = ss.str();
  if (!c.checkpoint_dir.empty()) {
    const auto p = std::filesystem::path(c.checkpoint_dir);
    c.checkpoint_dir = p.is_absolute() ? p.string() : (std::filesystem::path(path).parent_path() / p).string();
    if (!std::filesystem::is_directory(c.checkpoint_dir)) {
      throw ConfigError("[train] checkpoint_dir does not exist: " + c.checkpoint_dir);
    }
  }
  return c;
}

void ExperimentConfig::validate() const {
  try {
    wave.validate();
    fom_newton.validate();
    rom_newton.validate();
    if (uses_network()) train.validate();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  if (train_mu.empty()) throw ConfigError("[wave] train_mu must not be empty");
  if (test_mu.empty()) throw ConfigError("[wave] test_mu must not be empty");
  for (double mu : train_mu) {
    if (!(mu > 0.0)) throw ConfigError("[wave] train_mu entries must be positive");
  }
  for (double mu : test_mu) {
    if (!(mu > 0.0)) throw ConfigError("[wave] test_mu entries must be positive");
  }
  if (reduced_dims.empty()) throw ConfigError("[rom] reduced_dims must not be empty");
  std::set<Index> seen;
  for (Index d : reduced_dims) {
    if (d < 2 || d % 2 != 0) throw ConfigError("[rom] reduced_dims entries must be even and >= 2");
    if (d > 2 * wave.N) throw ConfigError("[rom] reduced dimension exceeds the state dimension");
    if (!seen.insert(d).second) throw ConfigError("[rom] duplicate reduced dimension");
  }
  if (methods.empty()) throw ConfigError("[rom] methods must not be empty");
  std::set<std::string> mseen;
  for (const auto& m : methods) {
    if (std::find(known_methods().begin(), known_methods().end(), m) == known_methods().end()) {
      throw ConfigError("[rom] unknown method '" + m + "'");
    }
    if (!mseen.insert(m).second) throw ConfigError("[rom] duplicate method '" + m + "'");
  }
  if (!(plain_alpha >= 0.0 && plain_alpha <= 1.0)) throw ConfigError("[train] plain_alpha must lie in [0, 1]");
  if (uses_network()) {
    if (arch.lengths.empty() || arch.lengths.front() != wave.N) {
      throw ConfigError("[autoencoder] lengths must start with N");
    }
    if (arch.channels.empty() || arch.channels.front() != 2) {
      throw ConfigError("[autoencoder] channels must start with 2");
    }
    if (arch.channels.size() != arch.lengths.size() || arch.strides.size() + 1 != arch.channels.size()) {
      throw ConfigError("[autoencoder] channels, lengths and strides have inconsistent sizes");
    }
    for (Index d : reduced_dims) {
      try {
        (void)mirrored_specs(arch, 2 * wave.N, d);
      } catch (const std::exception& e) {
        throw ConfigError(std::string("[autoencoder] ") + e.what());
      }
    }
  }
}

bool ExperimentConfig::uses_network() const {
  for (const auto& m : methods) {
    if (m == "SMG" || m == "MG" || m == "M-LSPG") return true;
  }
  return false;
}

}  // namespace symmor
