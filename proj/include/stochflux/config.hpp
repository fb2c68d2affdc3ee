#pragma once

// Experiment configuration: parsing (JSON or TOML by extension), dotted-path
// command line overrides, canonical serialization, and the 64-bit config
// hash stamped on every artifact.
//
// Canonicalization goes through the typed struct, so "8" and "8.0" in a
// config file produce the same canonical form; keys are emitted sorted and
// doubles in shortest round-trip form, which makes the hash stable.

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace stochflux {

using json = nlohmann::json;

/// Config or usage problem; maps to exit code 2 in the CLI.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
  // model
  std::string model_name = "burgers";
  bool zero_hamiltonian = false;
  std::map<std::string, double> model_overrides;  // constant overrides by name

  // grid
  double grid_length = 16.0;
  int grid_cells = 512;

  // kick
  double sigma_target = 0.5;
  double cutoff = 8.0;
  int n_modes = 32;

  // solver
  double cfl_safety = 0.45;
  double max_dt = 0.05;
  std::string flux_scheme = "lax_friedrichs_local";
  double record_every = 0.25;

  // experiment selection and parameters
  std::string experiment = "validate";
  double a = 0.0;
  std::vector<double> a_list = {0.0, 1.0, 2.0, 4.0};
  double horizon = 8.0;          // T
  int n_paths = 8;               // M
  std::vector<int> probe_cells;  // empty: defaults chosen from the grid
  double lambda_ = 0.5;
  double c2 = 0.0;
  double lag = 0.5;
  double burn_in = -1.0;  // < 0: T/4
  int n_pairs = 20;
  int n_trials = 100;                       // supersolution initial profiles
  std::vector<double> initials = {0.0, 1.0};  // ordering experiment constants
  double weighted_ell = 0.0;                // contraction: 0 disables the weighted norm
  double initial_sin_amplitude = 0.0;       // simulate: optional sine added to a
  bool dump_snapshots = false;              // simulate: write snapshots.bin
  bool dump_kicks = false;                  // simulate: write kicks.bin for replay/debug

  std::uint64_t seed_root = 0x5EED5EEDull;
  std::string outdir = "out";
};

namespace detail {

inline json config_to_json(const ExperimentConfig& c) {
  json j;
  j["model"]["name"] = c.model_name;
  j["model"]["zero_hamiltonian"] = c.zero_hamiltonian;
  j["model"]["overrides"] = json::object();
  for (const auto& [k, v] : c.model_overrides) j["model"]["overrides"][k] = v;
  j["grid"]["L"] = c.grid_length;
  j["grid"]["N"] = c.grid_cells;
  j["kick"]["sigma_target"] = c.sigma_target;
  j["kick"]["cutoff"] = c.cutoff;
  j["kick"]["n_modes"] = c.n_modes;
  j["solver"]["cfl_safety"] = c.cfl_safety;
  j["solver"]["max_dt"] = c.max_dt;
  j["solver"]["flux_scheme"] = c.flux_scheme;
  j["solver"]["record_every"] = c.record_every;
  j["experiment"]["kind"] = c.experiment;
  j["experiment"]["a"] = c.a;
  j["experiment"]["a_list"] = c.a_list;
  j["experiment"]["T"] = c.horizon;
  j["experiment"]["M"] = c.n_paths;
  j["experiment"]["probe_cells"] = c.probe_cells;
  j["experiment"]["lambda"] = c.lambda_;
  j["experiment"]["c2"] = c.c2;
  j["experiment"]["lag"] = c.lag;
  j["experiment"]["burn_in"] = c.burn_in;
  j["experiment"]["n_pairs"] = c.n_pairs;
  j["experiment"]["n_trials"] = c.n_trials;
  j["experiment"]["initials"] = c.initials;
  j["experiment"]["weighted_ell"] = c.weighted_ell;
  j["experiment"]["initial_sin_amplitude"] = c.initial_sin_amplitude;
  j["experiment"]["dump_snapshots"] = c.dump_snapshots;
  j["experiment"]["dump_kicks"] = c.dump_kicks;
  j["seed_root"] = c.seed_root;
  j["outdir"] = c.outdir;
  return j;
}

template <class T>
void take(const json& obj, const std::string& key, T& out, std::vector<std::string>& bad,
          const std::string& prefix) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (...) {
    bad.push_back(prefix + key + " (wrong type)");
  }
}

inline ExperimentConfig config_from_json(const json& j) {
  ExperimentConfig c;
  std::vector<std::string> bad;
  static const std::map<std::string, std::vector<std::string>> known = {
      {"model", {"name", "zero_hamiltonian", "overrides"}},
      {"grid", {"L", "N"}},
      {"kick", {"sigma_target", "cutoff", "n_modes"}},
      {"solver", {"cfl_safety", "max_dt", "flux_scheme", "record_every"}},
      {"experiment",
       {"kind", "a", "a_list", "T", "M", "probe_cells", "lambda", "c2", "lag", "burn_in",
        "n_pairs", "n_trials", "initials", "weighted_ell", "initial_sin_amplitude",
        "dump_snapshots", "dump_kicks"}},
  };
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string& sect = it.key();
    if (sect == "seed_root" || sect == "outdir") continue;
    auto ks = known.find(sect);
    if (ks == known.end()) {
      bad.push_back(sect + " (unknown section)");
      continue;
    }
    if (!it.value().is_object()) {
      bad.push_back(sect + " (expected a table)");
      continue;
    }
    for (auto f = it.value().begin(); f != it.value().end(); ++f) {
      const auto& names = ks->second;
      if (std::find(names.begin(), names.end(), f.key()) == names.end())
        bad.push_back(sect + "." + f.key() + " (unknown key)");
    }
  }

  if (j.contains("model")) {
    const json& m = j.at("model");
    take(m, "name", c.model_name, bad, "model.");
    take(m, "zero_hamiltonian", c.zero_hamiltonian, bad, "model.");
    if (m.contains("overrides")) {
      if (!m.at("overrides").is_object()) {
        bad.push_back("model.overrides (expected a table)");
      } else {
        for (auto it = m.at("overrides").begin(); it != m.at("overrides").end(); ++it) {
          if (it.value().is_number())
            c.model_overrides[it.key()] = it.value().get<double>();
          else
            bad.push_back("model.overrides." + it.key() + " (expected a number)");
        }
      }
    }
  }
  if (j.contains("grid")) {
    take(j.at("grid"), "L", c.grid_length, bad, "grid.");
    take(j.at("grid"), "N", c.grid_cells, bad, "grid.");
  }
  if (j.contains("kick")) {
    const json& k = j.at("kick");
    take(k, "sigma_target", c.sigma_target, bad, "kick.");
    take(k, "cutoff", c.cutoff, bad, "kick.");
    take(k, "n_modes", c.n_modes, bad, "kick.");
  }
  if (j.contains("solver")) {
    const json& s = j.at("solver");
    take(s, "cfl_safety", c.cfl_safety, bad, "solver.");
    take(s, "max_dt", c.max_dt, bad, "solver.");
    take(s, "flux_scheme", c.flux_scheme, bad, "solver.");
    take(s, "record_every", c.record_every, bad, "solver.");
  }
  if (j.contains("experiment")) {
    const json& e = j.at("experiment");
    take(e, "kind", c.experiment, bad, "experiment.");
    take(e, "a", c.a, bad, "experiment.");
    take(e, "a_list", c.a_list, bad, "experiment.");
    take(e, "T", c.horizon, bad, "experiment.");
    take(e, "M", c.n_paths, bad, "experiment.");
    take(e, "probe_cells", c.probe_cells, bad, "experiment.");
    take(e, "lambda", c.lambda_, bad, "experiment.");
    take(e, "c2", c.c2, bad, "experiment.");
    take(e, "lag", c.lag, bad, "experiment.");
    take(e, "burn_in", c.burn_in, bad, "experiment.");
    take(e, "n_pairs", c.n_pairs, bad, "experiment.");
    take(e, "n_trials", c.n_trials, bad, "experiment.");
    take(e, "initials", c.initials, bad, "experiment.");
    take(e, "weighted_ell", c.weighted_ell, bad, "experiment.");
    take(e, "initial_sin_amplitude", c.initial_sin_amplitude, bad, "experiment.");
    take(e, "dump_snapshots", c.dump_snapshots, bad, "experiment.");
    take(e, "dump_kicks", c.dump_kicks, bad, "experiment.");
  }
  take(j, "seed_root", c.seed_root, bad, "");
  take(j, "outdir", c.outdir, bad, "");

  if (!bad.empty()) {
    std::string msg = "malformed config, offending keys:";
    for (const std::string& b : bad) msg += "\n  - " + b;
    throw ConfigError(msg);
  }
  return c;
}

// --- minimal TOML subset: [section], key = value, #-comments, flat arrays ---

inline std::string toml_trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline json toml_scalar(const std::string& tok, int lineno) {
  const std::string t = toml_trim(tok);
  if (t.empty()) throw ConfigError("toml: empty value at line " + std::to_string(lineno));
  if (t.front() == '"') {
    if (t.size() < 2 || t.back() != '"')
      throw ConfigError("toml: unterminated string at line " + std::to_string(lineno));
    return t.substr(1, t.size() - 2);
  }
  if (t == "true") return true;
  if (t == "false") return false;
  // integer?
  bool integral = true;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const char ch = t[i];
    if (i == 0 && (ch == '+' || ch == '-')) continue;
    if (!std::isdigit(static_cast<unsigned char>(ch))) {
      integral = false;
      break;
    }
  }
  try {
    if (integral) {
      if (!t.empty() && t[0] != '-') return static_cast<std::uint64_t>(std::stoull(t));
      return static_cast<std::int64_t>(std::stoll(t));
    }
    std::size_t used = 0;
    const double d = std::stod(t, &used);
    if (used != t.size()) throw ConfigError("");
    return d;
  } catch (...) {
    throw ConfigError("toml: cannot parse value '" + t + "' at line " + std::to_string(lineno));
  }
}

inline json toml_value(const std::string& tok, int lineno) {
  const std::string t = toml_trim(tok);
  if (!t.empty() && t.front() == '[') {
    if (t.back() != ']')
      throw ConfigError("toml: unterminated array at line " + std::to_string(lineno));
    json arr = json::array();
    std::string inner = t.substr(1, t.size() - 2);
    std::stringstream ss(inner);
    std::string item;
    while (std::getline(ss, item, ',')) {
      if (toml_trim(item).empty()) continue;
      arr.push_back(toml_scalar(item, lineno));
    }
    return arr;
  }
  return toml_scalar(t, lineno);
}

inline json parse_toml(std::istream& in) {
  json root = json::object();
  json* scope = &root;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    // strip comments outside strings
    bool in_str = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (line[i] == '"') in_str = !in_str;
      if (line[i] == '#' && !in_str) {
        line = line.substr(0, i);
        break;
      }
    }
    const std::string t = toml_trim(line);
    if (t.empty()) continue;
    if (t.front() == '[') {
      if (t.back() != ']')
        throw ConfigError("toml: bad section header at line " + std::to_string(lineno));
      const std::string name = toml_trim(t.substr(1, t.size() - 2));
      if (name.empty()) throw ConfigError("toml: empty section at line " + std::to_string(lineno));
      json* cur = &root;
      std::stringstream ss(name);
      std::string part;
      while (std::getline(ss, part, '.')) cur = &(*cur)[toml_trim(part)];
      scope = cur;
      continue;
    }
    const std::size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError("toml: expected key = value at line " + std::to_string(lineno));
    const std::string key = toml_trim(t.substr(0, eq));
    if (key.empty()) throw ConfigError("toml: empty key at line " + std::to_string(lineno));
    (*scope)[key] = toml_value(t.substr(eq + 1), lineno);
  }
  return root;
}

}  // namespace detail

/// Reads a config file, dispatching on the extension (.json or .toml).
inline ExperimentConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  json j;
  if (path.size() >= 5 && path.substr(path.size() - 5) == ".json") {
    try {
      in >> j;
    } catch (const std::exception& e) {
      throw ConfigError("bad JSON in '" + path + "': " + e.what());
    }
  } else if (path.size() >= 5 && path.substr(path.size() - 5) == ".toml") {
    j = detail::parse_toml(in);
  } else {
    throw ConfigError("config file must end in .json or .toml: '" + path + "'");
  }
  return detail::config_from_json(j);
}

/// Applies `section.key=value` overrides on top of a parsed config.
inline ExperimentConfig apply_overrides(const ExperimentConfig& base,
                                        const std::vector<std::string>& overrides) {
  json j = detail::config_to_json(base);
  for (const std::string& ov : overrides) {
    const std::size_t eq = ov.find('=');
    if (eq == std::string::npos || eq == 0)
      throw ConfigError("override must look like section.key=value: '" + ov + "'");
    const std::string path = ov.substr(0, eq);
    const std::string value = ov.substr(eq + 1);
    json* cur = &j;
    std::stringstream ss(path);
    std::string part;
    std::vector<std::string> parts;
    while (std::getline(ss, part, '.')) parts.push_back(part);
    for (std::size_t i = 0; i + 1 < parts.size(); ++i) cur = &(*cur)[parts[i]];
    const std::string leaf = parts.back();
    // strings that are obviously not numbers/bools stay strings
    if (!value.empty() && (value == "true" || value == "false" || value.front() == '"' ||
                           std::isdigit(static_cast<unsigned char>(value.front())) ||
                           value.front() == '-' || value.front() == '+' || value.front() == '[' ||
                           value.front() == '.')) {
      try {
        (*cur)[leaf] = detail::toml_value(value, 0);
        continue;
      } catch (...) {
        // fall through to string
      }
    }
    (*cur)[leaf] = value;
  }
  return detail::config_from_json(j);
}

/// Canonical form: typed struct -> json with sorted keys; excludes the
/// output directory (an execution detail that does not affect results).
inline json canonical_json(const ExperimentConfig& c) {
  json j = detail::config_to_json(c);
  j.erase("outdir");
  return j;
}

inline std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::string config_hash(const ExperimentConfig& c) {
  const std::uint64_t h = fnv1a64(canonical_json(c).dump());
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

/// Serialization used for files; includes everything.
inline json serialize_config(const ExperimentConfig& c) { return detail::config_to_json(c); }
inline ExperimentConfig deserialize_config(const json& j) { return detail::config_from_json(j); }

}  // namespace stochflux
