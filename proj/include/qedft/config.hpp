#pragma once

// Sectioned key = value run configuration.
//
//   [model]     length, points, electrons, modes, coupling, n_max, w0, softening,
//               dipole, fock_center, dimension_budget
//   [external]  v_cos, v_sin, v_samples, v_offset, j, b
//   [solver]    eigensolver, tol, max_matvecs, block_size, krylov_dim, max_basis,
//               start_seed, degeneracy_tol, scf_*
//   [run]       seed, samples, eps_ext, eps_int, recovery_tol, margin_tol,
//               equivalence_tol, maxwell_tol, n_max_sweep
//
// '#' starts a comment. Unknown sections or keys are errors. Lists are
// whitespace separated; mode coefficients are n:re:im with n > 0, the
// negative partner following by conjugation. Potentials are q:amplitude.

#include <Eigen/Dense>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "qedft/errors.hpp"
#include "qedft/field_core.hpp"
#include "qedft/hk_verify.hpp"
#include "qedft/maxwell_ks.hpp"
#include "qedft/pauli_fierz.hpp"

namespace qedft {

/// Shortest decimal text that parses back to the same double.
inline std::string format_double(double x) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

struct ModeCoefficient {
  int n = 0;
  complex value;
};

struct Harmonic {
  int q = 0;
  double amplitude = 0.0;
};

struct RunConfig {
  // [model]
  double length = 10.0;
  int points = 16;
  int electrons = 2;
  std::vector<int> modes{-2, -1, 1, 2};
  double coupling = 0.05;
  int n_max = 6;
  double w0 = 0.5;
  double softening = 1.0;
  bool dipole = false;
  FockCenter fock_center = FockCenter::external;
  std::size_t dimension_budget = 5'000'000;
  // [external]
  std::vector<Harmonic> v_cos;
  std::vector<Harmonic> v_sin;
  std::vector<double> v_samples;
  double v_offset = 0.0;
  std::vector<ModeCoefficient> j;
  std::vector<ModeCoefficient> b;
  // [solver]
  EigenMethod eigensolver = EigenMethod::davidson;
  double tol = 1e-10;
  int max_matvecs = 4000;
  int block_size = 2;
  int krylov_dim = 30;
  int max_basis = 24;
  std::uint64_t start_seed = 20170314;
  double degeneracy_tol = 1e-8;
  double scf_mixing = 0.3;
  int scf_anderson_depth = 0;
  int scf_max_iterations = 200;
  double scf_density_tol = 1e-8;
  double scf_field_tol = 1e-8;
  ScfInit scf_init = ScfInit::zero_field;
  // [run]
  std::uint64_t seed = 1;
  int samples = 10;
  double eps_ext = 1e-2;
  double eps_int = 1e-6;
  double recovery_tol = 1e-7;
  double margin_tol = 1e-10;
  double equivalence_tol = 1e-7;
  double maxwell_tol = 1e-7;
  std::vector<int> n_max_sweep{2, 4, 6, 8};
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_ws(const std::string& s) {
  std::istringstream in(s);
  std::vector<std::string> out;
  for (std::string tok; in >> tok;) out.push_back(tok);
  return out;
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

inline double parse_double(const std::string& key, const std::string& s) {
  double x = 0.0;
  auto r = std::from_chars(s.data(), s.data() + s.size(), x);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size() || !std::isfinite(x))
    throw ConfigError(key, "expected a finite number, got '" + s + "'");
  return x;
}

template <class Int>
Int parse_int(const std::string& key, const std::string& s) {
  Int x{};
  auto r = std::from_chars(s.data(), s.data() + s.size(), x);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size())
    throw ConfigError(key, "expected an integer, got '" + s + "'");
  return x;
}

inline bool parse_bool(const std::string& key, const std::string& s) {
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw ConfigError(key, "expected true or false, got '" + s + "'");
}

inline std::vector<int> parse_int_list(const std::string& key, const std::string& s) {
  std::vector<int> out;
  for (const auto& tok : split_ws(s)) out.push_back(parse_int<int>(key, tok));
  return out;
}

inline std::vector<double> parse_double_list(const std::string& key, const std::string& s) {
  std::vector<double> out;
  for (const auto& tok : split_ws(s)) out.push_back(parse_double(key, tok));
  return out;
}

inline std::vector<Harmonic> parse_harmonics(const std::string& key, const std::string& s) {
  std::vector<Harmonic> out;
  for (const auto& tok : split_ws(s)) {
    auto parts = split(tok, ':');
    if (parts.size() != 2) throw ConfigError(key, "expected q:amplitude, got '" + tok + "'");
    Harmonic h{parse_int<int>(key, parts[0]), parse_double(key, parts[1])};
    if (h.q < 1) throw ConfigError(key, "harmonic index must be positive");
    out.push_back(h);
  }
  return out;
}

inline std::vector<ModeCoefficient> parse_coefficients(const std::string& key,
                                                       const std::string& s) {
  std::vector<ModeCoefficient> out;
  for (const auto& tok : split_ws(s)) {
    auto parts = split(tok, ':');
    if (parts.size() != 3) throw ConfigError(key, "expected n:re:im, got '" + tok + "'");
    ModeCoefficient c{parse_int<int>(key, parts[0]),
                      {parse_double(key, parts[1]), parse_double(key, parts[2])}};
    if (c.n <= 0) throw ConfigError(key, "give coefficients for n > 0 only; n < 0 follows by conjugation");
    for (const auto& prev : out)
      if (prev.n == c.n) throw ConfigError(key, "mode " + std::to_string(c.n) + " given twice");
    out.push_back(c);
  }
  return out;
}

inline std::string join(const std::vector<int>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? " " : "") + std::to_string(v[i]);
  return s;
}

inline std::string join(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? " " : "") + format_double(v[i]);
  return s;
}

inline std::string join(const std::vector<Harmonic>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i)
    s += (i ? " " : "") + std::to_string(v[i].q) + ":" + format_double(v[i].amplitude);
  return s;
}

inline std::string join(const std::vector<ModeCoefficient>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i)
    s += (i ? " " : "") + std::to_string(v[i].n) + ":" + format_double(v[i].value.real()) + ":" +
         format_double(v[i].value.imag());
  return s;
}

inline const char* name(FockCenter c) { return c == FockCenter::vacuum ? "vacuum" : "external"; }
inline const char* name(EigenMethod m) { return m == EigenMethod::davidson ? "davidson" : "lanczos"; }
inline const char* name(ScfInit i) { return i == ScfInit::zero_field ? "zero_field" : "external_field"; }

using Entries = std::vector<std::pair<std::string, std::string>>;

}  // namespace detail

/// Resolved configuration as ordered (section.key, value) text pairs.
inline detail::Entries config_entries(const RunConfig& c) {
  using namespace detail;
  return {
      {"model.length", format_double(c.length)},
      {"model.points", std::to_string(c.points)},
      {"model.electrons", std::to_string(c.electrons)},
      {"model.modes", join(c.modes)},
      {"model.coupling", format_double(c.coupling)},
      {"model.n_max", std::to_string(c.n_max)},
      {"model.w0", format_double(c.w0)},
      {"model.softening", format_double(c.softening)},
      {"model.dipole", c.dipole ? "true" : "false"},
      {"model.fock_center", name(c.fock_center)},
      {"model.dimension_budget", std::to_string(c.dimension_budget)},
      {"external.v_cos", join(c.v_cos)},
      {"external.v_sin", join(c.v_sin)},
      {"external.v_samples", join(c.v_samples)},
      {"external.v_offset", format_double(c.v_offset)},
      {"external.j", join(c.j)},
      {"external.b", join(c.b)},
      {"solver.eigensolver", name(c.eigensolver)},
      {"solver.tol", format_double(c.tol)},
      {"solver.max_matvecs", std::to_string(c.max_matvecs)},
      {"solver.block_size", std::to_string(c.block_size)},
      {"solver.krylov_dim", std::to_string(c.krylov_dim)},
      {"solver.max_basis", std::to_string(c.max_basis)},
      {"solver.start_seed", std::to_string(c.start_seed)},
      {"solver.degeneracy_tol", format_double(c.degeneracy_tol)},
      {"solver.scf_mixing", format_double(c.scf_mixing)},
      {"solver.scf_anderson_depth", std::to_string(c.scf_anderson_depth)},
      {"solver.scf_max_iterations", std::to_string(c.scf_max_iterations)},
      {"solver.scf_density_tol", format_double(c.scf_density_tol)},
      {"solver.scf_field_tol", format_double(c.scf_field_tol)},
      {"solver.scf_init", name(c.scf_init)},
      {"run.seed", std::to_string(c.seed)},
      {"run.samples", std::to_string(c.samples)},
      {"run.eps_ext", format_double(c.eps_ext)},
      {"run.eps_int", format_double(c.eps_int)},
      {"run.recovery_tol", format_double(c.recovery_tol)},
      {"run.margin_tol", format_double(c.margin_tol)},
      {"run.equivalence_tol", format_double(c.equivalence_tol)},
      {"run.maxwell_tol", format_double(c.maxwell_tol)},
      {"run.n_max_sweep", join(c.n_max_sweep)},
  };
}

/// Assigns one key; throws ConfigError naming the key on unknown keys or bad values.
inline void set_config_value(RunConfig& c, const std::string& key, const std::string& raw) {
  using namespace detail;
  const std::string v = trim(raw);
  if (key == "model.length") c.length = parse_double(key, v);
  else if (key == "model.points") c.points = parse_int<int>(key, v);
  else if (key == "model.electrons") c.electrons = parse_int<int>(key, v);
  else if (key == "model.modes") c.modes = parse_int_list(key, v);
  else if (key == "model.coupling") c.coupling = parse_double(key, v);
  else if (key == "model.n_max") c.n_max = parse_int<int>(key, v);
  else if (key == "model.w0") c.w0 = parse_double(key, v);
  else if (key == "model.softening") c.softening = parse_double(key, v);
  else if (key == "model.dipole") c.dipole = parse_bool(key, v);
  else if (key == "model.fock_center") {
    if (v == "vacuum") c.fock_center = FockCenter::vacuum;
    else if (v == "external") c.fock_center = FockCenter::external;
    else throw ConfigError(key, "expected vacuum or external");
  } else if (key == "model.dimension_budget") c.dimension_budget = parse_int<std::size_t>(key, v);
  else if (key == "external.v_cos") c.v_cos = parse_harmonics(key, v);
  else if (key == "external.v_sin") c.v_sin = parse_harmonics(key, v);
  else if (key == "external.v_samples") c.v_samples = parse_double_list(key, v);
  else if (key == "external.v_offset") c.v_offset = parse_double(key, v);
  else if (key == "external.j") c.j = parse_coefficients(key, v);
  else if (key == "external.b") c.b = parse_coefficients(key, v);
  else if (key == "solver.eigensolver") {
    if (v == "davidson") c.eigensolver = EigenMethod::davidson;
    else if (v == "lanczos") c.eigensolver = EigenMethod::lanczos;
    else throw ConfigError(key, "expected davidson or lanczos");
  } else if (key == "solver.tol") c.tol = parse_double(key, v);
  else if (key == "solver.max_matvecs") c.max_matvecs = parse_int<int>(key, v);
  else if (key == "solver.block_size") c.block_size = parse_int<int>(key, v);
  else if (key == "solver.krylov_dim") c.krylov_dim = parse_int<int>(key, v);
  else if (key == "solver.max_basis") c.max_basis = parse_int<int>(key, v);
  else if (key == "solver.start_seed") c.start_seed = parse_int<std::uint64_t>(key, v);
  else if (key == "solver.degeneracy_tol") c.degeneracy_tol = parse_double(key, v);
  else if (key == "solver.scf_mixing") c.scf_mixing = parse_double(key, v);
  else if (key == "solver.scf_anderson_depth") c.scf_anderson_depth = parse_int<int>(key, v);
  else if (key == "solver.scf_max_iterations") c.scf_max_iterations = parse_int<int>(key, v);
  else if (key == "solver.scf_density_tol") c.scf_density_tol = parse_double(key, v);
  else if (key == "solver.scf_field_tol") c.scf_field_tol = parse_double(key, v);
  else if (key == "solver.scf_init") {
    if (v == "zero_field") c.scf_init = ScfInit::zero_field;
    else if (v == "external_field") c.scf_init = ScfInit::external_field;
    else throw ConfigError(key, "expected zero_field or external_field");
  } else if (key == "run.seed") c.seed = parse_int<std::uint64_t>(key, v);
  else if (key == "run.samples") c.samples = parse_int<int>(key, v);
  else if (key == "run.eps_ext") c.eps_ext = parse_double(key, v);
  else if (key == "run.eps_int") c.eps_int = parse_double(key, v);
  else if (key == "run.recovery_tol") c.recovery_tol = parse_double(key, v);
  else if (key == "run.margin_tol") c.margin_tol = parse_double(key, v);
  else if (key == "run.equivalence_tol") c.equivalence_tol = parse_double(key, v);
  else if (key == "run.maxwell_tol") c.maxwell_tol = parse_double(key, v);
  else if (key == "run.n_max_sweep") c.n_max_sweep = parse_int_list(key, v);
  else throw ConfigError(key, "unknown key");
}

/// Range and consistency checks that do not need the full model build.
inline void validate_config(const RunConfig& c) {
  if (!(c.length > 0)) throw ConfigError("model.length", "must be > 0");
  if (c.points < Grid1D::min_points) throw ConfigError("model.points", "must be >= " + std::to_string(Grid1D::min_points));
  if (c.points > 64) throw ConfigError("model.points", "must be <= 64");
  if (c.electrons < 1 || c.electrons > 2) throw ConfigError("model.electrons", "must be 1 or 2");
  if (!(c.coupling >= 0)) throw ConfigError("model.coupling", "must be >= 0");
  if (c.n_max < 1) throw ConfigError("model.n_max", "must be >= 1");
  if (!(c.w0 >= 0)) throw ConfigError("model.w0", "must be >= 0");
  if (!(c.softening > 0)) throw ConfigError("model.softening", "must be > 0");
  if (c.dimension_budget < 1) throw ConfigError("model.dimension_budget", "must be >= 1");
  try {
    ModeSet m(c.modes, c.length, c.coupling);
    m.check_resolved_by(Grid1D(c.length, c.points));
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError("model.modes", e.what());
  }
  auto check_modes = [&](const std::vector<ModeCoefficient>& cs, const char* key) {
    for (const auto& x : cs)
      if (std::find(c.modes.begin(), c.modes.end(), x.n) == c.modes.end())
        throw ConfigError(key, "mode " + std::to_string(x.n) + " is not in model.modes");
  };
  check_modes(c.j, "external.j");
  check_modes(c.b, "external.b");
  if (!c.v_samples.empty()) {
    if (static_cast<int>(c.v_samples.size()) != c.points)
      throw ConfigError("external.v_samples", "needs exactly model.points values");
    if (!c.v_cos.empty() || !c.v_sin.empty())
      throw ConfigError("external.v_samples", "cannot be combined with v_cos or v_sin");
  }
  for (const auto& h : c.v_cos)
    if (2 * h.q >= c.points) throw ConfigError("external.v_cos", "harmonic not resolved by the grid");
  for (const auto& h : c.v_sin)
    if (2 * h.q >= c.points) throw ConfigError("external.v_sin", "harmonic not resolved by the grid");
  if (!(c.tol > 0)) throw ConfigError("solver.tol", "must be > 0");
  if (c.max_matvecs < 1) throw ConfigError("solver.max_matvecs", "must be >= 1");
  if (c.block_size < 1) throw ConfigError("solver.block_size", "must be >= 1");
  if (c.krylov_dim < 4) throw ConfigError("solver.krylov_dim", "must be >= 4");
  if (c.max_basis < 4) throw ConfigError("solver.max_basis", "must be >= 4");
  if (!(c.degeneracy_tol >= 0)) throw ConfigError("solver.degeneracy_tol", "must be >= 0");
  if (!(c.scf_mixing > 0 && c.scf_mixing <= 1)) throw ConfigError("solver.scf_mixing", "must lie in (0, 1]");
  if (c.scf_anderson_depth < 0) throw ConfigError("solver.scf_anderson_depth", "must be >= 0");
  if (c.scf_max_iterations < 1) throw ConfigError("solver.scf_max_iterations", "must be >= 1");
  if (!(c.scf_density_tol > 0)) throw ConfigError("solver.scf_density_tol", "must be > 0");
  if (!(c.scf_field_tol > 0)) throw ConfigError("solver.scf_field_tol", "must be > 0");
  if (c.samples < 1) throw ConfigError("run.samples", "must be >= 1");
  if (!(c.eps_ext > 0)) throw ConfigError("run.eps_ext", "must be > 0");
  if (!(c.eps_int > 0)) throw ConfigError("run.eps_int", "must be > 0");
  if (!(c.recovery_tol > 0)) throw ConfigError("run.recovery_tol", "must be > 0");
  if (!(c.equivalence_tol > 0)) throw ConfigError("run.equivalence_tol", "must be > 0");
  if (!(c.maxwell_tol > 0)) throw ConfigError("run.maxwell_tol", "must be > 0");
  if (c.n_max_sweep.empty()) throw ConfigError("run.n_max_sweep", "must not be empty");
  for (int n : c.n_max_sweep)
    if (n < 1) throw ConfigError("run.n_max_sweep", "entries must be >= 1");
}

/// Strict parse. Required keys: model.length, model.points, model.electrons, model.modes.
inline RunConfig parse_config(const std::string& text,
                              const std::vector<std::string>& overrides = {}) {
  using namespace detail;
  RunConfig c;
  std::map<std::string, int> seen;
  std::string section;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError("line " + std::to_string(lineno), "malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      if (section != "model" && section != "external" && section != "solver" && section != "run")
        throw ConfigError(section, "unknown section (line " + std::to_string(lineno) + ")");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(lineno), "expected key = value");
    if (section.empty())
      throw ConfigError("line " + std::to_string(lineno), "key outside of a section");
    const std::string key = section + "." + trim(line.substr(0, eq));
    if (seen.count(key))
      throw ConfigError(key, "duplicate key (lines " + std::to_string(seen[key]) + " and " +
                                 std::to_string(lineno) + ")");
    seen[key] = lineno;
    try {
      set_config_value(c, key, line.substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ConfigError(key, std::string(e.what()).substr(key.size() + 2) + " (line " +
                                 std::to_string(lineno) + ")");
    }
  }
  for (const auto& o : overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos) throw ConfigError(o, "override must look like section.key=value");
    const std::string key = trim(o.substr(0, eq));
    set_config_value(c, key, o.substr(eq + 1));
    seen[key] = 0;
  }
  for (const char* req : {"model.length", "model.points", "model.electrons", "model.modes"})
    if (!seen.count(req)) throw ConfigError(req, "required key missing");
  validate_config(c);
  return c;
}

/// Resolved configuration text with every key explicit. parse_config of the
/// output reproduces the same text.
inline std::string to_text(const RunConfig& c) {
  std::string out;
  std::string section;
  for (const auto& [key, value] : config_entries(c)) {
    const auto dot = key.find('.');
    const std::string sec = key.substr(0, dot);
    if (sec != section) {
      if (!section.empty()) out += "\n";
      out += "[" + sec + "]\n";
      section = sec;
    }
    out += key.substr(dot + 1) + " = " + value + "\n";
  }
  return out;
}

// ------------------------------------------------------------- model builders

inline ModeSet make_modes(const RunConfig& c) { return ModeSet(c.modes, c.length, c.coupling); }

inline TransverseCurrent make_coefficients(const std::vector<ModeCoefficient>& cs,
                                           const ModeSet& modes) {
  TransverseCurrent t = TransverseCurrent::zero(modes);
  for (const auto& x : cs)
    for (std::size_t n = 0; n < modes.size(); ++n)
      if (modes.label(n) == x.n) {
        t[n] = x.value;
        t[modes.partner(n)] = std::conj(x.value);
      }
  return t;
}

/// Raw potential before gauge fixing.
inline RealVector make_raw_potential(const RunConfig& c) {
  Grid1D grid(c.length, c.points);
  RealVector v = RealVector::Constant(c.points, c.v_offset);
  if (!c.v_samples.empty())
    for (int i = 0; i < c.points; ++i) v[i] += c.v_samples[i];
  for (const auto& h : c.v_cos)
    for (int i = 0; i < c.points; ++i)
      v[i] += h.amplitude * std::cos(two_pi * h.q * grid.position(i) / c.length);
  for (const auto& h : c.v_sin)
    for (int i = 0; i < c.points; ++i)
      v[i] += h.amplitude * std::sin(two_pi * h.q * grid.position(i) / c.length);
  return v;
}

inline HamiltonianSpec make_spec(const RunConfig& c) {
  Grid1D grid(c.length, c.points);
  ModeSet modes = make_modes(c);
  HamiltonianSpec s = make_spec(grid, modes, c.electrons);
  s.v = gauge_fix(make_raw_potential(c));
  s.j = make_coefficients(c.j, modes);
  s.b = make_coefficients(c.b, modes);
  s.interaction = {c.w0, c.softening};
  s.n_max = c.n_max;
  s.dipole = c.dipole;
  s.center = c.fock_center;
  s.dimension_budget = c.dimension_budget;
  s.validate();
  return s;
}

inline GroundStateOptions make_solver_options(const RunConfig& c) {
  GroundStateOptions o;
  o.method = c.eigensolver;
  o.tol = c.tol;
  o.max_matvecs = c.max_matvecs;
  o.block_size = c.block_size;
  o.krylov_dim = c.krylov_dim;
  o.max_basis = c.max_basis;
  o.seed = c.start_seed;
  o.degeneracy_tol = c.degeneracy_tol;
  return o;
}

inline SCFConfig make_scf_config(const RunConfig& c) {
  SCFConfig s;
  s.mixing = c.scf_mixing;
  s.anderson_depth = c.scf_anderson_depth;
  s.max_iterations = c.scf_max_iterations;
  s.density_tol = c.scf_density_tol;
  s.field_tol = c.scf_field_tol;
  s.init = c.scf_init;
  return s;
}

inline ScanOptions make_scan_options(const RunConfig& c) {
  ScanOptions o;
  o.count = c.samples;
  o.seed = c.seed;
  o.eps_ext = c.eps_ext;
  o.eps_int = c.eps_int;
  o.recovery_tol = c.recovery_tol;
  o.margin_tol = c.margin_tol;
  o.strategy.potential_offset = c.v_offset;
  o.solver = make_solver_options(c);
  return o;
}

}  // namespace qedft
