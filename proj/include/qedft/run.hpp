#pragma once

// Command dispatch, CSV observables and the JSON run manifest.
//
// Every run writes <out>/manifest.json, including failed ones. Exit status is
// 0 on pass or convergence, 2 on non-convergence or a failed check, 1 on
// usage and configuration errors.
//
// CSV schemas (header row, comma separated, 17 significant digits):
//   observables.csv   x,n,J,A      row i: site x_i, density, current on the bond
//                                  (x_i, x_i + dx), vector potential at x_i
//   field.csv         n,re,im      coherent amplitudes alpha_n
//   scf_history.csv   iteration,density_residual,field_residual,energy,coupling_identity
//   samples.csv       sample,energy,gap,degenerate,recovery_error
//   distances.csv     a,b,d_ext,d_int,margin_ab,margin_ba
//   maxwell.csv       n_max,n,re,im,abs

#include <json.hpp>

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "qedft/config.hpp"
#include "qedft/displacement.hpp"
#include "qedft/errors.hpp"
#include "qedft/field_core.hpp"
#include "qedft/hk_verify.hpp"
#include "qedft/maxwell_ks.hpp"
#include "qedft/pauli_fierz.hpp"

namespace qedft {

inline constexpr const char* artifact_version = "1.0.0";

using Json = nlohmann::ordered_json;

inline const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{"exact", "scf", "displace-check", "hk-scan",
                                              "maxwell-residual"};
  return names;
}

/// 64-bit FNV-1a, as 16 hex digits.
inline std::string fnv1a64(const std::string& data) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

inline std::string csv_number(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

class CsvTable {
public:
  explicit CsvTable(std::vector<std::string> header) : width_(header.size()) { row_strings(header); }

  void row(const std::vector<double>& values) {
    std::vector<std::string> s;
    for (double v : values) s.push_back(csv_number(v));
    row_strings(s);
  }
  const std::string& text() const { return text_; }

private:
  void row_strings(const std::vector<std::string>& cells) {
    if (cells.size() != width_) throw Error("csv row width mismatch");
    for (std::size_t i = 0; i < cells.size(); ++i) text_ += (i ? "," : "") + cells[i];
    text_ += "\n";
  }
  std::size_t width_;
  std::string text_;
};

/// <A> on the sites; uniform in the dipole approximation.
inline RealVector field_on_grid(const ClassicalField& field, const HamiltonianSpec& spec) {
  if (!spec.dipole) return field.on_grid(spec.grid, spec.modes);
  return RealVector::Constant(spec.grid.points(), field.value_at(0.0, spec.modes));
}

inline std::string observables_csv(const HamiltonianSpec& spec, const RealVector& n,
                                   const RealVector& bond_current, const ClassicalField& field) {
  CsvTable t({"x", "n", "J", "A"});
  const RealVector a = field_on_grid(field, spec);
  for (int i = 0; i < spec.grid.points(); ++i)
    t.row({spec.grid.position(i), n[i], bond_current[i], a[i]});
  return t.text();
}

inline std::string field_csv(const HamiltonianSpec& spec, const ClassicalField& field) {
  CsvTable t({"n", "re", "im"});
  for (std::size_t m = 0; m < spec.modes.size(); ++m)
    t.row({static_cast<double>(spec.modes.label(m)), field[m].real(), field[m].imag()});
  return t.text();
}

inline Json coefficients_json(const ModeSet& modes, const std::vector<complex>& c) {
  Json a = Json::array();
  for (std::size_t m = 0; m < modes.size(); ++m)
    a.push_back({modes.label(m), c[m].real(), c[m].imag()});
  return a;
}

inline double max_abs(const std::vector<complex>& c) {
  double worst = 0.0;
  for (auto x : c) worst = std::max(worst, std::abs(x));
  return worst;
}

inline Json config_json(const RunConfig& c) {
  Json out = Json::object();
  for (const auto& [key, value] : config_entries(c)) {
    const auto dot = key.find('.');
    out[key.substr(0, dot)][key.substr(dot + 1)] = value;
  }
  return out;
}

struct RunOutcome {
  int exit_code = 0;
  Json manifest;
};

namespace detail {

struct RunContext {
  std::filesystem::path out;
  Json results = Json::object();
  Json outputs = Json::object();
  std::string status = "ok";
  std::string message;
  int exit_code = 0;

  void write(const std::string& name, const std::string& text) {
    std::ofstream f(out / name, std::ios::binary);
    if (!f) throw Error("cannot write " + (out / name).string());
    f << text;
    outputs[name] = {{"fnv1a64", fnv1a64(text)}, {"bytes", text.size()}};
  }
  void fail(const std::string& st, const std::string& msg) {
    status = st;
    message = msg;
    exit_code = 2;
  }
};

inline Json ground_json(const GroundStateResult& g) {
  return {{"energy", g.energy},         {"first_excited", g.first_excited},
          {"gap", g.gap},               {"degenerate", g.degenerate},
          {"eigen_residual", g.residual}, {"truncation_tail", g.truncation_tail},
          {"matvecs", g.matvecs}};
}

inline Json current_json(const RealVector& j) {
  const double mean = j.mean();
  const double dev = (j.array() - mean).abs().maxCoeff();
  return {{"current_mean", mean}, {"current_max_deviation", dev}};
}

inline void run_exact(const RunConfig& cfg, RunContext& ctx) {
  const HamiltonianSpec spec = make_spec(cfg);
  PauliFierzOperator op(spec);
  const auto g = ground_state(op, make_solver_options(cfg));
  const RealVector n = density(op, g.state);
  const RealVector j = physical_current(op, g.state);
  const ClassicalField alpha = field_expectation(op, g.state);
  const auto r = maxwell_residual(op, g.state);
  const auto e = energy_decomposition(op, g.state);

  Json& res = ctx.results;
  res["hilbert_dimension"] = op.dimension();
  res.update(ground_json(g));
  res["energy_internal"] = e.internal;
  res["energy_external_scalar"] = e.external_scalar;
  res["energy_external_current"] = e.external_current;
  res["maxwell_residual_max"] = max_abs(r);
  res.update(current_json(j));
  res["field"] = coefficients_json(spec.modes, alpha.amplitudes);
  ctx.write("observables.csv", observables_csv(spec, n, j, alpha));
  ctx.write("field.csv", field_csv(spec, alpha));
  if (g.degenerate) ctx.message = "ground state is degenerate within solver.degeneracy_tol";
}

inline void run_scf(const RunConfig& cfg, RunContext& ctx) {
  const HamiltonianSpec spec = make_spec(cfg);
  const SCFResult r = scf_loop(spec, make_scf_config(cfg));
  const auto& st = r.state;
  const auto& e = st.energy;
  Json& res = ctx.results;
  res["converged"] = r.converged;
  res["iterations"] = r.iterations;
  res["energy"] = r.energy;
  res["energy_kinetic"] = e.kinetic;
  res["energy_external"] = e.external;
  res["energy_hartree"] = e.hartree;
  res["energy_photon"] = e.photon;
  res["energy_from_eigenvalues"] = e.total_from_eigenvalues();
  res["homo_lumo_gap"] = st.orbitals.homo_lumo_gap;
  res["density_residual"] = r.history.back().density_residual;
  res["field_residual"] = r.history.back().field_residual;
  res["coupling_identity"] = r.history.back().coupling_identity;
  res["maxwell_residual_max"] = max_abs(r.maxwell_residual);
  res.update(current_json(st.bond_current));
  res["field"] = coefficients_json(spec.modes, st.field.amplitudes);

  CsvTable h({"iteration", "density_residual", "field_residual", "energy", "coupling_identity"});
  for (const auto& it : r.history)
    h.row({static_cast<double>(it.iteration), it.density_residual, it.field_residual, it.energy,
           it.coupling_identity});
  ctx.write("scf_history.csv", h.text());
  ctx.write("observables.csv", observables_csv(spec, st.density, st.bond_current, st.field));
  ctx.write("field.csv", field_csv(spec, st.field));
  if (!r.converged) ctx.fail("not_converged", r.diagnostic);
  else ctx.message = r.diagnostic;
}

inline void run_displace_check(const RunConfig& cfg, RunContext& ctx) {
  const HamiltonianSpec spec = make_spec(cfg);
  const auto rep = verify_equivalence(spec, make_solver_options(cfg), cfg.equivalence_tol);
  Json& res = ctx.results;
  res["passed"] = rep.passed;
  res["energy"] = rep.original.energy;
  res["energy_transformed"] = rep.transformed.energy;
  res["shift"] = rep.shift;
  res["energy_difference"] = rep.energy_difference;
  res["energy_tolerance"] = rep.energy_tolerance;
  res["density_deviation"] = rep.density_deviation;
  res["matter_deviation"] = rep.matter_deviation;
  res["current_deviation"] = rep.current_deviation;
  res["field_deviation"] = rep.field_deviation;
  res["overlap_defect"] = rep.overlap_defect;
  res["leakage"] = rep.leakage;
  res["truncation_tail"] = rep.truncation_tail;
  res["degenerate"] = rep.degenerate;
  res["gap"] = rep.original.gap;
  res["eigen_residual"] = std::max(rep.original.residual, rep.transformed.residual);
  if (!rep.passed)
    ctx.fail("violation", rep.degenerate ? "degenerate ground state" : "problems differ beyond tolerance");
}

inline void run_hk_scan(const RunConfig& cfg, RunContext& ctx) {
  const HamiltonianSpec spec = make_spec(cfg);
  const auto rep = scan_injectivity(spec, make_scan_options(cfg));
  Json& res = ctx.results;
  res["samples"] = cfg.samples;
  res["violations"] = rep.violations.size();
  res["margin_failures"] = rep.margin_failures;
  res["recovery_failures"] = rep.recovery_failures;
  res["degenerate_count"] = rep.degenerate_count;
  res["min_ratio"] = rep.min_ratio;
  res["min_margin"] = rep.min_margin;
  res["max_margin_route_gap"] = rep.max_margin_route_gap;
  res["max_recovery_error"] = rep.max_recovery_error;
  Json viol = Json::array();
  for (const auto& v : rep.violations)
    viol.push_back({{"a", v.a}, {"b", v.b}, {"d_ext", v.d_ext}, {"d_int", v.d_int}});
  res["violation_pairs"] = viol;
  res["energies"] = rep.energies;
  res["gaps"] = rep.gaps;

  CsvTable s({"sample", "energy", "gap", "degenerate", "recovery_error"});
  for (int i = 0; i < cfg.samples; ++i)
    s.row({static_cast<double>(i), rep.energies[i], rep.gaps[i], rep.degenerate[i] ? 1.0 : 0.0,
           rep.recovery_errors[i]});
  ctx.write("samples.csv", s.text());
  CsvTable d({"a", "b", "d_ext", "d_int", "margin_ab", "margin_ba"});
  for (int a = 0; a < cfg.samples; ++a)
    for (int b = a + 1; b < cfg.samples; ++b)
      d.row({static_cast<double>(a), static_cast<double>(b), rep.d_ext(a, b), rep.d_int(a, b),
             rep.margins(a, b), rep.margins(b, a)});
  ctx.write("distances.csv", d.text());
  if (!rep.passed()) {
    std::ostringstream m;
    m << rep.violations.size() << " violations, " << rep.margin_failures << " margin failures, "
      << rep.recovery_failures << " recovery failures";
    ctx.fail("violation", m.str());
  }
}

inline void run_maxwell_residual(const RunConfig& cfg, RunContext& ctx) {
  HamiltonianSpec spec = make_spec(cfg);
  CsvTable t({"n_max", "n", "re", "im", "abs"});
  Json sweep = Json::array();
  std::vector<double> worst;
  for (int nm : cfg.n_max_sweep) {
    spec.n_max = nm;
    PauliFierzOperator op(spec);
    const auto g = ground_state(op, make_solver_options(cfg));
    const auto r = maxwell_residual(op, g.state);
    for (std::size_t m = 0; m < r.size(); ++m)
      t.row({static_cast<double>(nm), static_cast<double>(spec.modes.label(m)), r[m].real(),
             r[m].imag(), std::abs(r[m])});
    worst.push_back(max_abs(r));
    sweep.push_back({{"n_max", nm},
                     {"residual_max", worst.back()},
                     {"energy", g.energy},
                     {"truncation_tail", g.truncation_tail},
                     {"eigen_residual", g.residual}});
  }
  bool monotone = true;
  for (std::size_t i = 1; i < worst.size(); ++i)
    if (worst[i] > 1.1 * worst[i - 1]) monotone = false;
  Json& res = ctx.results;
  res["sweep"] = sweep;
  res["residual_max_final"] = worst.back();
  res["monotone"] = monotone;
  res["tolerance"] = cfg.maxwell_tol;
  ctx.write("maxwell.csv", t.text());
  if (worst.back() > cfg.maxwell_tol) ctx.fail("violation", "residual above run.maxwell_tol at the largest n_max");
  else if (!monotone) ctx.fail("violation", "residual does not decrease with n_max");
}

inline void write_manifest(const std::filesystem::path& out, const Json& manifest) {
  std::ofstream f(out / "manifest.json", std::ios::binary);
  if (f) f << manifest.dump(2) << "\n";
}

}  // namespace detail

/// Runs one command on a parsed configuration and writes all artifacts into out.
inline RunOutcome run_command(const std::string& command, const RunConfig& cfg,
                              const std::filesystem::path& out) {
  const auto t0 = std::chrono::steady_clock::now();
  std::filesystem::create_directories(out);
  detail::RunContext ctx;
  ctx.out = out;
  try {
    if (command == "exact") detail::run_exact(cfg, ctx);
    else if (command == "scf") detail::run_scf(cfg, ctx);
    else if (command == "displace-check") detail::run_displace_check(cfg, ctx);
    else if (command == "hk-scan") detail::run_hk_scan(cfg, ctx);
    else if (command == "maxwell-residual") detail::run_maxwell_residual(cfg, ctx);
    else {
      ctx.status = "usage_error";
      ctx.message = "unknown command '" + command + "'";
      ctx.exit_code = 1;
    }
  } catch (const ConvergenceError& e) {
    ctx.fail("not_converged", e.what());
  } catch (const std::exception& e) {
    ctx.status = "error";
    ctx.message = e.what();
    ctx.exit_code = 1;
  }
  if (ctx.exit_code != 1 || !ctx.outputs.empty()) ctx.write("resolved.ini", to_text(cfg));

  Json m;
  m["artifact"] = "qedft";
  m["version"] = artifact_version;
  m["command"] = command;
  m["status"] = ctx.status;
  m["exit_code"] = ctx.exit_code;
  m["message"] = ctx.message;
  m["seed"] = cfg.seed;
  m["config"] = config_json(cfg);
  m["results"] = ctx.results;
  m["outputs"] = ctx.outputs;
  m["wall_time_seconds"] =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  detail::write_manifest(out, m);
  return {ctx.exit_code, m};
}

/// Full pipeline from config text: parse, apply overrides and seed, run. A
/// configuration error still leaves a manifest when an output directory is known.
inline RunOutcome run_from_text(const std::string& command, const std::string& config_text,
                                const std::vector<std::string>& overrides,
                                std::optional<std::uint64_t> seed,
                                const std::filesystem::path& out) {
  try {
    std::vector<std::string> all = overrides;
    if (seed) all.push_back("run.seed=" + std::to_string(*seed));
    const RunConfig cfg = parse_config(config_text, all);
    return run_command(command, cfg, out);
  } catch (const ConfigError& e) {
    Json m;
    m["artifact"] = "qedft";
    m["version"] = artifact_version;
    m["command"] = command;
    m["status"] = "config_error";
    m["exit_code"] = 1;
    m["message"] = e.what();
    m["key"] = e.key();
    std::error_code ec;
    std::filesystem::create_directories(out, ec);
    if (!ec) detail::write_manifest(out, m);
    return {1, m};
  }
}

}  // namespace qedft
