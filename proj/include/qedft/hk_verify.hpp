#pragma once

// Falsification harness for the ground-state map (v, j) -> (n, A): sample
// external pairs, solve exactly, and look for distinct inputs with
// indistinguishable internal pairs. Also checks the two ingredients of the
// uniqueness argument: recovery of j from the Maxwell equation, and the
// strict variational cross inequalities between distinct ground states.

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "qedft/errors.hpp"
#include "qedft/field_core.hpp"
#include "qedft/pauli_fierz.hpp"

namespace qedft {

struct ExternalPair {
  RealVector v;
  TransverseCurrent j;
};

/// j_rec,n = alpha_n - gamma J_n: the Maxwell equation solved for the external
/// current, with -A'' taken spectrally (the identity in mode space).
inline TransverseCurrent recover_external(const InternalPair& internal, const RealVector& bond_current,
                                          const HamiltonianSpec& spec) {
  const TransverseCurrent minus_laplacian{internal.field.amplitudes};
  return minus_laplacian - spec.modes.coupling() * bond_current_coefficients(bond_current, spec);
}

struct SolvedInstance {
  HamiltonianSpec spec;
  GroundStateResult ground;
  InternalPair internal;
  RealVector bond_current;
  TransverseCurrent center;  ///< Fock centre the state is expressed in
};

inline SolvedInstance solve_instance(const HamiltonianSpec& spec, const GroundStateOptions& opts) {
  PauliFierzOperator op(spec);
  SolvedInstance s{spec, ground_state(op, opts), {}, {}, op.center()};
  s.internal = internal_pair(op, s.ground.state);
  s.bond_current = physical_current(op, s.ground.state);
  return s;
}

struct CrossCheck {
  /// <Psi_b|H_a|Psi_b> - E_a, from the energy-shift formula and from a direct apply.
  double margin_ab = 0.0;
  double margin_ab_direct = 0.0;
  double margin_ba = 0.0;
  double margin_ba_direct = 0.0;
  /// Sum of both margins; the uniqueness argument needs it positive.
  double sum() const { return margin_ab + margin_ba; }
};

namespace detail {

/// E_b + integral n_b (v_a - v_b) - sum_n w_n (a~_b,n conj(j_a,n - j_b,n)).
inline double cross_energy(const SolvedInstance& a, const SolvedInstance& b) {
  const auto& modes = a.spec.modes;
  double e = b.ground.energy + grid_integral(b.internal.density, a.spec.v - b.spec.v, a.spec.grid);
  const TransverseCurrent dj = a.spec.j - b.spec.j;
  for (std::size_t n = 0; n < modes.size(); ++n)
    e -= modes.frequency(n) *
         (b.internal.field.symmetric_amplitude(n, modes) * std::conj(dj[n])).real();
  return e;
}

/// <Psi_b|H_a|Psi_b> by applying H_a written in the Fock centre of Psi_b.
inline double cross_energy_direct(const SolvedInstance& a, const SolvedInstance& b) {
  PauliFierzOperator op(a.spec, b.center);
  return expectation(op, b.ground.state);
}

}  // namespace detail

inline CrossCheck variational_cross_check(const SolvedInstance& a, const SolvedInstance& b) {
  CrossCheck c;
  c.margin_ab = detail::cross_energy(a, b) - a.ground.energy;
  c.margin_ba = detail::cross_energy(b, a) - b.ground.energy;
  c.margin_ab_direct = detail::cross_energy_direct(a, b) - a.ground.energy;
  c.margin_ba_direct = detail::cross_energy_direct(b, a) - b.ground.energy;
  return c;
}

inline double external_distance(const SolvedInstance& a, const SolvedInstance& b) {
  return grid_norm(a.spec.v - b.spec.v, a.spec.grid) + (a.spec.j - b.spec.j).norm();
}

inline double internal_distance(const SolvedInstance& a, const SolvedInstance& b) {
  double da = 0.0;
  for (std::size_t n = 0; n < a.internal.field.size(); ++n)
    da += std::norm(a.internal.field[n] - b.internal.field[n]);
  return grid_norm(a.internal.density - b.internal.density, a.spec.grid) + std::sqrt(da);
}

struct SampleStrategy {
  int potential_harmonics = 2;  ///< cosines with q = 1..this
  double amplitude_min = 0.05;
  double amplitude_max = 0.5;
  double current_min = 0.05;
  double current_max = 0.5;
  double potential_offset = 0.0;  ///< constant added before gauge_fix
};

/// Random smooth external pair: low-harmonic potential and a conjugation-symmetric current.
inline ExternalPair sample_external(const HamiltonianSpec& base, const SampleStrategy& st,
                                    std::mt19937_64& rng) {
  std::uniform_real_distribution<double> amp(st.amplitude_min, st.amplitude_max);
  std::uniform_real_distribution<double> cur(st.current_min, st.current_max);
  std::uniform_real_distribution<double> phase(0.0, two_pi);
  const auto& grid = base.grid;
  ExternalPair p;
  p.v = RealVector::Constant(grid.points(), st.potential_offset);
  for (int q = 1; q <= st.potential_harmonics; ++q) {
    const double a = amp(rng);
    const double ph = phase(rng);
    for (int i = 0; i < grid.points(); ++i)
      p.v[i] += a * std::cos(two_pi * q * grid.position(i) / grid.length() + ph);
  }
  p.v = gauge_fix(p.v);
  p.j = TransverseCurrent::zero(base.modes);
  for (std::size_t n = 0; n < base.modes.size(); ++n) {
    if (base.modes.label(n) < 0) continue;
    p.j[n] = std::polar(cur(rng), phase(rng));
    p.j[base.modes.partner(n)] = std::conj(p.j[n]);
  }
  return p;
}

struct ScanOptions {
  int count = 10;
  std::uint64_t seed = 1;
  double eps_ext = 1e-2;
  double eps_int = 1e-6;
  double recovery_tol = 1e-7;
  double margin_tol = 1e-10;
  SampleStrategy strategy;
  GroundStateOptions solver;
};

struct ScanViolation {
  int a = 0;
  int b = 0;
  double d_ext = 0.0;
  double d_int = 0.0;
};

struct ScanReport {
  std::vector<ExternalPair> externals;
  std::vector<InternalPair> internals;
  std::vector<double> energies;
  std::vector<double> gaps;
  std::vector<bool> degenerate;
  std::vector<double> recovery_errors;
  Eigen::MatrixXd d_ext, d_int;
  Eigen::MatrixXd margins;  ///< margins(a, b) = <Psi_b|H_a|Psi_b> - E_a
  double max_margin_route_gap = 0.0;  ///< |formula - direct| over all pairs
  double min_ratio = std::numeric_limits<double>::infinity();
  double min_margin = std::numeric_limits<double>::infinity();
  double max_recovery_error = 0.0;
  std::vector<ScanViolation> violations;
  int degenerate_count = 0;
  int margin_failures = 0;
  int recovery_failures = 0;

  bool injective() const { return violations.empty(); }
  bool passed() const { return violations.empty() && margin_failures == 0 && recovery_failures == 0; }
};

inline ScanReport scan_injectivity(const HamiltonianSpec& base, const ScanOptions& opt) {
  if (opt.count < 1) throw Error("scan needs at least one sample");
  std::mt19937_64 rng(opt.seed);
  ScanReport rep;
  std::vector<SolvedInstance> solved;
  for (int s = 0; s < opt.count; ++s) {
    ExternalPair p = sample_external(base, opt.strategy, rng);
    HamiltonianSpec spec = base;
    spec.v = p.v;
    spec.j = p.j;
    solved.push_back(solve_instance(spec, opt.solver));
    const auto& inst = solved.back();
    const TransverseCurrent rec = recover_external(inst.internal, inst.bond_current, spec);
    const double err = (rec - spec.j).norm();
    rep.externals.push_back(std::move(p));
    rep.internals.push_back(inst.internal);
    rep.energies.push_back(inst.ground.energy);
    rep.gaps.push_back(inst.ground.gap);
    rep.degenerate.push_back(inst.ground.degenerate);
    rep.recovery_errors.push_back(err);
    rep.max_recovery_error = std::max(rep.max_recovery_error, err);
    if (inst.ground.degenerate) ++rep.degenerate_count;
    else if (err > opt.recovery_tol) ++rep.recovery_failures;
  }

  const int n = opt.count;
  rep.d_ext = Eigen::MatrixXd::Zero(n, n);
  rep.d_int = Eigen::MatrixXd::Zero(n, n);
  rep.margins = Eigen::MatrixXd::Zero(n, n);
  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b < n; ++b) {
      const double de = external_distance(solved[a], solved[b]);
      const double di = internal_distance(solved[a], solved[b]);
      rep.d_ext(a, b) = rep.d_ext(b, a) = de;
      rep.d_int(a, b) = rep.d_int(b, a) = di;
      if (rep.degenerate[a] || rep.degenerate[b]) continue;
      if (de > 0) rep.min_ratio = std::min(rep.min_ratio, di / de);
      if (de > opt.eps_ext && di < opt.eps_int) rep.violations.push_back({a, b, de, di});
      const CrossCheck c = variational_cross_check(solved[a], solved[b]);
      rep.margins(a, b) = c.margin_ab;
      rep.margins(b, a) = c.margin_ba;
      rep.max_margin_route_gap =
          std::max({rep.max_margin_route_gap, std::abs(c.margin_ab - c.margin_ab_direct),
                    std::abs(c.margin_ba - c.margin_ba_direct)});
      rep.min_margin = std::min({rep.min_margin, c.margin_ab, c.margin_ba});
      if (di > 0 && (c.margin_ab <= opt.margin_tol || c.margin_ba <= opt.margin_tol))
        ++rep.margin_failures;
    }
  return rep;
}

}  // namespace qedft
