#pragma once

// Coherent displacement D[b] = prod_n exp(b_n a_n^dag - conj(b_n) a_n), with
// D a_n D^dag = a_n - b_n. Conjugating the Hamiltonian with D removes the
// external vector potential b from the matter coupling and turns it into the
// extra current j + b plus a constant.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

#include "qedft/errors.hpp"
#include "qedft/field_core.hpp"
#include "qedft/fock.hpp"
#include "qedft/pauli_fierz.hpp"

namespace qedft {

/// Tensor product of truncated single-mode displacements. Exact matrix
/// elements, so the product is not unitary: see displacement_leakage.
inline fock::ProductOperator displacement_operator(const TransverseCurrent& b,
                                                   const ModeSet& modes, int n_max) {
  if (b.size() != modes.size()) throw Error("displacement does not match mode set");
  for (const auto& c : b.coeffs)
    if (!std::isfinite(c.real()) || !std::isfinite(c.imag()))
      throw Error("displacement has non-finite coefficients");
  fock::ProductOperator d;
  d.layout = fock::Layout(modes.size(), n_max);
  for (std::size_t n = 0; n < modes.size(); ++n)
    d.factors.push_back(fock::displacement_matrix(b[n], n_max));
  return d;
}

/// Largest deviation of the truncated single-mode factors from unitarity,
/// max_n ||D_n^dag D_n - 1||_2 restricted to the levels m <= low.
inline double displacement_leakage(const fock::ProductOperator& d, int low) {
  double worst = 0.0;
  for (const auto& f : d.factors) {
    const int k = std::min<int>(low + 1, static_cast<int>(f.cols()));
    Eigen::MatrixXcd g = (f.adjoint() * f).topLeftCorner(k, k) -
                         Eigen::MatrixXcd::Identity(k, k);
    worst = std::max(worst, g.operatorNorm());
  }
  return worst;
}

/// D[b] applied photon-block-wise to a composite state.
inline ComplexVector apply_displacement(const fock::ProductOperator& d, const ComplexVector& psi) {
  ComplexVector out = psi;
  const std::size_t dph = d.layout.size();
  std::vector<complex> scratch(dph);
  for (std::size_t start = 0; start < static_cast<std::size_t>(out.size()); start += dph)
    for (std::size_t m = 0; m < d.factors.size(); ++m)
      fock::apply_on_mode(out.data() + start, d.layout, m, d.factors[m], scratch.data());
  return out;
}

struct TransformedSpec {
  HamiltonianSpec spec;  ///< b' = 0, j' = j + b
  double shift = 0.0;    ///< E_0 = E_0' + shift
};

inline double displacement_shift(const TransverseCurrent& b, const TransverseCurrent& j,
                                 const ModeSet& modes) {
  double s = 0.0;
  for (std::size_t n = 0; n < modes.size(); ++n)
    s += modes.frequency(n) * (std::norm(b[n]) + 2.0 * (b[n] * std::conj(j[n])).real());
  return s;
}

inline TransformedSpec transform_spec(const HamiltonianSpec& spec) {
  TransformedSpec t{spec, displacement_shift(spec.b, spec.j, spec.modes)};
  t.spec.j = spec.j + spec.b;
  t.spec.b = TransverseCurrent::zero(spec.modes);
  return t;
}

struct DisplacementReport {
  double shift = 0.0;
  double energy_difference = 0.0;   ///< |E_0 - E_0' - shift|
  double density_deviation = 0.0;   ///< max_x |n - n'|
  double matter_deviation = 0.0;    ///< max |rho_ij - rho'_ij| and kinetic/interaction energies
  double current_deviation = 0.0;   ///< max_b |J - J'|
  double field_deviation = 0.0;     ///< max_x |<A> - (<A>' - b(x))|
  double overlap_defect = 0.0;      ///< |1 - |<D psi, psi'>||
  double leakage = 0.0;             ///< |1 - ||D psi|||
  double truncation_tail = 0.0;     ///< worse of the two ground states
  double tolerance = 1e-7;
  double energy_tolerance = 1e-7;   ///< includes the leakage-scaled slack
  bool degenerate = false;
  bool passed = false;
  GroundStateResult original;
  GroundStateResult transformed;
};

inline DisplacementReport verify_equivalence(const HamiltonianSpec& spec,
                                             const GroundStateOptions& opts = {},
                                             double tolerance = 1e-7) {
  DisplacementReport rep;
  rep.tolerance = tolerance;
  auto t = transform_spec(spec);
  rep.shift = t.shift;

  PauliFierzOperator op(spec);
  PauliFierzOperator opd(t.spec);
  rep.original = ground_state(op, opts);
  rep.transformed = ground_state(opd, opts);
  const auto& psi = rep.original.state;
  const auto& psid = rep.transformed.state;
  rep.degenerate = rep.original.degenerate || rep.transformed.degenerate;
  rep.truncation_tail = std::max(rep.original.truncation_tail, rep.transformed.truncation_tail);

  rep.energy_difference = std::abs(rep.original.energy - rep.transformed.energy - rep.shift);
  rep.density_deviation = (density(op, psi) - density(opd, psid)).cwiseAbs().maxCoeff();
  rep.current_deviation =
      (physical_current(op, psi) - physical_current(opd, psid)).cwiseAbs().maxCoeff();
  rep.matter_deviation =
      (one_body_density_matrix(op, psi) - one_body_density_matrix(opd, psid)).cwiseAbs().maxCoeff();
  rep.matter_deviation =
      std::max({rep.matter_deviation, std::abs(kinetic_energy(op, psi) - kinetic_energy(opd, psid)),
                std::abs(interaction_energy(op, psi) - interaction_energy(opd, psid))});

  const auto& grid = spec.grid;
  const auto& modes = spec.modes;
  const RealVector a = field_expectation(op, psi).on_grid(grid, modes);
  const RealVector ad = field_expectation(opd, psid).on_grid(grid, modes);
  const RealVector bx = ClassicalField{spec.b.coeffs}.on_grid(grid, modes);
  rep.field_deviation = (a - (ad - bx)).cwiseAbs().maxCoeff();

  // D[b] maps the original ground state onto the transformed one, up to a phase.
  // Both operators must share the Fock centre for the comparison to be direct.
  const TransverseCurrent rel = b_to_current(spec.b) + op.center() - opd.center();
  auto d = displacement_operator(rel, modes, spec.n_max);
  const ComplexVector dpsi = apply_displacement(d, psi);
  rep.leakage = std::abs(1.0 - dpsi.norm());
  rep.overlap_defect = std::abs(1.0 - std::abs(dpsi.dot(psid)));

  rep.energy_tolerance = tolerance + 10.0 * (rep.truncation_tail + rep.leakage);
  rep.passed = !rep.degenerate && rep.energy_difference <= rep.energy_tolerance &&
               rep.density_deviation <= tolerance && rep.matter_deviation <= tolerance &&
               rep.current_deviation <= tolerance && rep.field_deviation <= tolerance;
  return rep;
}

}  // namespace qedft
