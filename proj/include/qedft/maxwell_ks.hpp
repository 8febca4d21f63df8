#pragma once

// Maxwell-Kohn-Sham mean-field solver: non-interacting orbitals in the
// classical field A_cl coupled back through the static Maxwell equation
//   alpha_n = j_n + gamma J_s,n + j_xc,n.
// The auxiliary state is a Slater determinant times coherent photon states.
// Its link expectation is exp(-i gamma dx A_cl(x_b)) times the vacuum factor
// kappa = exp(-(gamma dx)^2 sum_n f_n^2 / 2), so the orbitals hop with t kappa.

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "qedft/errors.hpp"
#include "qedft/field_core.hpp"
#include "qedft/pauli_fierz.hpp"

namespace qedft {

/// v_H(x) = dx sum_x' w(x - x') |n(x')|, returned with zero mean.
inline RealVector hartree_potential(const RealVector& n, const Grid1D& grid,
                                    const Interaction& w) {
  const int ng = grid.points();
  RealVector vh = RealVector::Zero(ng);
  if (w.strength == 0.0) return vh;
  for (int i = 0; i < ng; ++i) {
    double acc = 0.0;
    for (int k = 0; k < ng; ++k)
      acc += w(grid.position(i) - grid.position(k), grid.length()) * std::abs(n[k]);
    vh[i] = grid.spacing() * acc;
  }
  return gauge_fix(vh);
}

/// (1/2) dx^2 sum_xx' w(x - x') |n(x)| |n(x')|.
inline double hartree_energy(const RealVector& n, const Grid1D& grid, const Interaction& w) {
  const int ng = grid.points();
  double e = 0.0;
  for (int i = 0; i < ng; ++i)
    for (int k = 0; k < ng; ++k)
      e += w(grid.position(i) - grid.position(k), grid.length()) * std::abs(n[i]) * std::abs(n[k]);
  return 0.5 * grid.spacing() * grid.spacing() * e;
}

/// Vacuum renormalization of the hopping seen by a coherent photon state.
inline double coherent_link_factor(const ModeSet& modes, const Grid1D& grid) {
  const double gdx = modes.coupling() * grid.spacing();
  double s = 0.0;
  for (std::size_t n = 0; n < modes.size(); ++n) s += modes.field_prefactor(n) * modes.field_prefactor(n);
  return std::exp(-0.5 * gdx * gdx * s);
}

/// exp(-i gamma dx (A_cl + b)(x_b)) on every bond.
inline std::vector<complex> classical_link_phases(const ClassicalField& field,
                                                  const HamiltonianSpec& spec) {
  const auto& grid = spec.grid;
  const auto& modes = spec.modes;
  const double gdx = modes.coupling() * grid.spacing();
  std::vector<complex> ph(grid.points());
  for (int bond = 0; bond < grid.points(); ++bond) {
    const double xb = grid.bond_position(bond);
    double a = 0.0;
    for (std::size_t n = 0; n < modes.size(); ++n) {
      const complex mode = spec.dipole ? complex{1.0} : std::polar(1.0, modes.wavenumber(n) * xb);
      a += 2.0 * modes.field_prefactor(n) * ((field[n] + spec.b[n]) * mode).real();
    }
    const double angle = -gdx * a;
    ph[bond] = angle == 0.0 ? complex{1.0, 0.0} : std::polar(1.0, angle);
  }
  return ph;
}

/// Single-particle operator: kinetic hopping with link phases scaled by kappa,
/// plus -v + v_hxc on the diagonal. Same lattice form as the exact solver.
inline Eigen::MatrixXcd ks_hamiltonian(const Grid1D& grid, const RealVector& v,
                                       const RealVector& v_hxc,
                                       const std::vector<complex>& link_phases, double kappa) {
  const int ng = grid.points();
  if (static_cast<int>(link_phases.size()) != ng) throw Error("one link phase per bond expected");
  const double dx2 = grid.spacing() * grid.spacing();
  const double t = 0.5 / dx2;
  Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(ng, ng);
  for (int i = 0; i < ng; ++i) h(i, i) = 1.0 / dx2 - v[i] + v_hxc[i];
  for (int i = 0; i < ng; ++i) {
    const int next = grid.wrap(i + 1);
    const complex amp = -t * kappa * link_phases[i];
    h(next, i) += amp;
    h(i, next) += std::conj(amp);
  }
  return h;
}

/// Uniform link phases for the field-free operator.
inline std::vector<complex> trivial_link_phases(const Grid1D& grid) {
  return std::vector<complex>(grid.points(), complex{1.0, 0.0});
}

struct Orbitals {
  Eigen::MatrixXcd phi;      ///< columns are orbitals, sum_i |phi_i|^2 = 1
  Eigen::VectorXd energies;  ///< occupied eigenvalues, ascending
  double homo_lumo_gap = 0.0;
  double residual = 0.0;     ///< max ||h phi - e phi||
};

inline Orbitals solve_orbitals(const Eigen::MatrixXcd& h, int electrons) {
  if (electrons < 1 || electrons > h.rows()) throw Error("cannot occupy that many orbitals");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h);
  if (es.info() != Eigen::Success) throw ConvergenceError("orbital eigensolver failed", INFINITY);
  Orbitals o;
  o.phi = es.eigenvectors().leftCols(electrons);
  o.energies = es.eigenvalues().head(electrons);
  o.homo_lumo_gap = electrons < h.rows()
                        ? es.eigenvalues()[electrons] - es.eigenvalues()[electrons - 1]
                        : INFINITY;
  for (int k = 0; k < electrons; ++k) {
    Eigen::Index imax;
    o.phi.col(k).cwiseAbs().maxCoeff(&imax);
    o.phi.col(k) *= std::polar(1.0, -std::arg(o.phi(imax, k)));
    o.residual = std::max(o.residual, (h * o.phi.col(k) - o.energies[k] * o.phi.col(k)).norm());
  }
  return o;
}

inline RealVector ks_density(const Orbitals& o, const Grid1D& grid) {
  return -o.phi.cwiseAbs2().rowwise().sum() / grid.spacing();
}

/// Bond currents J_b = 2 t kappa Im(phase_b sum_k conj(phi_k(i+1)) phi_k(i)).
/// Equal to -dE/d(theta_b) when the phase of bond b is rotated by e^{-i theta_b}.
inline RealVector ks_bond_current(const Orbitals& o, const Grid1D& grid,
                                  const std::vector<complex>& link_phases, double kappa) {
  const int ng = grid.points();
  const double t = 0.5 / (grid.spacing() * grid.spacing());
  RealVector j(ng);
  for (int i = 0; i < ng; ++i) {
    const int next = grid.wrap(i + 1);
    complex x{};
    for (Eigen::Index k = 0; k < o.phi.cols(); ++k) x += std::conj(o.phi(next, k)) * o.phi(i, k);
    j[i] = 2.0 * t * kappa * (link_phases[i] * x).imag();
  }
  return j;
}

/// KS physical current as mode coefficients.
inline TransverseCurrent ks_physical_current(const Orbitals& o, const ClassicalField& field,
                                             const HamiltonianSpec& spec) {
  const auto phases = classical_link_phases(field, spec);
  return bond_current_coefficients(
      ks_bond_current(o, spec.grid, phases, coherent_link_factor(spec.modes, spec.grid)), spec);
}

/// Coherent amplitudes solving the static Maxwell equation with all sources.
inline ClassicalField update_field(const TransverseCurrent& j, const TransverseCurrent& js,
                                   const TransverseCurrent& jxc, const ModeSet& modes) {
  return solve_static_maxwell(j + modes.coupling() * js + jxc, modes);
}

/// Extension point for functionals beyond mean field. Both members may be empty.
struct XcFunctional {
  std::string name = "mean-field";
  std::function<RealVector(const RealVector& n, const ClassicalField& a)> potential;
  std::function<TransverseCurrent(const RealVector& n, const ClassicalField& a)> current;
};

enum class ScfInit { zero_field, external_field };

struct SCFConfig {
  double mixing = 0.3;
  int anderson_depth = 0;  ///< 0 selects plain linear mixing
  int max_iterations = 200;
  double density_tol = 1e-8;
  double field_tol = 1e-8;
  ScfInit init = ScfInit::zero_field;
  XcFunctional xc;

  void validate() const {
    if (!(mixing > 0.0 && mixing <= 1.0)) throw ConfigError("scf_mixing", "must lie in (0, 1]");
    if (anderson_depth < 0) throw ConfigError("scf_anderson_depth", "must be >= 0");
    if (max_iterations < 1) throw ConfigError("scf_max_iterations", "must be >= 1");
    if (!(density_tol > 0.0)) throw ConfigError("scf_density_tol", "must be > 0");
    if (!(field_tol > 0.0)) throw ConfigError("scf_field_tol", "must be > 0");
  }
};

struct KSEnergy {
  double kinetic = 0.0;   ///< orbital kinetic + coupling to A_cl (through the links)
  double external = 0.0;  ///< integral of n v
  double hartree = 0.0;
  double photon = 0.0;    ///< sum w |alpha|^2 - sum w (alpha conj(j) + c.c.)
  double xc = 0.0;
  double eigenvalue_sum = 0.0;
  double hxc_double_counting = 0.0;  ///< integral of |n| v_hxc
  /// gamma integral J_s A_cl over bonds, and its mode-space form
  /// gamma sum w (alpha conj(J_s) + c.c.); equal by construction.
  double coupling_grid = 0.0;
  double coupling_modes = 0.0;

  double total() const { return kinetic + external + hartree + photon + xc; }
  /// Eigenvalue route to the same number.
  double total_from_eigenvalues() const {
    return eigenvalue_sum - hxc_double_counting + hartree + photon + xc;
  }
};

struct KSState {
  Orbitals orbitals;
  RealVector density;
  ClassicalField field;
  RealVector v_hxc;
  RealVector bond_current;
  TransverseCurrent current;  ///< J_s mode coefficients
  KSEnergy energy;
  int iteration = 0;
};

/// Energy of the product state Slater(orbitals) x coherent(field), Hartree level.
inline KSEnergy mean_field_energy(const KSState& ks, const HamiltonianSpec& spec) {
  const auto& grid = spec.grid;
  const auto& modes = spec.modes;
  const auto phases = classical_link_phases(ks.field, spec);
  const double kappa = coherent_link_factor(modes, grid);
  const RealVector zero = RealVector::Zero(grid.points());
  const Eigen::MatrixXcd hkin = ks_hamiltonian(grid, zero, zero, phases, kappa);
  KSEnergy e;
  for (Eigen::Index k = 0; k < ks.orbitals.phi.cols(); ++k)
    e.kinetic += ks.orbitals.phi.col(k).dot(hkin * ks.orbitals.phi.col(k)).real();
  e.external = grid_integral(ks.density, spec.v, grid);
  e.hartree = hartree_energy(ks.density, grid, spec.interaction);
  for (std::size_t n = 0; n < modes.size(); ++n)
    e.photon += modes.frequency(n) *
                (std::norm(ks.field[n]) - 2.0 * (ks.field[n] * std::conj(spec.j[n])).real());
  e.eigenvalue_sum = ks.orbitals.energies.sum();
  e.hxc_double_counting = -grid_integral(ks.density, ks.v_hxc, grid);

  const double gamma = modes.coupling();
  if (spec.dipole) {
    double a = 0.0;
    for (std::size_t n = 0; n < modes.size(); ++n)
      a += 2.0 * modes.field_prefactor(n) * ks.field[n].real();
    e.coupling_grid = gamma * grid.spacing() * ks.bond_current.sum() * a;
  } else {
    const RealVector a = ks.field.on_grid(grid, modes, 0.5 * grid.spacing());
    e.coupling_grid = gamma * grid_integral(ks.bond_current, a, grid);
  }
  e.coupling_modes = gamma * coupling_bilinear(ks.field, ks.current, modes);
  return e;
}

struct SCFIteration {
  int iteration = 0;
  double density_residual = 0.0;  ///< dx sum |n_out - n_in|
  double field_residual = 0.0;    ///< ||alpha_out - alpha_in||_2
  double energy = 0.0;
  double coupling_identity = 0.0; ///< |coupling_grid - coupling_modes|
};

struct SCFResult {
  bool converged = false;
  int iterations = 0;
  KSState state;
  double energy = 0.0;
  std::vector<SCFIteration> history;
  std::vector<complex> maxwell_residual;  ///< w (alpha - j - gamma J_s - j_xc) per mode
  std::string diagnostic;
};

namespace detail {

/// Linear or Anderson (Pulay) mixing on a pair of real blocks. Inner products are
/// taken block by block, so an empty or all-zero second block leaves the
/// arithmetic of the first untouched.
class PairMixer {
public:
  struct Pair {
    RealVector first;
    RealVector second;
  };

  PairMixer(double beta, int depth) : beta_(beta), depth_(depth) {}

  Pair mix(const Pair& in, const Pair& out) {
    Pair f{out.first - in.first, out.second - in.second};
    Pair next{in.first + beta_ * f.first, in.second + beta_ * f.second};
    if (depth_ > 0 && has_prev_) {
      dx_.push_back({in.first - prev_in_.first, in.second - prev_in_.second});
      df_.push_back({f.first - prev_f_.first, f.second - prev_f_.second});
      if (static_cast<int>(dx_.size()) > depth_) {
        dx_.erase(dx_.begin());
        df_.erase(df_.begin());
      }
      const int m = static_cast<int>(df_.size());
      Eigen::MatrixXd a(m, m);
      Eigen::VectorXd rhs(m);
      for (int i = 0; i < m; ++i) {
        for (int k = 0; k < m; ++k) a(i, k) = dot(df_[i], df_[k]);
        rhs[i] = dot(df_[i], f);
      }
      const Eigen::VectorXd c = a.completeOrthogonalDecomposition().solve(rhs);
      for (int i = 0; i < m; ++i) {
        next.first -= c[i] * (dx_[i].first + beta_ * df_[i].first);
        next.second -= c[i] * (dx_[i].second + beta_ * df_[i].second);
      }
    }
    prev_in_ = in;
    prev_f_ = f;
    has_prev_ = true;
    return next;
  }

private:
  static double dot(const Pair& a, const Pair& b) {
    return a.first.dot(b.first) + a.second.dot(b.second);
  }

  double beta_;
  int depth_;
  bool has_prev_ = false;
  Pair prev_in_, prev_f_;
  std::vector<Pair> dx_, df_;
};

inline RealVector pack(const ClassicalField& f) {
  RealVector x(2 * static_cast<Eigen::Index>(f.size()));
  for (std::size_t n = 0; n < f.size(); ++n) {
    x[2 * n] = f[n].real();
    x[2 * n + 1] = f[n].imag();
  }
  return x;
}

inline ClassicalField unpack(const RealVector& x) {
  ClassicalField f;
  for (Eigen::Index n = 0; 2 * n < x.size(); ++n) f.amplitudes.push_back({x[2 * n], x[2 * n + 1]});
  return f;
}

/// Re-impose alpha_{-n} = conj(alpha_n) after mixing round-off.
inline ClassicalField symmetrize(ClassicalField f, const ModeSet& modes) {
  for (std::size_t n = 0; n < modes.size(); ++n)
    if (modes.label(n) < 0) f.amplitudes[n] = std::conj(f.amplitudes[modes.partner(n)]);
  return f;
}

/// Period-2 cycle: the last residuals alternate up and down without shrinking.
inline bool oscillating(const std::vector<double>& r) {
  const std::size_t k = r.size();
  if (k < 6) return false;
  for (std::size_t i = k - 4; i < k; ++i)
    if ((r[i] - r[i - 1]) * (r[i - 1] - r[i - 2]) >= 0) return false;
  return r[k - 1] > 0.9 * r[k - 3];
}

}  // namespace detail

/// Orbitals, density, current and energy for a given input (n_in, alpha_in).
inline KSState ks_step(const HamiltonianSpec& spec, const SCFConfig& cfg, const RealVector& n_in,
                       const ClassicalField& field_in, bool with_hartree) {
  const auto& grid = spec.grid;
  KSState ks;
  ks.field = field_in;
  ks.v_hxc = with_hartree ? hartree_potential(n_in, grid, spec.interaction)
                          : RealVector(RealVector::Zero(grid.points()));
  if (cfg.xc.potential) ks.v_hxc += cfg.xc.potential(n_in, field_in);
  const auto phases = classical_link_phases(field_in, spec);
  const double kappa = coherent_link_factor(spec.modes, grid);
  ks.orbitals = solve_orbitals(ks_hamiltonian(grid, spec.v, ks.v_hxc, phases, kappa), spec.electrons);
  ks.density = ks_density(ks.orbitals, grid);
  ks.bond_current = ks_bond_current(ks.orbitals, grid, phases, kappa);
  ks.current = bond_current_coefficients(ks.bond_current, spec);
  ks.energy = mean_field_energy(ks, spec);
  return ks;
}

/// Self-consistent Maxwell-Kohn-Sham solve. Never throws on non-convergence.
inline SCFResult scf_loop(const HamiltonianSpec& spec, const SCFConfig& cfg) {
  spec.validate();
  cfg.validate();
  const auto& modes = spec.modes;
  const auto& grid = spec.grid;
  auto jxc = [&](const RealVector& n, const ClassicalField& a) {
    return cfg.xc.current ? cfg.xc.current(n, a) : TransverseCurrent::zero(modes);
  };

  ClassicalField field = cfg.init == ScfInit::external_field ? solve_static_maxwell(spec.j, modes)
                                                             : ClassicalField::zero(modes);
  // Start from the orbitals of the external potential alone.
  RealVector n_in = ks_step(spec, cfg, RealVector::Zero(grid.points()), field, false).density;

  detail::PairMixer mixer(cfg.mixing, cfg.anderson_depth);
  SCFResult res;
  std::vector<double> dn_hist;
  for (int it = 1; it <= cfg.max_iterations; ++it) {
    KSState ks = ks_step(spec, cfg, n_in, field, true);
    ks.iteration = it;
    const ClassicalField field_out = update_field(spec.j, ks.current, jxc(n_in, field), modes);

    SCFIteration rec;
    rec.iteration = it;
    rec.density_residual = grid.spacing() * (ks.density - n_in).cwiseAbs().sum();
    rec.field_residual = (detail::pack(field_out) - detail::pack(field)).norm();
    rec.energy = ks.energy.total();
    rec.coupling_identity = std::abs(ks.energy.coupling_grid - ks.energy.coupling_modes);
    res.history.push_back(rec);
    dn_hist.push_back(rec.density_residual + rec.field_residual);
    res.iterations = it;
    res.state = ks;
    res.energy = rec.energy;

    if (rec.density_residual <= cfg.density_tol && rec.field_residual <= cfg.field_tol) {
      res.converged = true;
      break;
    }
    auto next = mixer.mix({n_in, detail::pack(field)}, {ks.density, detail::pack(field_out)});
    n_in = std::move(next.first);
    field = detail::symmetrize(detail::unpack(next.second), modes);
    if (res.diagnostic.empty() && detail::oscillating(dn_hist))
      res.diagnostic = "period-2 oscillation in residuals; try a smaller mixing parameter";
  }

  const auto& st = res.state;
  const TransverseCurrent total = spec.j + modes.coupling() * st.current + jxc(st.density, st.field);
  for (std::size_t n = 0; n < modes.size(); ++n)
    res.maxwell_residual.push_back(modes.frequency(n) * (st.field[n] - total[n]));
  if (!res.converged && res.diagnostic.empty())
    res.diagnostic = "not converged after " + std::to_string(cfg.max_iterations) + " iterations";
  return res;
}

struct HartreeResult {
  bool converged = false;
  int iterations = 0;
  Orbitals orbitals;
  RealVector density;
  double energy = 0.0;
  std::vector<double> density_residuals;
  std::vector<double> energies;
};

/// Photon-free Hartree SCF on the matter sector alone.
inline HartreeResult hartree_scf(const Grid1D& grid, int electrons, const RealVector& v,
                                 const Interaction& w, const SCFConfig& cfg) {
  cfg.validate();
  const auto phases = trivial_link_phases(grid);
  const RealVector zero = RealVector::Zero(grid.points());
  auto step = [&](const RealVector& vh) {
    return solve_orbitals(ks_hamiltonian(grid, v, vh, phases, 1.0), electrons);
  };
  RealVector n_in = ks_density(step(zero), grid);
  detail::PairMixer mixer(cfg.mixing, cfg.anderson_depth);
  const Eigen::MatrixXcd hkin = ks_hamiltonian(grid, zero, zero, phases, 1.0);
  HartreeResult res;
  for (int it = 1; it <= cfg.max_iterations; ++it) {
    const RealVector vh = hartree_potential(n_in, grid, w);
    Orbitals o = step(vh);
    const RealVector n_out = ks_density(o, grid);
    const double dn = grid.spacing() * (n_out - n_in).cwiseAbs().sum();
    double kin = 0.0;
    for (Eigen::Index k = 0; k < o.phi.cols(); ++k) kin += o.phi.col(k).dot(hkin * o.phi.col(k)).real();
    const double e = kin + grid_integral(n_out, v, grid) + hartree_energy(n_out, grid, w) + 0.0;
    res.density_residuals.push_back(dn);
    res.energies.push_back(e);
    res.iterations = it;
    res.orbitals = std::move(o);
    res.density = n_out;
    res.energy = e;
    if (dn <= cfg.density_tol) {
      res.converged = true;
      break;
    }
    n_in = mixer.mix({n_in, RealVector()}, {n_out, RealVector()}).first;
  }
  return res;
}

}  // namespace qedft
