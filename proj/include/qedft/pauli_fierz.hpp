#pragma once

// Model Pauli-Fierz Hamiltonian for N_e in {1, 2} spinless electrons on a
// periodic lattice coupled to a finite set of quantized photon modes.
//
//   H = sum_bonds -t (X_b + X_b^dag) + N_e / dx^2 - sum_k v(x_k) + sum_{k<l} w(x_k - x_l)
//     + sum_n w_n a_n^dag a_n - sum_n w_n (a_n conj(j_n) + a_n^dag j_n)
//
// with t = 1/(2 dx^2) and X_b = U_b c^dag_{i+1} c_i. The link operator
// U_b = exp(-i gamma dx (A(x_b) + b(x_b))) carries the photon field at the bond
// midpoint, so the kinetic term is the lattice form of (p + gamma (A + b))^2 / 2
// and the charge current it implies is exactly conserved.
//
// The photon space of every mode is truncated at n_max quanta around a center
// z: a_n = z_n + c_n. z = 0 is the plain Fock basis; z = j centres the
// truncation on the coherent state forced by the external current.

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <cstdint>
#include <optional>
#include <unordered_map>
#include <vector>

#include "qedft/davidson.hpp"
#include "qedft/errors.hpp"
#include "qedft/field_core.hpp"
#include "qedft/fock.hpp"
#include "qedft/lanczos.hpp"

namespace qedft {

struct Interaction {
  double strength = 0.0;   ///< w_0
  double softening = 1.0;  ///< a

  /// w_0 / sqrt(d^2 + a^2) with d the minimum-image distance.
  double operator()(double d, double length) const {
    d = std::remainder(d, length);
    return strength / std::sqrt(d * d + softening * softening);
  }
};

enum class FockCenter { vacuum, external };

struct HamiltonianSpec {
  Grid1D grid;
  ModeSet modes;
  int electrons = 1;
  RealVector v;          ///< scalar potential on the grid, zero mean
  TransverseCurrent j;   ///< external transverse current
  TransverseCurrent b;   ///< external vector potential (may be zero)
  Interaction interaction;
  int n_max = 4;
  bool dipole = false;   ///< replace e^{+-ikx} by 1 in the matter coupling
  FockCenter center = FockCenter::vacuum;
  std::size_t dimension_budget = 5'000'000;

  void validate() const {
    if (electrons < 1 || electrons > 2) throw Error("electrons must be 1 or 2");
    if (electrons > grid.points()) throw Error("more electrons than sites");
    if (grid.points() > 64) throw Error("exact solver supports at most 64 sites");
    if (v.size() != grid.points()) throw Error("potential does not match grid");
    if (!v.allFinite()) throw Error("potential has non-finite values");
    if (std::abs(v.mean()) > 1e-12 * std::max(1.0, v.cwiseAbs().maxCoeff()))
      throw Error("potential must have zero spatial mean (apply gauge_fix)");
    if (n_max < 1) throw Error("n_max must be at least 1");
    if (interaction.strength < 0.0 || !(interaction.softening > 0.0))
      throw Error("interaction needs w0 >= 0 and softening > 0");
    modes.check_resolved_by(grid);
    require_conjugation_symmetry(j, modes);
    require_conjugation_symmetry(b, modes);
  }

  /// Copy with a different external current, sharing everything else.
  HamiltonianSpec with_current(TransverseCurrent current) const {
    HamiltonianSpec s = *this;
    s.j = std::move(current);
    return s;
  }
};

inline HamiltonianSpec make_spec(const Grid1D& grid, const ModeSet& modes, int electrons) {
  HamiltonianSpec s;
  s.grid = grid;
  s.modes = modes;
  s.electrons = electrons;
  s.v = RealVector::Zero(grid.points());
  s.j = TransverseCurrent::zero(modes);
  s.b = TransverseCurrent::zero(modes);
  return s;
}

/// Antisymmetric N_e-electron configurations as occupation bitmasks.
class ElectronBasis {
public:
  struct Hop {
    std::uint32_t from;
    std::uint32_t to;
    double sign;
  };

  ElectronBasis() = default;
  ElectronBasis(int sites, int electrons) : sites_(sites), electrons_(electrons) {
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << sites); ++mask) {
      if (std::popcount(mask) != electrons) continue;
      index_.emplace(mask, static_cast<std::uint32_t>(configs_.size()));
      configs_.push_back(mask);
      if (sites > 24 && electrons == 1 && configs_.size() == static_cast<std::size_t>(sites)) break;
    }
    build_hops();
  }

  int sites() const { return sites_; }
  int electrons() const { return electrons_; }
  std::size_t size() const { return configs_.size(); }
  std::uint64_t config(std::size_t c) const { return configs_[c]; }
  bool occupied(std::size_t c, int site) const { return (configs_[c] >> site) & 1u; }
  /// Hops moving one electron across bond (i, i+1), i.e. terms of c^dag_{i+1} c_i.
  const std::vector<Hop>& hops(int bond) const { return hops_[bond]; }

  /// Result of c^dag_to c_from on configuration c; sign 0 when it vanishes.
  std::pair<std::uint32_t, double> move(std::size_t c, int from, int to) const {
    std::uint64_t mask = configs_[c];
    if (!((mask >> from) & 1u)) return {0, 0.0};
    if (from != to && ((mask >> to) & 1u)) return {0, 0.0};
    double sign = parity_below(mask, from);
    mask &= ~(std::uint64_t{1} << from);
    sign *= parity_below(mask, to);
    mask |= std::uint64_t{1} << to;
    return {index_.at(mask), sign};
  }

private:
  static double parity_below(std::uint64_t mask, int site) {
    std::uint64_t below = site == 0 ? 0 : (mask & ((std::uint64_t{1} << site) - 1));
    return std::popcount(below) % 2 ? -1.0 : 1.0;
  }

  void build_hops() {
    hops_.assign(sites_, {});
    for (int i = 0; i < sites_; ++i) {
      const int next = (i + 1) % sites_;
      for (std::size_t c = 0; c < configs_.size(); ++c) {
        auto [to, sign] = move(c, i, next);
        if (sign != 0.0) hops_[i].push_back({static_cast<std::uint32_t>(c), to, sign});
      }
    }
  }

  int sites_ = 0;
  int electrons_ = 0;
  std::vector<std::uint64_t> configs_;
  std::unordered_map<std::uint64_t, std::uint32_t> index_;
  std::vector<std::vector<Hop>> hops_;
};

/// Matrix-free Hermitian operator on electrons x truncated photons.
/// Amplitudes are stored config-major: psi[c * D + p].
class PauliFierzOperator {
public:
  explicit PauliFierzOperator(HamiltonianSpec spec,
                              std::optional<TransverseCurrent> center = std::nullopt)
      : spec_(std::move(spec)) {
    spec_.validate();
    const auto& modes = spec_.modes;
    electrons_ = ElectronBasis(spec_.grid.points(), spec_.electrons);
    photons_ = fock::Layout(modes.size(), spec_.n_max);
    const std::size_t dim = electrons_.size() * photons_.size();
    if (dim > spec_.dimension_budget) throw BudgetError(dim, spec_.dimension_budget);

    if (center) {
      require_conjugation_symmetry(*center, modes);
      center_ = *center;
    } else {
      center_ = spec_.center == FockCenter::external ? spec_.j : TransverseCurrent::zero(modes);
    }
    source_ = spec_.j - center_;
    link_field_ = spec_.b + center_;
    constant_ = 0.0;
    for (std::size_t n = 0; n < modes.size(); ++n)
      constant_ += modes.frequency(n) *
                   (std::norm(center_[n]) - 2.0 * (center_[n] * std::conj(spec_.j[n])).real());

    hopping_ = 0.5 / (spec_.grid.spacing() * spec_.grid.spacing());
    build_diagonals();
    build_links();
  }

  const HamiltonianSpec& spec() const { return spec_; }
  const ElectronBasis& electrons() const { return electrons_; }
  const fock::Layout& photons() const { return photons_; }
  Eigen::Index dimension() const {
    return static_cast<Eigen::Index>(electrons_.size() * photons_.size());
  }
  const TransverseCurrent& center() const { return center_; }
  double constant() const { return constant_; }
  double hopping() const { return hopping_; }
  /// Effective photon source j - z seen by the fluctuation operators.
  const TransverseCurrent& source() const { return source_; }
  double electron_diagonal(std::size_t c) const { return diag_electron_[c]; }

  /// Phase of mode n at position x in the matter coupling.
  complex mode_function(std::size_t n, double x) const {
    return spec_.dipole ? complex{1.0} : std::polar(1.0, spec_.modes.wavenumber(n) * x);
  }

  /// Link unitary of bond b as a product of per-mode factors times a c-number.
  const fock::ProductOperator& link(int bond) const { return links_[bond]; }
  complex link_phase(int bond) const { return link_phase_[bond]; }

  void apply(const ComplexVector& x, ComplexVector& y) const {
    const std::size_t dph = photons_.size();
    y.resize(x.size());
    for (std::size_t c = 0; c < electrons_.size(); ++c) {
      const double de = diag_electron_[c];
      for (std::size_t p = 0; p < dph; ++p) y[c * dph + p] = (de + diag_photon_[p]) * x[c * dph + p];
    }
    apply_sources(x, y);
    std::vector<complex> buf(dph), scratch(dph);
    for (int bond = 0; bond < spec_.grid.points(); ++bond) {
      const auto& u = links_[bond];
      const auto& ud = links_adj_[bond];
      for (const auto& hop : electrons_.hops(bond)) {
        const complex fwd = -hopping_ * hop.sign * link_phase_[bond];
        transport(x.data() + hop.from * dph, u, fwd, y.data() + hop.to * dph, buf, scratch);
        transport(x.data() + hop.to * dph, ud, std::conj(fwd), y.data() + hop.from * dph, buf,
                  scratch);
      }
    }
  }

  /// <psi| X_b |psi> with X_b = U_b c^dag_{i+1} c_i.
  complex link_expectation(const ComplexVector& psi, int bond) const {
    const std::size_t dph = photons_.size();
    std::vector<complex> buf(dph), scratch(dph);
    complex acc{};
    for (const auto& hop : electrons_.hops(bond)) {
      std::copy_n(psi.data() + hop.from * dph, dph, buf.begin());
      for (std::size_t m = 0; m < links_[bond].factors.size(); ++m)
        fock::apply_on_mode(buf.data(), photons_, m, links_[bond].factors[m], scratch.data());
      complex dot{};
      const complex* to = psi.data() + hop.to * dph;
      for (std::size_t p = 0; p < dph; ++p) dot += std::conj(to[p]) * buf[p];
      acc += hop.sign * dot;
    }
    return acc * link_phase_[bond];
  }

private:
  void build_diagonals() {
    const auto& grid = spec_.grid;
    diag_electron_.resize(electrons_.size());
    for (std::size_t c = 0; c < electrons_.size(); ++c) {
      double e = spec_.electrons / (grid.spacing() * grid.spacing());
      std::vector<int> occ;
      for (int i = 0; i < grid.points(); ++i)
        if (electrons_.occupied(c, i)) {
          occ.push_back(i);
          e -= spec_.v[i];
        }
      for (std::size_t a = 0; a < occ.size(); ++a)
        for (std::size_t b = a + 1; b < occ.size(); ++b)
          e += spec_.interaction(grid.position(occ[a]) - grid.position(occ[b]), grid.length());
      diag_electron_[c] = e;
    }
    diag_photon_.resize(photons_.size());
    for (std::size_t p = 0; p < photons_.size(); ++p) {
      double e = constant_;
      for (std::size_t n = 0; n < photons_.modes(); ++n)
        e += spec_.modes.frequency(n) * photons_.occupation(p, n);
      diag_photon_[p] = e;
    }
  }

  void build_links() {
    const auto& grid = spec_.grid;
    const auto& modes = spec_.modes;
    const double gdx = modes.coupling() * grid.spacing();
    fock::ModeExponential expo(spec_.n_max);
    links_.resize(grid.points());
    links_adj_.resize(grid.points());
    link_phase_.resize(grid.points());
    for (int bond = 0; bond < grid.points(); ++bond) {
      const double xb = grid.bond_position(bond);
      double classical = 0.0;
      links_[bond].layout = photons_;
      links_adj_[bond].layout = photons_;
      for (std::size_t n = 0; n < modes.size(); ++n) {
        const complex phase = mode_function(n, xb);
        classical += 2.0 * modes.field_prefactor(n) * (link_field_[n] * phase).real();
        auto u = expo(gdx * modes.field_prefactor(n), std::arg(phase));
        links_adj_[bond].factors.push_back(u.adjoint());
        links_[bond].factors.push_back(std::move(u));
      }
      link_phase_[bond] = std::polar(1.0, -gdx * classical);
    }
  }

  void apply_sources(const ComplexVector& x, ComplexVector& y) const {
    const std::size_t dph = photons_.size();
    const auto& modes = spec_.modes;
    for (std::size_t n = 0; n < modes.size(); ++n) {
      const complex s = source_[n];
      if (s == complex{}) continue;
      const double w = modes.frequency(n);
      const std::size_t stride = photons_.stride(n);
      for (std::size_t c = 0; c < electrons_.size(); ++c) {
        const complex* xb = x.data() + c * dph;
        complex* yb = y.data() + c * dph;
        for (std::size_t p = 0; p < dph; ++p) {
          const int m = photons_.occupation(p, n);
          if (m < photons_.n_max()) yb[p] -= w * std::conj(s) * std::sqrt(double(m + 1)) * xb[p + stride];
          if (m > 0) yb[p] -= w * s * std::sqrt(double(m)) * xb[p - stride];
        }
      }
    }
  }

  void transport(const complex* src, const fock::ProductOperator& u, complex factor, complex* dst,
                 std::vector<complex>& buf, std::vector<complex>& scratch) const {
    const std::size_t dph = photons_.size();
    std::copy_n(src, dph, buf.begin());
    for (std::size_t m = 0; m < u.factors.size(); ++m)
      fock::apply_on_mode(buf.data(), photons_, m, u.factors[m], scratch.data());
    for (std::size_t p = 0; p < dph; ++p) dst[p] += factor * buf[p];
  }

  HamiltonianSpec spec_;
  ElectronBasis electrons_;
  fock::Layout photons_;
  TransverseCurrent center_, source_, link_field_;
  double constant_ = 0.0;
  double hopping_ = 0.0;
  std::vector<double> diag_electron_, diag_photon_;
  std::vector<fock::ProductOperator> links_, links_adj_;
  std::vector<complex> link_phase_;
};

inline PauliFierzOperator build_hamiltonian(const HamiltonianSpec& spec) {
  return PauliFierzOperator(spec);
}

/// Exact inverse of (H_0 - theta) where H_0 drops the quantum part of the links:
/// matter with classical link phases plus independent displaced oscillators.
/// H_0 is diagonal in (matter eigenbasis) x (per-mode eigenbasis).
class DecoupledPreconditioner {
public:
  explicit DecoupledPreconditioner(const PauliFierzOperator& op) : photons_(op.photons()) {
    const auto& el = op.electrons();
    const auto& spec = op.spec();
    const Eigen::Index nc = static_cast<Eigen::Index>(el.size());
    Eigen::MatrixXcd hm = Eigen::MatrixXcd::Zero(nc, nc);
    for (Eigen::Index c = 0; c < nc; ++c) hm(c, c) = op.electron_diagonal(static_cast<std::size_t>(c));
    for (int bond = 0; bond < spec.grid.points(); ++bond)
      for (const auto& hop : el.hops(bond)) {
        const complex amp = -op.hopping() * hop.sign * op.link_phase(bond);
        hm(hop.to, hop.from) += amp;
        hm(hop.from, hop.to) += std::conj(amp);
      }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> me(hm);
    matter_ = me.eigenvectors();
    matter_conj_ = matter_.conjugate();
    matter_t_ = matter_.transpose();

    const int d = photons_.dim();
    std::vector<Eigen::VectorXd> levels;
    for (std::size_t n = 0; n < spec.modes.size(); ++n) {
      const double w = spec.modes.frequency(n);
      const complex src = op.source()[n];
      Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(d, d);
      for (int m = 0; m < d; ++m) h(m, m) = w * m;
      for (int m = 0; m + 1 < d; ++m) {
        h(m, m + 1) = -w * std::conj(src) * std::sqrt(double(m + 1));
        h(m + 1, m) = -w * src * std::sqrt(double(m + 1));
      }
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> pe(h);
      modes_.push_back(pe.eigenvectors());
      modes_adj_.push_back(pe.eigenvectors().adjoint());
      levels.push_back(pe.eigenvalues());
    }
    const std::size_t dph = photons_.size();
    diagonal_.resize(nc * static_cast<Eigen::Index>(dph));
    for (Eigen::Index c = 0; c < nc; ++c)
      for (std::size_t q = 0; q < dph; ++q) {
        double e = me.eigenvalues()[c] + op.constant();
        for (std::size_t n = 0; n < levels.size(); ++n) e += levels[n][photons_.occupation(q, n)];
        diagonal_[c * static_cast<Eigen::Index>(dph) + static_cast<Eigen::Index>(q)] = e;
      }
  }

  /// Eigenvalues of H_0 in the same order as the transformed amplitudes.
  const RealVector& spectrum() const { return diagonal_; }

  void operator()(double theta, const ComplexVector& r, ComplexVector& t) const {
    const Eigen::Index dph = static_cast<Eigen::Index>(photons_.size());
    const Eigen::Index nc = matter_.rows();
    Eigen::MatrixXcd x = Eigen::Map<const Eigen::MatrixXcd>(r.data(), dph, nc) * matter_conj_;
    transform_photons(x, modes_adj_);
    for (Eigen::Index c = 0; c < nc; ++c)
      for (Eigen::Index q = 0; q < dph; ++q) {
        double den = diagonal_[c * dph + q] - theta;
        if (std::abs(den) < 1e-8) den = den < 0 ? -1e-8 : 1e-8;
        x(q, c) /= den;
      }
    transform_photons(x, modes_);
    t.resize(r.size());
    Eigen::Map<Eigen::MatrixXcd>(t.data(), dph, nc).noalias() = x * matter_t_;
  }

private:
  void transform_photons(Eigen::MatrixXcd& x, const std::vector<Eigen::MatrixXcd>& ops) const {
    std::vector<complex> scratch(photons_.size());
    for (Eigen::Index c = 0; c < x.cols(); ++c)
      for (std::size_t n = 0; n < ops.size(); ++n)
        fock::apply_on_mode(x.col(c).data(), photons_, n, ops[n], scratch.data());
  }

  fock::Layout photons_;
  Eigen::MatrixXcd matter_, matter_conj_, matter_t_;
  std::vector<Eigen::MatrixXcd> modes_, modes_adj_;
  RealVector diagonal_;
};

enum class EigenMethod { davidson, lanczos };

struct GroundStateOptions {
  EigenMethod method = EigenMethod::davidson;
  double tol = 1e-10;
  int max_matvecs = 4000;
  int block_size = 2;
  std::uint64_t seed = 20170314;
  int krylov_dim = 30;  ///< Lanczos basis size between restarts
  int max_basis = 24;   ///< Davidson search-space size
  double degeneracy_tol = 1e-8;
};

struct GroundStateResult {
  double energy = 0.0;
  double first_excited = 0.0;
  double gap = 0.0;
  ComplexVector state;
  int matvecs = 0;
  double residual = 0.0;  ///< ||H psi - E psi|| evaluated explicitly
  bool degenerate = false;
  double truncation_tail = 0.0;
};

double truncation_tail(const PauliFierzOperator& op, const ComplexVector& psi);

inline GroundStateResult ground_state(const PauliFierzOperator& op,
                                      const GroundStateOptions& opts = {}) {
  auto apply = [&](const ComplexVector& x, ComplexVector& y) { op.apply(x, y); };
  EigenResult eig;
  if (opts.method == EigenMethod::lanczos) {
    LanczosOptions lo;
    lo.tol = opts.tol;
    lo.max_matvecs = opts.max_matvecs;
    lo.krylov_dim = opts.krylov_dim;
    lo.block_size = opts.block_size;
    lo.seed = opts.seed;
    eig = lowest_eigenpairs(apply, op.dimension(), lo);
  } else {
    DavidsonOptions d;
    d.tol = opts.tol;
    d.max_matvecs = opts.max_matvecs;
    d.max_basis = opts.max_basis;
    d.block_size = opts.block_size;
    d.seed = opts.seed;
    DecoupledPreconditioner pre(op);
    RealVector levels = pre.spectrum();
    std::sort(levels.begin(), levels.end());
    for (int i = 0; i < std::min<int>(d.block_size, static_cast<int>(levels.size())); ++i)
      d.targets.push_back(levels[i]);
    eig = lowest_eigenpairs_davidson(apply, pre, op.dimension(), d);
  }
  if (!eig.converged)
    throw ConvergenceError("ground state did not converge in " + std::to_string(eig.matvecs) +
                               " matrix-vector products",
                           eig.residuals.empty() ? INFINITY : eig.residuals[0]);
  GroundStateResult r;
  r.energy = eig.values[0];
  r.first_excited = eig.values.size() > 1 ? eig.values[1] : eig.values[0];
  r.gap = std::max(0.0, r.first_excited - r.energy);
  r.degenerate = eig.values.size() > 1 && r.gap < opts.degeneracy_tol;
  r.state = std::move(eig.vectors[0]);
  // Fix the global phase so the largest amplitude is real and positive.
  Eigen::Index imax;
  r.state.cwiseAbs().maxCoeff(&imax);
  r.state *= std::polar(1.0, -std::arg(r.state[imax]));
  ComplexVector hpsi;
  op.apply(r.state, hpsi);
  r.residual = (hpsi - r.energy * r.state).norm();
  r.matvecs = eig.matvecs + 1;
  r.truncation_tail = truncation_tail(op, r.state);
  return r;
}

// ---------------------------------------------------------------- observables

/// Probability that each mode sits at the truncation edge; the largest is returned.
inline double truncation_tail(const PauliFierzOperator& op, const ComplexVector& psi) {
  const auto& ph = op.photons();
  const std::size_t dph = ph.size();
  std::vector<double> edge(ph.modes(), 0.0);
  for (Eigen::Index k = 0; k < psi.size(); ++k) {
    const std::size_t p = static_cast<std::size_t>(k) % dph;
    const double w = std::norm(psi[k]);
    for (std::size_t n = 0; n < ph.modes(); ++n)
      if (ph.occupation(p, n) == ph.n_max()) edge[n] += w;
  }
  double worst = 0.0;
  for (double e : edge) worst = std::max(worst, e);
  return worst;
}

/// Charge density n(x_i) = -<N_i>/dx.
inline RealVector density(const PauliFierzOperator& op, const ComplexVector& psi) {
  const auto& el = op.electrons();
  const std::size_t dph = op.photons().size();
  const auto& grid = op.spec().grid;
  RealVector n = RealVector::Zero(grid.points());
  for (std::size_t c = 0; c < el.size(); ++c) {
    const double w = psi.segment(static_cast<Eigen::Index>(c * dph), static_cast<Eigen::Index>(dph))
                         .squaredNorm();
    for (int i = 0; i < grid.points(); ++i)
      if (el.occupied(c, i)) n[i] -= w;
  }
  return n / grid.spacing();
}

/// One-body reduced density matrix rho_ij = <c^dag_i c_j> of the electrons.
inline Eigen::MatrixXcd one_body_density_matrix(const PauliFierzOperator& op,
                                                const ComplexVector& psi) {
  const auto& el = op.electrons();
  const std::size_t dph = op.photons().size();
  const int ns = op.spec().grid.points();
  Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(ns, ns);
  for (std::size_t c = 0; c < el.size(); ++c) {
    auto src = psi.segment(static_cast<Eigen::Index>(c * dph), static_cast<Eigen::Index>(dph));
    for (int jsite = 0; jsite < ns; ++jsite) {
      if (!el.occupied(c, jsite)) continue;
      for (int isite = 0; isite < ns; ++isite) {
        auto [to, sign] = el.move(c, jsite, isite);
        if (sign == 0.0) continue;
        auto dst = psi.segment(static_cast<Eigen::Index>(to * dph), static_cast<Eigen::Index>(dph));
        rho(isite, jsite) += sign * dst.dot(src);
      }
    }
  }
  return rho;
}

/// <a_n> for every mode, including the basis center.
inline ClassicalField field_expectation(const PauliFierzOperator& op, const ComplexVector& psi) {
  const auto& ph = op.photons();
  const std::size_t dph = ph.size();
  const std::size_t nel = op.electrons().size();
  ClassicalField f = ClassicalField::zero(op.spec().modes);
  for (std::size_t n = 0; n < ph.modes(); ++n) {
    const std::size_t stride = ph.stride(n);
    complex acc{};
    for (std::size_t c = 0; c < nel; ++c) {
      const complex* b = psi.data() + c * dph;
      for (std::size_t p = 0; p < dph; ++p) {
        const int m = ph.occupation(p, n);
        if (m < ph.n_max()) acc += std::conj(b[p]) * std::sqrt(double(m + 1)) * b[p + stride];
      }
    }
    f.amplitudes[n] = acc + op.center()[n];
  }
  return f;
}

/// <c_n^dag c_n> of the fluctuation operator around the basis center.
inline std::vector<double> fluctuation_occupations(const PauliFierzOperator& op,
                                                   const ComplexVector& psi) {
  const auto& ph = op.photons();
  const std::size_t dph = ph.size();
  std::vector<double> occ(ph.modes(), 0.0);
  for (Eigen::Index k = 0; k < psi.size(); ++k) {
    const std::size_t p = static_cast<std::size_t>(k) % dph;
    const double w = std::norm(psi[k]);
    for (std::size_t n = 0; n < ph.modes(); ++n) occ[n] += w * ph.occupation(p, n);
  }
  return occ;
}

/// Charge current through every bond, J_b = 2 t Im <X_b>. Sample b sits at x_b + dx/2.
/// The current is the derivative of H with respect to the link field, so it is both
/// conserved and the source of the photon field.
inline RealVector physical_current(const PauliFierzOperator& op, const ComplexVector& psi) {
  const int nb = op.spec().grid.points();
  RealVector j(nb);
  for (int bond = 0; bond < nb; ++bond)
    j[bond] = 2.0 * op.hopping() * op.link_expectation(psi, bond).imag();
  return j;
}

/// Mode coefficients of a bond-sampled current.
inline TransverseCurrent bond_current_coefficients(const RealVector& bond_current,
                                                   const HamiltonianSpec& spec) {
  if (!spec.dipole)
    return to_mode_coefficients(bond_current, spec.grid, spec.modes, 0.5 * spec.grid.spacing());
  // Uniform mode functions: every mode sees the total current.
  TransverseCurrent c = TransverseCurrent::zero(spec.modes);
  const double total = spec.grid.spacing() * bond_current.sum();
  for (std::size_t n = 0; n < spec.modes.size(); ++n) {
    const double w = spec.modes.frequency(n);
    c[n] = total / std::sqrt(2.0 * w * w * w * spec.grid.length());
  }
  return c;
}

/// r_n = <[H, a_n]> = -w_n (alpha_n - j_n - gamma J_n), using the canonical commutator.
/// Vanishes on eigenstates of the untruncated Hamiltonian: this is the static Maxwell equation.
inline std::vector<complex> maxwell_residual(const PauliFierzOperator& op,
                                             const ComplexVector& psi) {
  const auto& spec = op.spec();
  const auto alpha = field_expectation(op, psi);
  const auto jm = bond_current_coefficients(physical_current(op, psi), spec);
  std::vector<complex> r(spec.modes.size());
  for (std::size_t n = 0; n < spec.modes.size(); ++n)
    r[n] = -spec.modes.frequency(n) * (alpha[n] - spec.j[n] - spec.modes.coupling() * jm[n]);
  return r;
}

struct EnergyDecomposition {
  double internal = 0.0;        ///< <H_0>: kinetic + coupling + interaction + free photons
  double external_scalar = 0.0; ///< integral of n v
  double external_current = 0.0;///< -sum_n w_n a~_n conj(j_n)
  double total() const { return internal + external_scalar + external_current; }
};

inline double kinetic_energy(const PauliFierzOperator& op, const ComplexVector& psi) {
  const auto& spec = op.spec();
  double e = spec.electrons / (spec.grid.spacing() * spec.grid.spacing());
  for (int bond = 0; bond < spec.grid.points(); ++bond)
    e -= 2.0 * op.hopping() * op.link_expectation(psi, bond).real();
  return e;
}

inline double interaction_energy(const PauliFierzOperator& op, const ComplexVector& psi) {
  const auto& spec = op.spec();
  const auto& el = op.electrons();
  const std::size_t dph = op.photons().size();
  double e = 0.0;
  for (std::size_t c = 0; c < el.size(); ++c) {
    std::vector<int> occ;
    for (int i = 0; i < spec.grid.points(); ++i)
      if (el.occupied(c, i)) occ.push_back(i);
    double w = 0.0;
    for (std::size_t a = 0; a < occ.size(); ++a)
      for (std::size_t b = a + 1; b < occ.size(); ++b)
        w += spec.interaction(spec.grid.position(occ[a]) - spec.grid.position(occ[b]),
                              spec.grid.length());
    e += w * psi.segment(static_cast<Eigen::Index>(c * dph), static_cast<Eigen::Index>(dph))
                 .squaredNorm();
  }
  return e;
}

inline EnergyDecomposition energy_decomposition(const PauliFierzOperator& op,
                                                const ComplexVector& psi) {
  const auto& spec = op.spec();
  const auto& modes = spec.modes;
  const auto alpha = field_expectation(op, psi);
  const auto occ = fluctuation_occupations(op, psi);
  const auto& z = op.center();
  double photons = 0.0;
  for (std::size_t n = 0; n < modes.size(); ++n) {
    // <a^dag a> = <c^dag c> + 2 Re(conj(z) <c>) + |z|^2 with <c> = alpha - z.
    const complex c = alpha[n] - z[n];
    photons += modes.frequency(n) *
               (occ[n] + 2.0 * (std::conj(z[n]) * c).real() + std::norm(z[n]));
  }
  EnergyDecomposition d;
  d.internal = kinetic_energy(op, psi) + interaction_energy(op, psi) + photons;
  d.external_scalar = grid_integral(density(op, psi), spec.v, spec.grid);
  for (std::size_t n = 0; n < modes.size(); ++n)
    d.external_current -=
        modes.frequency(n) * (alpha.symmetric_amplitude(n, modes) * std::conj(spec.j[n])).real();
  return d;
}

inline double expectation(const PauliFierzOperator& op, const ComplexVector& psi) {
  ComplexVector hpsi;
  op.apply(psi, hpsi);
  return psi.dot(hpsi).real() / psi.squaredNorm();
}

/// Ground-state internal pair (n, A) with mode amplitudes kept alongside the grid view.
struct InternalPair {
  RealVector density;
  ClassicalField field;
};

inline InternalPair internal_pair(const PauliFierzOperator& op, const ComplexVector& psi) {
  return {density(op, psi), field_expectation(op, psi)};
}

}  // namespace qedft
