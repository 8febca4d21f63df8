#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "common.hpp"
#include "qedft/maxwell_ks.hpp"

using namespace qedft;
using namespace qedft::fixtures;

TEST(Hartree, PotentialMatchesDirectSumAndEnergy) {
  auto s = reference_spec();
  const auto& g = s.grid;
  RealVector n(16);
  for (int i = 0; i < 16; ++i) n[i] = -(1.0 + 0.5 * std::sin(0.4 * i)) * 2.0 / 10.0;
  RealVector vh = hartree_potential(n, g, s.interaction);
  EXPECT_NEAR(vh.mean(), 0.0, 1e-15);
  RealVector direct(16);
  for (int i = 0; i < 16; ++i) {
    direct[i] = 0;
    for (int k = 0; k < 16; ++k) {
      double d = std::abs(i - k) * 0.625;
      d = std::min(d, 10.0 - d);
      direct[i] += 0.625 * 0.5 / std::sqrt(d * d + 1.0) * std::abs(n[k]);
    }
  }
  EXPECT_LT((vh - gauge_fix(direct)).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_NEAR(hartree_energy(n, g, s.interaction), 0.5 * 0.625 * direct.dot(n.cwiseAbs()), 1e-13);
}

TEST(KsHamiltonian, FreeLatticeDispersion) {
  Grid1D g(10.0, 16);
  RealVector zero = RealVector::Zero(16);
  auto h = ks_hamiltonian(g, zero, zero, trivial_link_phases(g), 1.0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h);
  std::vector<double> expect;
  for (int q = 0; q < 16; ++q) expect.push_back((1 - std::cos(2 * M_PI * q / 16.0)) / (0.625 * 0.625));
  std::sort(expect.begin(), expect.end());
  for (int i = 0; i < 16; ++i) EXPECT_NEAR(es.eigenvalues()[i], expect[i], 1e-12);
}

TEST(KsHamiltonian, CoherentLinkFactor) {
  ModeSet m({-2, -1, 1, 2}, 10.0, 0.05);
  Grid1D g(10.0, 16);
  double s = 0;
  for (std::size_t n = 0; n < m.size(); ++n) s += 1.0 / (2 * m.frequency(n) * 10.0);
  EXPECT_NEAR(coherent_link_factor(m, g), std::exp(-0.5 * std::pow(0.05 * 0.625, 2) * s), 1e-15);
  EXPECT_EQ(coherent_link_factor(m.with_coupling(0.0), g), 1.0);
}

TEST(KsCurrent, MatchesEnergyDerivativeUnderFlux) {
  // A static A_cl with zero mean is a gauge transformation on the ring, so probe the
  // current with a uniform flux: E(theta) = sum of occupied eigenvalues with all links
  // e^{-i theta}; J_b summed over bonds equals -dE/dtheta.
  auto s = reference_spec();
  const auto& g = s.grid;
  RealVector zero = RealVector::Zero(16);
  auto phases = [&](double th) { return std::vector<complex>(16, std::polar(1.0, -th)); };
  auto energy = [&](double th) {
    return solve_orbitals(ks_hamiltonian(g, s.v, zero, phases(th), 0.9), 2).energies.sum();
  };
  const double th = 0.13, h = 1e-5;
  const auto o = solve_orbitals(ks_hamiltonian(g, s.v, zero, phases(th), 0.9), 2);
  const RealVector j = ks_bond_current(o, g, phases(th), 0.9);
  const double fd = (energy(th + h) - energy(th - h)) / (2 * h);
  EXPECT_NEAR(-fd, j.sum(), 1e-7);
  // continuity for a stationary state
  EXPECT_LT((j.array() - j.mean()).abs().maxCoeff(), 1e-10);
}

TEST(Scf, ReducesToHartreeBitIdentically) {
  auto s = reference_spec(0.0);
  s.j = TransverseCurrent::zero(s.modes);
  SCFConfig cfg;
  auto r = scf_loop(s, cfg);
  auto h = hartree_scf(s.grid, s.electrons, s.v, s.interaction, cfg);
  ASSERT_TRUE(r.converged);
  ASSERT_TRUE(h.converged);
  EXPECT_EQ(r.iterations, h.iterations);
  EXPECT_EQ(r.energy, h.energy);
  EXPECT_TRUE(r.state.density == h.density);
  for (std::size_t n = 0; n < s.modes.size(); ++n) EXPECT_EQ(r.state.field[n], complex{});
}

TEST(Scf, DecoupledFieldAndEnergy) {
  auto s = reference_spec(0.0);
  SCFConfig cfg;
  auto r = scf_loop(s, cfg);
  auto h = hartree_scf(s.grid, s.electrons, s.v, s.interaction, cfg);
  ASSERT_TRUE(r.converged);
  double photon = 0;
  for (std::size_t n = 0; n < s.modes.size(); ++n) {
    EXPECT_LT(std::abs(r.state.field[n] - s.j[n]), 1e-8);
    photon -= s.modes.frequency(n) * std::norm(s.j[n]);
  }
  EXPECT_NEAR(r.energy, h.energy + photon, 1e-8);
}

TEST(Scf, ReferenceConvergesFromBothStarts) {
  auto s = reference_spec();
  SCFConfig a, b;
  b.init = ScfInit::external_field;
  auto ra = scf_loop(s, a), rb = scf_loop(s, b);
  ASSERT_TRUE(ra.converged);
  ASSERT_TRUE(rb.converged);
  EXPECT_LE(ra.iterations, 200);
  EXPECT_NEAR(ra.energy, rb.energy, 1e-7);
  EXPECT_LT((ra.state.density - rb.state.density).cwiseAbs().maxCoeff(), 1e-7);
  for (std::size_t n = 0; n < s.modes.size(); ++n) {
    EXPECT_LT(std::abs(ra.state.field[n] - rb.state.field[n]), 1e-7);
    EXPECT_LT(std::abs(ra.maxwell_residual[n]), 1e-7);
  }
  const auto& e = ra.state.energy;
  EXPECT_NEAR(e.total(), e.total_from_eigenvalues(), 1e-10);
  EXPECT_NEAR(e.coupling_grid, e.coupling_modes, 1e-12);
}

TEST(Scf, AndersonAgreesWithLinear) {
  auto s = reference_spec();
  SCFConfig lin, pulay;
  pulay.anderson_depth = 5;
  auto rl = scf_loop(s, lin), rp = scf_loop(s, pulay);
  ASSERT_TRUE(rp.converged);
  EXPECT_LT(rp.iterations, rl.iterations);
  EXPECT_NEAR(rl.energy, rp.energy, 1e-9);
}

TEST(Scf, NonConvergenceIsReportedNotThrown) {
  auto s = reference_spec();
  SCFConfig cfg;
  cfg.max_iterations = 3;
  auto r = scf_loop(s, cfg);
  EXPECT_FALSE(r.converged);
  EXPECT_EQ(r.iterations, 3);
  EXPECT_FALSE(r.diagnostic.empty());
}

TEST(Scf, ConfigValidation) {
  SCFConfig cfg;
  cfg.mixing = 0.0;
  try {
    cfg.validate();
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.key(), "scf_mixing");
  }
  cfg = {};
  cfg.max_iterations = 0;
  EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(Scf, XcHookIsCalled) {
  // A constant xc current shifts the field by exactly that current.
  auto s = reference_spec(0.0);
  SCFConfig cfg;
  TransverseCurrent extra = TransverseCurrent::zero(s.modes);
  set_mode(extra, s.modes, 1, {0.01, 0.02});
  cfg.xc.name = "constant-current";
  cfg.xc.current = [&](const RealVector&, const ClassicalField&) { return extra; };
  auto r = scf_loop(s, cfg);
  ASSERT_TRUE(r.converged);
  for (std::size_t n = 0; n < s.modes.size(); ++n)
    EXPECT_LT(std::abs(r.state.field[n] - s.j[n] - extra[n]), 1e-8);
}

TEST(MeanField, UpperBoundOnSmallInstance) {
  // Without interaction the mean-field energy is the exact expectation value of
  // the Slater x coherent product state, so it bounds E_0 from above.
  auto s = tiny_spec(1, 0.3);
  s.interaction.strength = 0.0;
  s.n_max = 8;
  auto r = scf_loop(s, SCFConfig{});
  ASSERT_TRUE(r.converged);
  auto g = ground_state(PauliFierzOperator(s));
  EXPECT_GE(r.energy, g.energy - 1e-10);
}

TEST(Hartree, TrivialLimits) {
  Grid1D g(10.0, 16);
  RealVector n = RealVector::Constant(16, -0.2);
  EXPECT_LT(hartree_potential(n, g, {0.5, 1.0}).cwiseAbs().maxCoeff(), 1e-15);
  RealVector m = n;
  m[3] = -0.7;
  EXPECT_EQ(hartree_potential(m, g, {0.0, 1.0}).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Hartree, FirstOrderInteractionEnergy) {
  // Two spinless electrons, gamma = 0: to first order in w0 the exact <W> is the
  // Hartree energy minus exchange on the unperturbed orbitals.
  for (double w0 : {0.01, 0.001}) {
    auto s = reference_spec(0.0);
    s.j = TransverseCurrent::zero(s.modes);
    s.n_max = 1;
    s.interaction.strength = w0;
    PauliFierzOperator op(s);
    const double exact = interaction_energy(op, ground_state(op).state);
    auto h = hartree_scf(s.grid, 2, s.v, s.interaction, SCFConfig{});
    const double eh = hartree_energy(h.density, s.grid, s.interaction);
    double ex = 0.0;
    const Eigen::MatrixXcd rho = h.orbitals.phi * h.orbitals.phi.adjoint();
    for (int i = 0; i < 16; ++i)
      for (int k = 0; k < 16; ++k)
        ex += 0.5 * s.interaction(s.grid.position(i) - s.grid.position(k), 10.0) * std::norm(rho(i, k));
    EXPECT_NEAR(exact / (eh - ex), 1.0, 20 * w0) << "w0 " << w0;
  }
}

TEST(KsHamiltonian, UniformPhaseShiftsDispersion) {
  Grid1D g(10.0, 16);
  RealVector zero = RealVector::Zero(16);
  const double th = 0.3;
  auto h = ks_hamiltonian(g, zero, zero, std::vector<complex>(16, std::polar(1.0, -th)), 1.0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h);
  std::vector<double> expect;
  for (int q = 0; q < 16; ++q)
    expect.push_back((1 - std::cos(2 * M_PI * q / 16.0 + th)) / (0.625 * 0.625));
  std::sort(expect.begin(), expect.end());
  for (int i = 0; i < 16; ++i) EXPECT_NEAR(es.eigenvalues()[i], expect[i], 1e-12);
  EXPECT_LT((h - h.adjoint()).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Orbitals, FreeLatticeAndResiduals) {
  Grid1D g(10.0, 16);
  RealVector zero = RealVector::Zero(16);
  auto o = solve_orbitals(ks_hamiltonian(g, zero, zero, trivial_link_phases(g), 1.0), 1);
  EXPECT_NEAR(o.energies[0], 0.0, 1e-13);
  EXPECT_LT((o.phi.col(0).cwiseAbs().array() - 0.25).abs().maxCoeff(), 1e-12);
  EXPECT_NEAR(grid_integral(ks_density(o, g), RealVector::Ones(16), g), -1.0, 1e-13);

  std::mt19937_64 rng(5);
  std::normal_distribution<double> n01;
  Eigen::MatrixXcd m(16, 16);
  for (int r = 0; r < 16; ++r)
    for (int c = 0; c < 16; ++c) m(r, c) = {n01(rng), n01(rng)};
  auto r = solve_orbitals(0.5 * (m + m.adjoint()), 3);
  EXPECT_LT(r.residual, 1e-10);
  EXPECT_LT((r.phi.adjoint() * r.phi - Eigen::MatrixXcd::Identity(3, 3)).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(KsCurrent, RealOrbitalsCarryNoCurrent) {
  auto s = reference_spec();
  RealVector zero = RealVector::Zero(16);
  const auto ph = trivial_link_phases(s.grid);
  auto o = solve_orbitals(ks_hamiltonian(s.grid, s.v, zero, ph, 1.0), 2);
  EXPECT_LT(ks_bond_current(o, s.grid, ph, 1.0).cwiseAbs().maxCoeff(), 1e-14);
  // A plane wave carries a uniform current, which has no transverse component.
  Orbitals pw;
  pw.phi.resize(16, 1);
  for (int i = 0; i < 16; ++i) pw.phi(i, 0) = std::polar(0.25, 2 * M_PI * 2 * i / 16.0);
  const RealVector j = ks_bond_current(pw, s.grid, ph, 1.0);
  EXPECT_GT(std::abs(j.mean()), 0.1);
  EXPECT_LT(bond_current_coefficients(j, s).norm(), 1e-14);
}

TEST(KsCurrent, KineticEnergyDerivativeWithRespectToField) {
  // For fixed orbitals, dE_kin/d(eps) along a field perturbation delta equals
  // -gamma sum w (delta conj(J_s) + c.c.).
  auto s = reference_spec(0.3);
  std::mt19937_64 rng(2);
  std::normal_distribution<double> n01;
  Eigen::MatrixXcd m(16, 16);
  for (int r = 0; r < 16; ++r)
    for (int c = 0; c < 16; ++c) m(r, c) = {n01(rng), n01(rng)};
  const Orbitals o = solve_orbitals(0.5 * (m + m.adjoint()), 2);
  TransverseCurrent base = TransverseCurrent::zero(s.modes), delta = base;
  set_mode(base, s.modes, 1, {0.3, 0.1});
  set_mode(base, s.modes, 2, {-0.2, 0.05});
  set_mode(delta, s.modes, 1, {0.4, -0.7});
  set_mode(delta, s.modes, 2, {0.1, 0.2});
  const double kappa = coherent_link_factor(s.modes, s.grid);
  const RealVector zero = RealVector::Zero(16);
  auto ekin = [&](double eps) {
    const ClassicalField f{(base + eps * delta).coeffs};
    const auto h = ks_hamiltonian(s.grid, zero, zero, classical_link_phases(f, s), kappa);
    double e = 0;
    for (int k = 0; k < 2; ++k) e += o.phi.col(k).dot(h * o.phi.col(k)).real();
    return e;
  };
  const double h = 1e-5;
  const double fd = (ekin(h) - ekin(-h)) / (2 * h);
  const ClassicalField f0{base.coeffs};
  const auto js = ks_physical_current(o, f0, s);
  EXPECT_NEAR(fd, -s.modes.coupling() * coupling_bilinear(ClassicalField{delta.coeffs}, js, s.modes), 1e-6);
}

TEST(UpdateField, SolvesPoissonWithAllSources) {
  auto s = reference_spec();
  TransverseCurrent js = TransverseCurrent::zero(s.modes), jxc = js;
  set_mode(js, s.modes, 1, {0.3, -0.1});
  set_mode(jxc, s.modes, 2, {0.01, 0.0});
  const ClassicalField a = update_field(s.j, js, jxc, s.modes);
  const TransverseCurrent total = s.j + s.modes.coupling() * js + jxc;
  const RealVector lhs = -spectral_second_derivative(a.on_grid(s.grid, s.modes), s.grid, s.modes);
  EXPECT_LT((lhs - from_mode_coefficients(total, s.grid, s.modes)).cwiseAbs().maxCoeff(), 1e-10);
  const auto zero = TransverseCurrent::zero(s.modes);
  const ClassicalField none = update_field(zero, zero, zero, s.modes);
  for (std::size_t n = 0; n < s.modes.size(); ++n) EXPECT_EQ(none[n], complex{});
}

TEST(MeanFieldEnergy, DecoupledLimits) {
  auto s = reference_spec(0.0);
  s.interaction.strength = 0.0;
  SCFConfig cfg;
  cfg.init = ScfInit::external_field;
  auto r = scf_loop(s, cfg);
  ASSERT_TRUE(r.converged);
  EXPECT_LE(r.iterations, 3);
  double photon = 0;
  for (std::size_t n = 0; n < s.modes.size(); ++n) photon -= s.modes.frequency(n) * std::norm(s.j[n]);
  EXPECT_NEAR(r.energy, r.state.orbitals.energies.sum() + photon, 1e-12);
  s.n_max = 8;
  EXPECT_NEAR(r.energy, ground_state(PauliFierzOperator(s)).energy, 1e-8);
  s.j = TransverseCurrent::zero(s.modes);
  auto r0 = scf_loop(s, cfg);
  EXPECT_NEAR(r0.energy, r0.state.orbitals.energies.sum(), 1e-12);
}

TEST(MeanFieldEnergy, WeakCouplingScalingWithoutInteraction) {
  // Without electron interaction the only error of the product ansatz is photon
  // induced, so E_MF - E_exact scales as gamma^2.
  auto s = tiny_spec(2, 0.0);
  s.interaction.strength = 0.0;
  s.n_max = 8;
  std::vector<double> g{0.1, 0.2, 0.4}, de;
  for (double gamma : g) {
    s.modes = s.modes.with_coupling(gamma);
    auto r = scf_loop(s, SCFConfig{});
    ASSERT_TRUE(r.converged);
    const double e = ground_state(PauliFierzOperator(s)).energy;
    EXPECT_GE(r.energy, e - 1e-10);
    de.push_back(r.energy - e);
  }
  const double slope = std::log(de[2] / de[0]) / std::log(g[2] / g[0]);
  EXPECT_NEAR(slope, 2.0, 0.3);
}
