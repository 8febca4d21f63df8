#include <gtest/gtest.h>

#include <cmath>

#include "common.hpp"
#include "qedft/field_core.hpp"

using namespace qedft;

TEST(Grid, SpacingAndBonds) {
  Grid1D g(10.0, 16);
  EXPECT_DOUBLE_EQ(g.spacing(), 0.625);
  EXPECT_DOUBLE_EQ(g.position(3), 1.875);
  EXPECT_DOUBLE_EQ(g.bond_position(0), 0.3125);
  EXPECT_EQ(g.wrap(16), 0);
  EXPECT_EQ(g.wrap(-1), 15);
  EXPECT_THROW(Grid1D(10.0, 3), Error);
  EXPECT_THROW(Grid1D(-1.0, 16), Error);
}

TEST(Modes, ClosureAndPrefactors) {
  ModeSet m({2, -1, 1, -2}, 10.0, 0.05);
  ASSERT_EQ(m.size(), 4u);
  EXPECT_EQ(m.label(0), -2);
  EXPECT_EQ(m.label(3), 2);
  EXPECT_EQ(m.partner(0), 3u);
  EXPECT_NEAR(m.frequency(2), 2 * M_PI / 10.0, 1e-15);
  EXPECT_NEAR(m.field_prefactor(3), 1.0 / std::sqrt(2.0 * (4 * M_PI / 10.0) * 10.0), 1e-15);
  EXPECT_THROW(ModeSet({1}, 10.0, 0.1), Error);
  EXPECT_THROW(ModeSet({0, 1, -1}, 10.0, 0.1), Error);
  EXPECT_THROW(ModeSet({1, 1, -1}, 10.0, 0.1), Error);
  EXPECT_THROW(ModeSet({1, -1}, 10.0, -0.1), Error);
}

TEST(Modes, AliasingRejected) {
  ModeSet m({-8, 8}, 10.0, 0.1);
  EXPECT_THROW(m.check_resolved_by(Grid1D(10.0, 16)), AliasingError);
  ModeSet ok({-7, 7}, 10.0, 0.1);
  EXPECT_NO_THROW(ok.check_resolved_by(Grid1D(10.0, 16)));
}

TEST(Transform, MatchesDirectSum) {
  Grid1D g(10.0, 16);
  ModeSet m({-3, -1, 1, 3}, 10.0, 0.1);
  RealVector f(16);
  for (int i = 0; i < 16; ++i) f[i] = std::sin(0.7 * i) + 0.3 * i * i / 16.0;
  auto c = to_mode_coefficients(f, g, m, 0.2);
  for (std::size_t n = 0; n < m.size(); ++n) {
    const double k = 2 * M_PI * m.label(n) / 10.0, w = std::abs(k);
    complex s{};
    for (int i = 0; i < 16; ++i) s += f[i] * std::exp(complex{0, -k * (0.625 * i + 0.2)});
    EXPECT_NEAR(std::abs(c[n] - s * 0.625 / std::sqrt(2 * w * w * w * 10.0)), 0.0, 1e-14);
  }
  EXPECT_LT(conjugation_defect(c, m), 1e-15);
}

TEST(Transform, RoundTripOnRepresentedModes) {
  Grid1D g(10.0, 16);
  ModeSet m({-2, -1, 1, 2}, 10.0, 0.1);
  TransverseCurrent c = TransverseCurrent::zero(m);
  fixtures::set_mode(c, m, 1, {0.3, -0.2});
  fixtures::set_mode(c, m, 2, {-0.1, 0.4});
  for (double off : {0.0, 0.3125}) {
    auto back = to_mode_coefficients(from_mode_coefficients(c, g, m, off), g, m, off);
    EXPECT_LT((back - c).norm(), 1e-14);
  }
}

TEST(Transform, AsymmetricCoefficientsRejected) {
  Grid1D g(10.0, 16);
  ModeSet m({-1, 1}, 10.0, 0.1);
  TransverseCurrent c = TransverseCurrent::zero(m);
  c[1] = {0.2, 0.1};
  EXPECT_THROW(from_mode_coefficients(c, g, m), SymmetryError);
}

TEST(Maxwell, SpectralSecondDerivativeOfCosine) {
  Grid1D g(10.0, 16);
  ModeSet m({-2, -1, 1, 2}, 10.0, 0.1);
  RealVector f(16), expect(16);
  const double k = 2 * M_PI * 2 / 10.0;
  for (int i = 0; i < 16; ++i) {
    f[i] = std::cos(k * g.position(i));
    expect[i] = -k * k * f[i];
  }
  EXPECT_LT((spectral_second_derivative(f, g, m) - expect).cwiseAbs().maxCoeff(), 1e-13);
}

TEST(Maxwell, StaticSolutionSatisfiesPoisson) {
  // -A'' = j on the grid, with A from the mode solve and j from the inverse transform.
  Grid1D g(10.0, 16);
  ModeSet m({-2, -1, 1, 2}, 10.0, 0.1);
  TransverseCurrent j = TransverseCurrent::zero(m);
  fixtures::set_mode(j, m, 1, {0.2, 0.05});
  fixtures::set_mode(j, m, 2, {-0.1, 0.3});
  const ClassicalField a = solve_static_maxwell(j, m);
  const RealVector ax = a.on_grid(g, m);
  const RealVector jx = from_mode_coefficients(j, g, m);
  EXPECT_LT((-spectral_second_derivative(ax, g, m) - jx).cwiseAbs().maxCoeff(), 1e-13);
  EXPECT_EQ(b_to_current(j), j);
}

TEST(Maxwell, CouplingBilinearEqualsGridIntegral) {
  Grid1D g(10.0, 16);
  ModeSet m({-2, -1, 1, 2}, 10.0, 0.1);
  TransverseCurrent j = TransverseCurrent::zero(m), al = TransverseCurrent::zero(m);
  fixtures::set_mode(j, m, 1, {0.2, 0.05});
  fixtures::set_mode(j, m, 2, {-0.1, 0.3});
  fixtures::set_mode(al, m, 1, {0.7, -0.4});
  fixtures::set_mode(al, m, 2, {0.1, 0.2});
  const ClassicalField a{al.coeffs};
  const double grid = grid_integral(from_mode_coefficients(j, g, m), a.on_grid(g, m), g);
  EXPECT_NEAR(coupling_bilinear(a, j, m), grid, 1e-13);
}

TEST(Gauge, ZeroMean) {
  RealVector v(5);
  v << 1, 2, 3, 4, 10;
  EXPECT_NEAR(gauge_fix(v).mean(), 0.0, 1e-15);
  EXPECT_NEAR(gauge_fix(v)[4] - gauge_fix(v)[0], 9.0, 1e-15);
}
