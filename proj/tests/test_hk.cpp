#include <gtest/gtest.h>

#include "common.hpp"
#include "qedft/hk_verify.hpp"

using namespace qedft;
using namespace qedft::fixtures;

TEST(Recovery, ExactSolutionGivesExternalCurrent) {
  for (auto s : {tiny_spec(2, 0.3), reference_spec()}) {
    s.center = FockCenter::external;
    if (s.grid.points() == 6) s.n_max = 10;
    auto inst = solve_instance(s, GroundStateOptions{});
    const auto rec = recover_external(inst.internal, inst.bond_current, s);
    EXPECT_LT((rec - s.j).norm(), 1e-7);
  }
}

TEST(Sampling, SymmetricAndGaugeFixed) {
  auto s = reference_spec();
  std::mt19937_64 rng(7);
  for (int k = 0; k < 5; ++k) {
    auto p = sample_external(s, SampleStrategy{}, rng);
    EXPECT_NEAR(p.v.mean(), 0.0, 1e-15);
    EXPECT_LT(conjugation_defect(p.j, s.modes), 1e-15);
    for (std::size_t n = 0; n < s.modes.size(); ++n) {
      EXPECT_GE(std::abs(p.j[n]), 0.05 - 1e-15);
      EXPECT_LE(std::abs(p.j[n]), 0.5 + 1e-15);
    }
  }
}

TEST(CrossCheck, RoutesAgreeAndMarginsPositive) {
  auto a = tiny_spec(2, 0.3), b = a;
  b.v = gauge_fix(b.v + 0.2 * RealVector::LinSpaced(6, 0.0, 1.0));
  set_mode(b.j, b.modes, 1, {-0.1, 0.3});
  auto sa = solve_instance(a, GroundStateOptions{});
  auto sb = solve_instance(b, GroundStateOptions{});
  auto c = variational_cross_check(sa, sb);
  EXPECT_NEAR(c.margin_ab, c.margin_ab_direct, 1e-9);
  EXPECT_NEAR(c.margin_ba, c.margin_ba_direct, 1e-9);
  EXPECT_GT(c.margin_ab, 1e-10);
  EXPECT_GT(c.margin_ba, 1e-10);
  EXPECT_GT(internal_distance(sa, sb), 1e-6);
  EXPECT_NEAR(detail::cross_energy(sa, sa), sa.ground.energy, 1e-10);
}

TEST(Scan, SmallScanInjective) {
  ScanOptions o;
  o.count = 3;
  auto base = reference_spec();
  base.center = FockCenter::external;
  auto r = scan_injectivity(base, o);
  EXPECT_TRUE(r.passed());
  EXPECT_LT(r.max_recovery_error, 1e-7);
  EXPECT_LT(r.max_margin_route_gap, 1e-8);
  EXPECT_GT(r.min_margin, 0.0);
  EXPECT_GT(r.min_ratio, 0.0);
}

TEST(Scan, HugeInternalThresholdFlagsEveryPair) {
  ScanOptions o;
  o.count = 3;
  o.eps_int = 1e3;
  auto r = scan_injectivity(tiny_spec(2, 0.3), o);
  EXPECT_EQ(r.violations.size(), 3u);
  EXPECT_FALSE(r.passed());
}

TEST(Scan, RejectsEmpty) {
  ScanOptions o;
  o.count = 0;
  EXPECT_THROW(scan_injectivity(tiny_spec(), o), Error);
}
