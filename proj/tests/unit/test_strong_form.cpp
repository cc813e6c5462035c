#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "sosflow/strong_form.hpp"

using namespace sosflow;

namespace {

HeightProfile analytic_profile(int n) {
  const GridSpec g = GridSpec::make(n, 1.0);
  std::vector<double> h(n);
  for (int i = 0; i < n; ++i) {
    const double x = g.x(i);
    h[i] = x - 0.5 + 0.01 * std::sin(2.0 * std::numbers::pi * x);
  }
  return HeightProfile(g, std::move(h));
}

}  // namespace

TEST(StrongFormRhs, LinearIsZero) {
  for (int n : {8, 64, 128})
    for (double length : {1.0, 2.5}) {
      const auto r = rhs(linear_profile(GridSpec::make(n, length)));
      for (double v : r) EXPECT_NEAR(v, 0.0, 1e-12);
    }
}

TEST(StrongFormRhs, LinearOnNonDyadicGridAtRoundoffLevel) {
  // Node heights are not exact in binary, and the operator scales like N^4.
  const int n = 33;
  const double bound = 64.0 * std::numeric_limits<double>::epsilon() * std::pow(n, 4);
  for (double length : {1.0, 2.5})
    for (double v : rhs(linear_profile(GridSpec::make(n, length)))) EXPECT_LE(std::abs(v), bound);
}

TEST(StrongFormRhs, Conservative) {
  const HeightProfile h = sine_profile(GridSpec::make(64, 1.0), 0.01);
  double total = 0.0;
  for (double v : rhs(h)) total += v * h.grid().dx();
  EXPECT_NEAR(total, 0.0, 1e-10);
}

TEST(StrongFormRhs, EqualsNegativeScaledHeightGradient) {
  const HeightProfile h = sine_profile(GridSpec::make(32, 1.0), 0.02, 3);
  const auto r = rhs(h);
  const auto g = phi_height_gradient(h);
  for (int i = 0; i < h.size(); ++i) EXPECT_NEAR(r[i], -g[i] / h.grid().dx(), 1e-9 * std::abs(r[i]) + 1e-9);
}

TEST(StrongFormRhs, SecondOrderInSpace) {
  // Nodes of the N = 32 grid are every other node of N = 64 and N = 128.
  const auto r32 = rhs(analytic_profile(32));
  const auto r64 = rhs(analytic_profile(64));
  const auto r128 = rhs(analytic_profile(128));
  double e1 = 0.0, e2 = 0.0;
  for (int i = 0; i < 32; ++i) {
    e1 = std::max(e1, std::abs(r32[i] - r64[2 * i]));
    e2 = std::max(e2, std::abs(r64[2 * i] - r128[4 * i]));
  }
  EXPECT_GE(std::log2(e1 / e2), 1.8);
}

TEST(StrongFormRhs, NonMonotoneThrows) {
  const HeightProfile h(GridSpec::make(4, 1.0), {-0.25, -0.375, 0.25, 0.375});
  EXPECT_THROW(rhs(h), NonMonotone);
}

TEST(OracleDt, Formula) {
  EXPECT_NEAR(oracle_dt(0.5, 2.0, 0.5, 0.1), 0.1 * 0.0625 / 128.0, 1e-18);
}

TEST(OracleEvolve, LinearIsConstant) {
  const HeightProfile h0 = linear_profile(GridSpec::make(16, 1.0));
  OracleConfig cfg;
  cfg.t_final = 1e-4;
  const Trajectory traj = oracle_evolve(h0, cfg);
  ASSERT_EQ(traj.states.size(), 17u);
  for (const auto& s : traj.states) EXPECT_LE(std::sqrt(l2_distance_sq(s, h0)), 1e-14);
}

TEST(OracleEvolve, ConservesMassAndDissipates) {
  const HeightProfile h0 = sine_profile(GridSpec::make(32, 1.0), 0.01);
  OracleConfig cfg;
  cfg.t_final = 1e-3;
  const Trajectory traj = oracle_evolve(h0, cfg);
  EXPECT_NEAR(traj.times.back(), 1e-3, 1e-15);
  for (std::size_t k = 1; k < traj.diagnostics.size(); ++k) {
    EXPECT_NEAR(traj.diagnostics[k].mass, 0.0, 1e-10);
    EXPECT_LE(traj.diagnostics[k].phi, traj.diagnostics[k - 1].phi + 1e-12);
  }
}

TEST(OracleEvolve, FirstOrderInDt) {
  const HeightProfile h0 = sine_profile(GridSpec::make(16, 1.0), 0.01);
  std::vector<HeightProfile> finals;
  for (double s : {0.4, 0.2, 0.1}) {
    OracleConfig cfg;
    cfg.t_final = 1e-3;
    cfg.snapshots = 1;
    cfg.dt_safety = s;
    finals.push_back(oracle_evolve(h0, cfg).states.back());
  }
  const double d1 = std::sqrt(l2_distance_sq(finals[0], finals[1]));
  const double d2 = std::sqrt(l2_distance_sq(finals[1], finals[2]));
  EXPECT_GT(d1, 0.0);
  EXPECT_LE(d2, 0.6 * d1);
}

TEST(OracleConfig, Validation) {
  OracleConfig c;
  c.dt_safety = 1.5;
  EXPECT_THROW(c.validate(), InvalidArgument);
  c = {};
  c.snapshots = 0;
  EXPECT_THROW(c.validate(), InvalidArgument);
}
