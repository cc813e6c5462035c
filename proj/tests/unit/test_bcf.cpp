#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "sosflow/bcf.hpp"

using namespace sosflow;

namespace {

StepConfiguration perturbed(int n, double amp) {
  std::vector<double> x(n);
  for (int i = 0; i < n; ++i)
    x[i] = static_cast<double>(i) / n + amp / n * std::sin(2.0 * std::numbers::pi * i / n);
  return StepConfiguration::make(1.0, std::move(x));
}

double max_gap_deviation(const StepConfiguration& s) {
  const double mean_gap = s.length / s.size();
  double d = 0.0;
  for (int i = 0; i < s.size(); ++i) d = std::max(d, std::abs(s.gap(i) - mean_gap));
  return d;
}

}  // namespace

TEST(StepConfiguration, Validation) {
  EXPECT_THROW(StepConfiguration::make(1.0, {0.0, 0.5}), InvalidArgument);
  EXPECT_THROW(StepConfiguration::make(0.0, {0.0, 0.2, 0.5}), InvalidArgument);
  EXPECT_THROW(StepConfiguration::make(1.0, {0.0, 0.5, 0.5}), StepCollision);
  EXPECT_THROW(StepConfiguration::make(1.0, {0.0, 0.5, 1.2}), StepCollision);
  const StepConfiguration s = StepConfiguration::make(3.0, {0.0, 1.2, 2.0});
  EXPECT_NEAR(s.gap(0), 1.2, 1e-15);
  EXPECT_NEAR(s.gap(2), 1.0, 1e-15);
  EXPECT_NEAR(s.gap(-1), 1.0, 1e-15);
  EXPECT_NEAR(s.min_gap(), 0.8, 1e-15);
}

TEST(StepForces, EqualSpacingIsZero) {
  for (double f : step_forces(equally_spaced_steps(10, 1.0))) EXPECT_NEAR(f, 0.0, 1e-12);
}

TEST(StepForces, ThreeStepExample) {
  const auto f = step_forces(StepConfiguration::make(3.0, {0.0, 1.2, 2.0}));
  EXPECT_NEAR(f[0], 0.16666666666666663, 1e-14);
  EXPECT_NEAR(f[1], -0.41666666666666663, 1e-14);
  EXPECT_NEAR(f[2], 0.25, 1e-14);
}

TEST(StepForces, SumToZero) {
  const auto f = step_forces(perturbed(37, 0.4));
  double total = 0.0;
  for (double v : f) total += v;
  EXPECT_NEAR(total, 0.0, 1e-10);
}

TEST(BcfRhs, ThreeStepExample) {
  const auto r = bcf_rhs(StepConfiguration::make(3.0, {0.0, 1.2, 2.0}));
  EXPECT_NEAR(r[0], 4.5, 1e-13);
  EXPECT_NEAR(r[1], -11.25, 1e-13);
  EXPECT_NEAR(r[2], 6.75, 1e-13);
}

TEST(BcfRhs, EqualSpacingIsZeroAndTranslationInvariant) {
  for (double v : bcf_rhs(equally_spaced_steps(16, 2.0, 0.3))) EXPECT_NEAR(v, 0.0, 1e-9);
  const StepConfiguration a = perturbed(16, 0.3);
  StepConfiguration b = a;
  for (double& x : b.x) x += 0.123;
  const auto ra = bcf_rhs(a), rb = bcf_rhs(b);
  double total = 0.0;
  for (int i = 0; i < 16; ++i) {
    EXPECT_NEAR(ra[i], rb[i], 1e-9 * std::max(1.0, std::abs(ra[i])));
    total += ra[i];
  }
  EXPECT_NEAR(total, 0.0, 1e-10 * 16 * 16 * 16);
}

TEST(BcfEvolve, EqualSpacingIsFixed) {
  const StepConfiguration s0 = equally_spaced_steps(20, 1.0);
  const StepTrajectory t = bcf_evolve(s0, 1e-4);
  ASSERT_EQ(t.states.size(), 17u);
  for (int i = 0; i < 20; ++i) EXPECT_NEAR(t.states.back().x[i], s0.x[i], 1e-12);
  EXPECT_NEAR(t.times.back(), 1e-4, 1e-18);
}

TEST(BcfEvolve, GapsRelaxTowardUniform) {
  const StepConfiguration s0 = perturbed(20, 0.3);
  const StepTrajectory t = bcf_evolve(s0, 2e-3);
  for (std::size_t k = 1; k < t.states.size(); ++k)
    EXPECT_LT(max_gap_deviation(t.states[k]), max_gap_deviation(t.states[k - 1]));
  EXPECT_LT(max_gap_deviation(t.states.back()), 0.5 * max_gap_deviation(s0));
}

TEST(BcfEvolve, FourthOrderInDt) {
  const StepConfiguration s0 = perturbed(12, 0.3);
  std::vector<StepConfiguration> finals;
  for (double dt : {4e-6, 2e-6, 1e-6}) {
    BcfConfig cfg;
    cfg.dt = dt;
    cfg.records = 1;
    finals.push_back(bcf_evolve(s0, 4e-4, cfg).states.back());
  }
  double d1 = 0.0, d2 = 0.0;
  for (int i = 0; i < 12; ++i) {
    d1 = std::max(d1, std::abs(finals[0].x[i] - finals[1].x[i]));
    d2 = std::max(d2, std::abs(finals[1].x[i] - finals[2].x[i]));
  }
  EXPECT_GE(std::log2(d1 / d2), 3.5);
}

TEST(BcfEvolve, CollisionAfterMaxHalvings) {
  // A nearly collided pair with a large fixed step and no halvings allowed.
  const StepConfiguration s0 = StepConfiguration::make(1.0, {0.0, 0.001, 0.5, 0.75});
  BcfConfig cfg;
  cfg.dt = 1e-2;
  cfg.max_halvings = 0;
  EXPECT_THROW(bcf_evolve(s0, 1e-2, cfg), StepCollision);
}

TEST(BcfConfig, Validation) {
  BcfConfig c;
  c.dt_safety = 0.0;
  EXPECT_THROW(c.validate(), InvalidArgument);
  c = {};
  c.records = 0;
  EXPECT_THROW(c.validate(), InvalidArgument);
  EXPECT_THROW(bcf_evolve(equally_spaced_steps(4, 1.0), 0.0), InvalidArgument);
}

TEST(StepsToProfile, EqualSpacingGivesLinear) {
  const GridSpec g = GridSpec::make(40, 1.0);
  const HeightProfile h = steps_to_profile(equally_spaced_steps(10, 1.0), g);
  const HeightProfile lin = linear_profile(g);
  for (int i = 0; i < 40; ++i) EXPECT_NEAR(h[i], lin[i], 1e-12);
  EXPECT_THROW(steps_to_profile(equally_spaced_steps(10, 2.0), g), InvalidArgument);
}

TEST(StepsToProfile, LinearRoundTrip) {
  const GridSpec g = GridSpec::make(64, 1.0);
  const HeightProfile lin = linear_profile(g);
  const HeightProfile back = steps_to_profile(profile_to_steps(lin, 64), g);
  for (int i = 0; i < 64; ++i) EXPECT_NEAR(back[i], lin[i], 1e-10);
}

TEST(StepsToProfile, SineRoundTrip) {
  const GridSpec g = GridSpec::make(100, 1.0);
  const HeightProfile h = sine_profile(g, 0.05);
  const HeightProfile back = steps_to_profile(profile_to_steps(h, 100), g);
  for (int i = 0; i < 100; ++i) EXPECT_LE(std::abs(back[i] - h[i]), 2.0 / 100);
}

TEST(ProfileToSteps, NonMonotone) {
  const HeightProfile h(GridSpec::make(4, 1.0), {-0.25, -0.375, 0.25, 0.375});
  EXPECT_THROW(profile_to_steps(h, 8), NonMonotone);
  EXPECT_THROW(profile_to_steps(linear_profile(GridSpec::make(8, 1.0)), 2), InvalidArgument);
}
