#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "sosflow/diagnostics.hpp"

using namespace sosflow;

namespace {

HeightProfile alternating_profile() {
  const std::vector<double> u{0.5, 1.5, 0.5, 1.5};
  return profile_from_slopes(GridSpec::make(4, 1.0), u);
}

Trajectory stationary_trajectory() {
  EvolutionConfig cfg;
  cfg.n_steps = 4;
  return evolve(linear_profile(GridSpec::make(32, 1.0)), cfg);
}

}  // namespace

TEST(Record, LinearProfile) {
  const DiagnosticsRecord r = record(linear_profile(GridSpec::make(16, 2.0)), 0.5, {}, 3);
  EXPECT_EQ(r.step, 3);
  EXPECT_EQ(r.t, 0.5);
  EXPECT_NEAR(r.phi, 2.0, 1e-13);
  EXPECT_NEAR(r.tv_logslope, 0.0, 1e-12);
  EXPECT_NEAR(r.min_slope, 0.5, 1e-14);
  EXPECT_NEAR(r.max_slope, 0.5, 1e-14);
  EXPECT_NEAR(r.pos_mass, 0.0, 1e-12);
  EXPECT_NEAR(r.neg_mass, 0.0, 1e-12);
  EXPECT_NEAR(r.l2, 0.0, 1e-14);
  EXPECT_FALSE(r.evi_viol.has_value());
}

TEST(Record, AlternatingSlopes) {
  const DiagnosticsRecord r = record(alternating_profile(), 0.0);
  const double ln3 = std::log(3.0);
  EXPECT_NEAR(r.tv_logslope, 4.0 * ln3, 1e-12);
  EXPECT_NEAR(r.pos_mass, 2.0 * ln3, 1e-12);
  EXPECT_NEAR(r.neg_mass, 2.0 * ln3, 1e-12);
  EXPECT_NEAR(r.min_slope, 0.5, 1e-14);
  EXPECT_NEAR(r.max_slope, 1.5, 1e-14);
}

TEST(Record, HalfVariationIdentityOnRandomStates) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const GridSpec g = GridSpec::make(24, 1.0);
    std::vector<double> w(24);
    for (double& v : w) v = u(rng);
    const DiagnosticsRecord r = record(reconstruct(normalized(g, std::move(w))), 0.0);
    EXPECT_NEAR(r.pos_mass, r.neg_mass, 1e-10);
    EXPECT_NEAR(0.5 * r.tv_logslope, r.pos_mass, 1e-10);
  }
}

TEST(EviTest, StationaryTrajectoryLinearProbe) {
  const Trajectory t = stationary_trajectory();
  const HeightProfile lin = linear_profile(GridSpec::make(32, 1.0));
  const EviReport rep = evi_test(t, {lin}, BvBallSpec{10.0});
  EXPECT_EQ(rep.n_probes, 1);
  EXPECT_EQ(rep.n_pairs, 4);
  EXPECT_NEAR(rep.max_violation, 0.0, 1e-12);
}

TEST(EviTest, StationaryTrajectoryRandomProbes) {
  const Trajectory t = stationary_trajectory();
  const BvBallSpec ball{10.0};
  const auto probes = random_probes(GridSpec::make(32, 1.0), 10, 3, ball);
  const EviReport rep = evi_test(t, probes, ball);
  EXPECT_EQ(rep.n_pairs + rep.excluded_nonconvex, 40);
  EXPECT_LE(rep.max_violation, 1e-12);
}

TEST(EviTest, SineRun) {
  const HeightProfile h0 = sine_profile(GridSpec::make(64, 1.0), 0.01);
  EvolutionConfig cfg;
  cfg.n_steps = 32;
  const Trajectory t = evolve(h0, cfg);
  const BvBallSpec ball{derive_bounds(h0).c_star};
  const EviReport rep = evi_test(t, random_probes(h0.grid(), 20, 1, ball), ball);
  EXPECT_GT(rep.n_pairs, 0);
  EXPECT_LE(rep.max_violation, 100.0 * cfg.inner.grad_tol);
  EXPECT_EQ(rep.step_max.size(), 32u);
}

TEST(EviTest, InfeasibleProbe) {
  const Trajectory t = stationary_trajectory();
  const GridSpec g = GridSpec::make(32, 1.0);
  std::vector<double> u(32, 1.5);
  for (int i = 16; i < 32; ++i) u[i] = 0.5;
  EXPECT_THROW(evi_test(t, {profile_from_slopes(g, u)}, BvBallSpec{100.0}), InfeasibleProbe);
  EXPECT_THROW(evi_test(t, {}, BvBallSpec{100.0}), InvalidArgument);
}

TEST(RandomProbes, FeasibleAndDeterministic) {
  const GridSpec g = GridSpec::make(32, 1.0);
  const BvBallSpec ball{5.0};
  const auto a = random_probes(g, 8, 42, ball);
  const auto b = random_probes(g, 8, 42, ball);
  ASSERT_EQ(a.size(), 8u);
  for (std::size_t k = 0; k < a.size(); ++k) {
    EXPECT_TRUE(phi(a[k]).finite());
    EXPECT_EQ(psi(a[k], ball), 0.0);
    for (int i = 0; i < 32; ++i) EXPECT_EQ(a[k][i], b[k][i]);
  }
}

TEST(Perturbation, LinearDirectionalDerivativeVanishes) {
  const GridSpec g = GridSpec::make(32, 1.0);
  const PerturbationReport rep =
      perturbation_test(linear_profile(g), trig_direction(g, 1, false), {1e-3, 1e-4, 1e-5});
  EXPECT_NEAR(rep.analytic, 0.0, 1e-10);
}

TEST(Perturbation, RandomStateFirstOrder) {
  std::mt19937_64 rng(8);
  const GridSpec g = GridSpec::make(32, 1.0);
  const HeightProfile h = reconstruct(normalized(g, random_smooth_field(g, 4, 0.3, rng)));
  const PerturbationReport rep = perturbation_test(h, trig_direction(g, 1, true), {1e-3, 1e-4, 1e-5});
  ASSERT_EQ(rep.rows.size(), 3u);
  EXPECT_GE(rep.observed_order, 0.9);
  EXPECT_TRUE(rep.all_bracketed);
}

TEST(Perturbation, MonotonicityLost) {
  const GridSpec g = GridSpec::make(32, 1.0);
  EXPECT_THROW(perturbation_test(linear_profile(g), trig_direction(g, 3, true), {1.0}), MonotonicityLost);
}

TEST(WeakForm, SineRunResidualSmall) {
  const HeightProfile h0 = sine_profile(GridSpec::make(64, 1.0), 0.01);
  EvolutionConfig cfg;
  cfg.n_steps = 16;
  const Trajectory t = evolve(h0, cfg);
  std::vector<std::vector<double>> dirs;
  for (int k = 1; k <= 3; ++k)
    for (bool c : {true, false}) dirs.push_back(trig_direction(h0.grid(), k, c));
  EXPECT_LE(trajectory_weak_form_check(t, dirs), 1e-9);
}

TEST(RefinementStudy, NoEvolutionKeepsSampledKink) {
  const GridSpec g64 = GridSpec::make(64, 1.0);
  for (int n : {64, 128, 256}) {
    const auto d = curvature(kink_profile(GridSpec::make(n, 1.0), 0.5, 1.5));
    EXPECT_NEAR(d.singular_pos_mass, std::log(3.0), 1e-12);
    EXPECT_EQ(d.singular_neg_mass, 0.0);
  }
  EXPECT_EQ(curvature(sine_profile(g64, 0.01)).singular_pos_mass, 0.0);
}

TEST(RefinementStudy, ShortEvolution) {
  EvolutionConfig cfg;
  cfg.t_final = 1e-5;
  cfg.n_steps = 4;
  const RefinementReport rep = singularity_refinement_study(0.5, 1.5, 0.5, {32, 64}, 1.0, cfg);
  ASSERT_EQ(rep.levels.size(), 2u);
  EXPECT_NEAR(rep.levels[0].initial_pos, std::log(3.0), 1e-12);
  EXPECT_TRUE(rep.pos_persistent);
  EXPECT_TRUE(rep.neg_vanishing);
  EXPECT_THROW(singularity_refinement_study(0.5, 1.5, 0.5, {}, 1.0, cfg), InvalidArgument);
}

TEST(CheckInvariants, CleanAndTampered) {
  const HeightProfile h0 = sine_profile(GridSpec::make(32, 1.0), 0.01);
  EvolutionConfig cfg;
  cfg.n_steps = 8;
  const Trajectory t = evolve(h0, cfg);
  const DerivedBounds b = derive_bounds(h0);
  EXPECT_TRUE(check_invariants(t.diagnostics, b).empty());

  auto recs = t.diagnostics;
  recs[4].phi = recs[3].phi + 1e-6;
  auto v = check_invariants(recs, b);
  ASSERT_FALSE(v.empty());
  EXPECT_EQ(v[0].name, "phi_nonincreasing");
  EXPECT_EQ(v[0].step, 4);

  recs = t.diagnostics;
  recs[2].mass += 1e-9;
  v = check_invariants(recs, b);
  ASSERT_FALSE(v.empty());
  EXPECT_EQ(v[0].name, "mass_conservation");

  recs = t.diagnostics;
  recs[3].evi_viol = 1.0;
  v = check_invariants(recs, b);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0].name, "evi_violation");

  recs = t.diagnostics;
  recs[1].min_slope = 0.5 * b.c1;
  EXPECT_EQ(check_invariants(recs, b)[0].name, "slope_lower_bound");
}

TEST(Dissipation, RequiresEveryStep) {
  const HeightProfile h0 = sine_profile(GridSpec::make(32, 1.0), 0.01);
  EvolutionConfig cfg;
  cfg.n_steps = 8;
  cfg.snapshot_every = 2;
  EXPECT_THROW(dissipation_check(evolve(h0, cfg), 1e-10), InvalidArgument);
  cfg.snapshot_every = 1;
  const DissipationReport rep = dissipation_check(evolve(h0, cfg), 1e-10);
  EXPECT_TRUE(rep.holds);
  EXPECT_GT(rep.dissipated, 0.0);
  EXPECT_LE(rep.dissipated, rep.energy_drop + rep.allowance);
}
