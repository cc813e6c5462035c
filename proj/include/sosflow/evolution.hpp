#pragma once

// Minimizing-movement iteration h_n(t) = (J_{t/n})^n [h0].

#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "sosflow/functional.hpp"
#include "sosflow/record.hpp"
#include "sosflow/resolvent.hpp"

namespace sosflow {

struct EvolutionConfig {
  double t_final = 1e-3;
  int n_steps = 32;
  InnerSolverConfig inner{};
  ThresholdRule rule{};
  std::optional<double> c_star_override;
  int snapshot_every = 1;

  void validate() const {
    if (!(t_final > 0.0)) throw InvalidArgument("t_final must be positive");
    if (n_steps < 1) throw InvalidArgument("n_steps must be >= 1");
    if (snapshot_every < 1) throw InvalidArgument("snapshot_every must be >= 1");
    if (c_star_override && !(*c_star_override > 0.0))
      throw InvalidArgument("c_star override must be positive");
    inner.validate();
  }
};

/// Slope bounds and ball radius implied by phi(h0).
///
/// Since the slopes average to 1/L over a period and
/// TV(ln h_x) <= 2 phi(h0), every slope satisfies |ln h_x - ln(1/L)| <= 2 phi(h0).
/// The ball radius uses the upper bound: |h_xx| <= c2 |(ln h_x)_x| <= 2 c2 phi(h0).
struct DerivedBounds {
  double phi0 = 0.0;
  double c1 = 0.0;
  double c2 = 0.0;
  double c_star = 1.0;
};

inline DerivedBounds derive_bounds(const HeightProfile& h0, const ThresholdRule& rule = {},
                                   std::optional<double> c_star_override = std::nullopt) {
  const PhiValue p = phi(h0, rule);
  if (!p.finite())
    throw InfeasibleStart(std::string("phi(h0) is infinite: ") + to_string(*p.reason));
  DerivedBounds b;
  b.phi0 = p.value;
  const double length = h0.grid().length;
  b.c1 = std::exp(-2.0 * b.phi0) / length;
  b.c2 = std::exp(2.0 * b.phi0) / length;
  b.c_star = c_star_override ? *c_star_override : 2.0 * b.c2 * b.phi0 + 1.0;
  return b;
}

/// Raised when a resolvent step fails; carries everything computed so far.
class EvolutionError : public NoDecrease {
 public:
  EvolutionError(const NoDecrease& cause, Trajectory partial)
      : NoDecrease(cause.what(), cause.backoffs()), partial_(std::move(partial)) {}
  const Trajectory& partial() const { return partial_; }

 private:
  Trajectory partial_;
};

inline Trajectory evolve(const HeightProfile& h0, const EvolutionConfig& cfg) {
  cfg.validate();
  const DerivedBounds bounds = derive_bounds(h0, cfg.rule, cfg.c_star_override);
  const BvBallSpec ball{bounds.c_star};
  if (psi(h0, ball) != 0.0) throw InfeasibleStart("initial state lies outside the BV ball");

  Trajectory traj;
  traj.snapshot(h0, 0.0, 0);
  traj.diagnostics.push_back(record(h0, 0.0, cfg.rule, 0));

  HeightProfile h = h0;
  double t = 0.0;
  int step = 0;
  for (int k = 1; k <= cfg.n_steps; ++k) {
    const double target = k == cfg.n_steps ? cfg.t_final : cfg.t_final * k / cfg.n_steps;
    while (t < target) {
      const double tau = target - t;
      ResolventResult r = [&] {
        try {
          return resolvent_step(h, tau, ball, cfg.rule, cfg.inner);
        } catch (const NoDecrease& e) {
          throw EvolutionError(e, traj);
        }
      }();
      t = r.report.tau_used == tau ? target : t + r.report.tau_used;
      h = std::move(r.state);
      ++step;
      traj.reports.push_back(r.report);
      traj.diagnostics.push_back(record(h, t, cfg.rule, step));
      const bool last = k == cfg.n_steps && t >= target;
      if (step % cfg.snapshot_every == 0 || last) traj.snapshot(h, t, step);
    }
  }
  return traj;
}

struct LipschitzEstimate {
  /// max over consecutive snapshots of |h_{n+1} - h_n|_2 / tau_n
  double max_step_rate = 0.0;
  /// one-sided local slope of phi at the first state from random perturbations
  double local_slope = 0.0;
};

/// Random smooth log-slope perturbation: trigonometric modes 1..modes with
/// N(0, 1/k^2) coefficients, scaled so that max |dw| = amplitude.
inline std::vector<double> random_smooth_field(const GridSpec& grid, int modes, double amplitude,
                                               std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> a(modes), b(modes);
  for (int k = 0; k < modes; ++k) {
    a[k] = normal(rng) / (k + 1);
    b[k] = normal(rng) / (k + 1);
  }
  std::vector<double> f(grid.n, 0.0);
  double peak = 0.0;
  for (int j = 0; j < grid.n; ++j) {
    const double x = (j + 0.5) / grid.n;
    for (int k = 0; k < modes; ++k) {
      const double arg = 2.0 * std::numbers::pi * (k + 1) * x;
      f[j] += a[k] * std::cos(arg) + b[k] * std::sin(arg);
    }
    peak = std::max(peak, std::abs(f[j]));
  }
  if (peak > 0.0)
    for (double& v : f) v *= amplitude / peak;
  return f;
}

inline LipschitzEstimate lipschitz_estimate(const Trajectory& traj, const ThresholdRule& rule = {},
                                            std::uint64_t seed = 1, int directions = 50,
                                            double amplitude = 1e-6) {
  if (traj.states.size() < 2) throw InvalidArgument("lipschitz_estimate needs two snapshots");
  LipschitzEstimate est;
  for (std::size_t k = 0; k + 1 < traj.states.size(); ++k) {
    if (traj.state_steps[k + 1] != traj.state_steps[k] + 1) continue;
    const double tau = traj.times[k + 1] - traj.times[k];
    const double dist = std::sqrt(l2_distance_sq(traj.states[k + 1], traj.states[k]));
    est.max_step_rate = std::max(est.max_step_rate, dist / tau);
  }

  const HeightProfile& h0 = traj.states.front();
  const GridSpec& grid = h0.grid();
  const double phi0 = phi(h0, rule).value;
  const LogSlopeField w0 = log_slope_field(h0);
  std::mt19937_64 rng(seed);
  for (int d = 0; d < directions; ++d) {
    const std::vector<double> dw = random_smooth_field(grid, 3, amplitude, rng);
    for (double sign : {1.0, -1.0}) {
      std::vector<double> w = w0.w;
      for (int j = 0; j < grid.n; ++j) w[j] += sign * dw[j];
      const HeightProfile v = reconstruct(normalized(grid, std::move(w)));
      const PhiValue pv = phi(v, rule);
      if (!pv.finite()) continue;
      const double dist = std::sqrt(l2_distance_sq(v, h0));
      if (dist > 0.0) est.local_slope = std::max(est.local_slope, std::max(phi0 - pv.value, 0.0) / dist);
    }
  }
  return est;
}

}  // namespace sosflow
