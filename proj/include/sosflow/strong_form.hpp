#pragma once

// Direct discretization of h_t = ((1/h_x) (exp(-((ln h_x)_x)_reg))_x)_x in
// conservative flux form, integrated with explicit Euler steps. Used as an
// independent reference for the minimizing-movement trajectory.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "sosflow/evolution.hpp"
#include "sosflow/functional.hpp"
#include "sosflow/record.hpp"

namespace sosflow {

struct OracleConfig {
  double dt_safety = 0.1;
  ThresholdRule rule{};
  double t_final = 1e-3;
  /// number of equally spaced output times after t = 0
  int snapshots = 16;

  void validate() const {
    if (!(dt_safety > 0.0 && dt_safety <= 1.0)) throw InvalidArgument("dt_safety must lie in (0, 1]");
    if (!(t_final > 0.0)) throw InvalidArgument("oracle t_final must be positive");
    if (snapshots < 1) throw InvalidArgument("oracle snapshots must be >= 1");
  }
};

namespace detail {

struct RhsEval {
  std::vector<double> rhs;
  double max_weight = 0.0;
  double min_slope = 0.0;
  double max_slope = 0.0;
};

inline RhsEval evaluate_rhs(const HeightProfile& h, const ThresholdRule& rule) {
  const int n = h.size();
  const double dx = h.grid().dx();
  const std::vector<double> u = slopes(h);
  const std::vector<double> g = exponent_weights(curvature(h, rule));
  std::vector<double> flux(n);
  for (int j = 0; j < n; ++j) flux[j] = (g[(j + 1) % n] - g[j]) / (dx * u[j]);
  RhsEval e;
  e.rhs.resize(n);
  for (int i = 0; i < n; ++i) e.rhs[i] = (flux[i] - flux[(i + n - 1) % n]) / dx;
  e.max_weight = *std::max_element(g.begin(), g.end());
  const auto [lo, hi] = std::minmax_element(u.begin(), u.end());
  e.min_slope = *lo;
  e.max_slope = *hi;
  return e;
}

}  // namespace detail

/// Node right-hand side r_i = (F_{i+1/2} - F_{i-1/2}) / dx with
/// F_{i+1/2} = (g_{i+1} - g_i) / (dx u_{i+1/2}) and g = exp(-q_regular).
inline std::vector<double> rhs(const HeightProfile& h, const ThresholdRule& rule = {}) {
  return detail::evaluate_rhs(h, rule).rhs;
}

/// Explicit step size for the fourth-order operator: linearizing about the
/// current state gives h_t ~ -(g/u^2) h_xxxx, whose discrete spectrum is
/// bounded by 16 g / (u^2 dx^4).
inline double oracle_dt(double dx, double max_weight, double min_slope, double dt_safety) {
  const double dx2 = dx * dx;
  return dt_safety * dx2 * dx2 / (16.0 * max_weight / (min_slope * min_slope));
}

inline Trajectory oracle_evolve(const HeightProfile& h0, const OracleConfig& cfg) {
  cfg.validate();
  const DerivedBounds bounds = derive_bounds(h0, cfg.rule);
  const GridSpec grid = h0.grid();
  const double dx = grid.dx();
  const double lo = 0.5 * bounds.c1;
  const double hi = 2.0 * bounds.c2;

  Trajectory traj;
  traj.snapshot(h0, 0.0, 0);
  traj.diagnostics.push_back(record(h0, 0.0, cfg.rule, 0));

  std::vector<double> h(h0.values().begin(), h0.values().end());
  HeightProfile state = h0;
  double t = 0.0;
  int step = 0;
  for (int k = 1; k <= cfg.snapshots; ++k) {
    const double target = k == cfg.snapshots ? cfg.t_final : cfg.t_final * k / cfg.snapshots;
    while (t < target) {
      const detail::RhsEval e = detail::evaluate_rhs(state, cfg.rule);
      if (e.min_slope < lo || e.max_slope > hi)
        throw BlowUp("oracle slopes left [c1/2, 2 c2] at t = " + std::to_string(t));
      double dt = oracle_dt(dx, e.max_weight, e.min_slope, cfg.dt_safety);
      bool hit = false;
      if (t + dt >= target) {
        dt = target - t;
        hit = true;
      }
      for (int i = 0; i < grid.n; ++i) h[i] += dt * e.rhs[i];
      t = hit ? target : t + dt;
      ++step;
      state = HeightProfile(grid, h);
      if (!state.monotone()) throw BlowUp("oracle lost monotonicity at t = " + std::to_string(t));
    }
    traj.snapshot(state, t, step);
    traj.diagnostics.push_back(record(state, t, cfg.rule, step));
  }
  return traj;
}

}  // namespace sosflow
