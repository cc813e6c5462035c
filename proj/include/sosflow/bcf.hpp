#pragma once

// Burton-Cabrera-Frank step flow with nearest-neighbour inverse-gap
// interaction. Steps x_0 < ... < x_{N-1} carry heights i/N and repeat with
// period L: x_{i+N} = x_i + L.
//
//   f_i       = -(1/(x_{i+1} - x_i) - 1/(x_i - x_{i-1}))
//   dx_i/dt   = -N^2 (f_{i+1} - 2 f_i + f_{i-1})
//
// With gaps ~ 1/(N h_x) this is consistent with the linearized continuum
// equation h_t = ((1/h_x) mu_x)_x, mu = -(ln h_x)_x, in the same time variable.

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "sosflow/grid.hpp"

namespace sosflow {

struct StepConfiguration {
  double length = 1.0;
  std::vector<double> x;

  int size() const { return static_cast<int>(x.size()); }

  static StepConfiguration make(double length, std::vector<double> x) {
    if (!(length > 0.0)) throw InvalidArgument("step period must be positive");
    if (x.size() < 3) throw InvalidArgument("need at least 3 steps");
    StepConfiguration s{length, std::move(x)};
    s.check_gaps();
    return s;
  }

  /// x_{i+1} - x_i with periodic wrap.
  double gap(int i) const {
    const int n = size();
    const int j = (i % n + n) % n;
    return j + 1 < n ? x[j + 1] - x[j] : x[0] + length - x[j];
  }

  double min_gap() const {
    double g = gap(0);
    for (int i = 1; i < size(); ++i) g = std::min(g, gap(i));
    return g;
  }

  void check_gaps() const {
    for (int i = 0; i < size(); ++i)
      if (!(gap(i) > 0.0))
        throw StepCollision("non-positive gap " + std::to_string(gap(i)) + " after step " +
                            std::to_string(i));
  }
};

inline StepConfiguration equally_spaced_steps(int n, double length, double offset = 0.0) {
  std::vector<double> x(n);
  for (int i = 0; i < n; ++i) x[i] = offset + length * i / n;
  return StepConfiguration::make(length, std::move(x));
}

inline std::vector<double> step_forces(const StepConfiguration& s) {
  s.check_gaps();
  const int n = s.size();
  std::vector<double> f(n);
  for (int i = 0; i < n; ++i) f[i] = -(1.0 / s.gap(i) - 1.0 / s.gap(i - 1));
  return f;
}

inline std::vector<double> bcf_rhs(const StepConfiguration& s) {
  const std::vector<double> f = step_forces(s);
  const int n = s.size();
  const double scale = -static_cast<double>(n) * n;
  std::vector<double> r(n);
  for (int i = 0; i < n; ++i) r[i] = scale * (f[(i + 1) % n] - 2.0 * f[i] + f[(i + n - 1) % n]);
  return r;
}

struct BcfConfig {
  /// fixed step; 0 selects 0.5 * dt_safety * 2.78 g_min^2 / (16 N^2) each step
  double dt = 0.0;
  double dt_safety = 0.5;
  int max_halvings = 30;
  /// number of equally spaced output times after t = 0
  int records = 16;

  void validate() const {
    if (dt < 0.0) throw InvalidArgument("bcf dt must be >= 0");
    if (!(dt_safety > 0.0 && dt_safety <= 1.0)) throw InvalidArgument("bcf dt_safety must lie in (0, 1]");
    if (max_halvings < 0) throw InvalidArgument("bcf max_halvings must be >= 0");
    if (records < 1) throw InvalidArgument("bcf records must be >= 1");
  }
};

struct StepTrajectory {
  std::vector<double> times;
  std::vector<StepConfiguration> states;
  long steps_taken = 0;
};

namespace detail {

inline StepConfiguration rk4_step(const StepConfiguration& s, double dt) {
  const int n = s.size();
  auto shifted = [&](const std::vector<double>& k, double c) {
    StepConfiguration y = s;
    for (int i = 0; i < n; ++i) y.x[i] += c * k[i];
    return y;
  };
  const std::vector<double> k1 = bcf_rhs(s);
  const std::vector<double> k2 = bcf_rhs(shifted(k1, 0.5 * dt));
  const std::vector<double> k3 = bcf_rhs(shifted(k2, 0.5 * dt));
  const std::vector<double> k4 = bcf_rhs(shifted(k3, dt));
  StepConfiguration out = s;
  for (int i = 0; i < n; ++i) out.x[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  return out;
}

}  // namespace detail

/// Classical RK4 with a collision guard: a step that would bring any gap
/// below 1e-3 L / N is rejected and retried with half the step.
inline StepTrajectory bcf_evolve(const StepConfiguration& s0, double t_final,
                                 const BcfConfig& cfg = {}) {
  cfg.validate();
  if (!(t_final > 0.0)) throw InvalidArgument("bcf t_final must be positive");
  s0.check_gaps();
  const int n = s0.size();
  const double guard = 1e-3 * s0.length / n;

  StepTrajectory traj;
  traj.times.push_back(0.0);
  traj.states.push_back(s0);
  StepConfiguration s = s0;
  double t = 0.0;
  for (int k = 1; k <= cfg.records; ++k) {
    const double target = k == cfg.records ? t_final : t_final * k / cfg.records;
    while (t < target) {
      const double g = s.min_gap();
      double dt = cfg.dt > 0.0 ? cfg.dt : cfg.dt_safety * 2.78 * g * g / (16.0 * n * n);
      bool hit = false;
      if (t + dt >= target) {
        dt = target - t;
        hit = true;
      }
      int halvings = 0;
      for (;;) {
        StepConfiguration next = detail::rk4_step(s, dt);
        bool ok = true;
        for (int i = 0; i < n && ok; ++i) ok = next.gap(i) >= guard;
        if (ok) {
          s = std::move(next);
          break;
        }
        if (++halvings > cfg.max_halvings)
          throw StepCollision("steps collided near t = " + std::to_string(t));
        dt *= 0.5;
        hit = false;
      }
      t = hit ? target : t + dt;
      ++traj.steps_taken;
    }
    traj.times.push_back(t);
    traj.states.push_back(s);
  }
  return traj;
}

/// Samples the piecewise-linear interpolant through (x_i, i/N) onto the grid.
inline HeightProfile steps_to_profile(const StepConfiguration& s, const GridSpec& grid) {
  s.check_gaps();
  const int n = s.size();
  const double period = s.length;
  if (std::abs(period - grid.length) > 1e-12 * period)
    throw InvalidArgument("step period and grid length differ");
  // Extended step sequence (position, height) with index i in [-n, 2n).
  auto pos = [&](long i) {
    const long k = ((i % n) + n) % n;
    const long wraps = (i - k) / n;
    return s.x[k] + wraps * period;
  };
  auto level = [&](long i) { return static_cast<double>(i) / n; };
  std::vector<double> h(grid.n);
  long i = -n;
  for (int j = 0; j < grid.n; ++j) {
    const double xj = grid.x(j);
    while (pos(i + 1) <= xj) ++i;
    while (pos(i) > xj) --i;
    const double a = pos(i);
    const double b = pos(i + 1);
    h[j] = level(i) + (xj - a) / (b - a) * (level(i + 1) - level(i));
  }
  return HeightProfile(grid, std::move(h));
}

/// Step i sits where the piecewise-linear interpolant of h reaches h_0 + i/N.
inline StepConfiguration profile_to_steps(const HeightProfile& h, int n_steps) {
  if (n_steps < 3) throw InvalidArgument("need at least 3 steps");
  if (!h.monotone()) throw NonMonotone("profile_to_steps needs a monotone profile");
  const GridSpec& grid = h.grid();
  const double dx = grid.dx();
  std::vector<double> x(n_steps);
  long j = 0;
  for (int i = 0; i < n_steps; ++i) {
    const double target = h[0] + static_cast<double>(i) / n_steps;
    while (h.at(j + 1) <= target) ++j;
    const double a = h.at(j);
    const double b = h.at(j + 1);
    x[i] = (j + (target - a) / (b - a)) * dx;
  }
  return StepConfiguration::make(grid.length, std::move(x));
}

}  // namespace sosflow
