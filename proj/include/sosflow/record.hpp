#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "sosflow/functional.hpp"
#include "sosflow/grid.hpp"
#include "sosflow/resolvent.hpp"

namespace sosflow {

struct DiagnosticsRecord {
  int step = 0;
  double t = 0.0;
  double phi = 0.0;
  double mass = 0.0;
  /// L2 distance to the stationary linear profile. The linear profile is the
  /// origin of the affine class h(x + L) = h(x) + 1; |h|_2 itself is not a
  /// Lyapunov quantity there.
  double l2 = 0.0;
  double min_slope = 0.0;
  double max_slope = 0.0;
  double tv_logslope = 0.0;
  double pos_mass = 0.0;
  double neg_mass = 0.0;
  double sing_pos = 0.0;
  double sing_neg = 0.0;
  std::optional<double> evi_viol;
};

inline double distance_to_linear(const HeightProfile& h) {
  return std::sqrt(l2_distance_sq(h, linear_profile(h.grid())));
}

inline DiagnosticsRecord record(const HeightProfile& h, double t, const ThresholdRule& rule = {},
                                int step = 0) {
  const double dx = h.grid().dx();
  const std::vector<double> u = slopes(h);
  const CurvatureDecomposition d = curvature(h, rule);
  DiagnosticsRecord r;
  r.step = step;
  r.t = t;
  r.phi = phi(d, dx).value;
  double mass = 0.0;
  for (double v : h.values()) mass += v;
  r.mass = mass * dx;
  r.l2 = distance_to_linear(h);
  const auto [lo, hi] = std::minmax_element(u.begin(), u.end());
  r.min_slope = *lo;
  r.max_slope = *hi;
  for (double q : d.q) {
    r.tv_logslope += std::abs(q) * dx;
    if (q > 0.0)
      r.pos_mass += q * dx;
    else
      r.neg_mass += -q * dx;
  }
  r.sing_pos = d.singular_pos_mass;
  r.sing_neg = d.singular_neg_mass;
  return r;
}

/// Time history of a run. `states` are snapshots taken at `times`, produced
/// by step `state_steps[k]`; `diagnostics` holds one record per accepted step
/// (plus the initial record at index 0).
struct Trajectory {
  std::vector<double> times;
  std::vector<HeightProfile> states;
  std::vector<int> state_steps;
  std::vector<StepReport> reports;
  std::vector<DiagnosticsRecord> diagnostics;

  void snapshot(const HeightProfile& h, double t, int step) {
    times.push_back(t);
    states.push_back(h);
    state_steps.push_back(step);
  }
};

}  // namespace sosflow
