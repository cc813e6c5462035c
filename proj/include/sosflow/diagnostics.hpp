#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "sosflow/evolution.hpp"
#include "sosflow/functional.hpp"
#include "sosflow/record.hpp"

namespace sosflow {

struct EviReport {
  int n_probes = 0;
  int n_pairs = 0;
  double max_violation = -kInfinity;
  int worst_probe_id = -1;
  int worst_step = -1;
  int excluded_nonconvex = 0;
  /// max violation per tested step and the step it belongs to
  std::vector<double> step_max;
  std::vector<int> step_index;
};

/// Feasible probes around the linear profile: w is a random smooth field,
/// halved until phi is finite and psi vanishes.
inline std::vector<HeightProfile> random_probes(const GridSpec& grid, int count, std::uint64_t seed,
                                                const BvBallSpec& ball, double amplitude = 0.05,
                                                const ThresholdRule& rule = {}) {
  if (count < 1) throw InvalidArgument("need at least one probe");
  std::mt19937_64 rng(seed);
  std::vector<HeightProfile> probes;
  probes.reserve(count);
  while (static_cast<int>(probes.size()) < count) {
    const std::vector<double> base = random_smooth_field(grid, 4, 1.0, rng);
    for (double a = amplitude; a > 1e-12; a *= 0.5) {
      std::vector<double> w(base);
      for (double& v : w) v *= a;
      HeightProfile v = reconstruct(normalized(grid, std::move(w)));
      if (phi(v, rule).finite() && psi(v, ball) == 0.0) {
        probes.push_back(std::move(v));
        break;
      }
    }
  }
  return probes;
}

/// Step-level inequality
///   <(h_{n+1} - h_n)/tau_n, h_{n+1} - v> <= phi(v) + psi(v) - phi(h_{n+1})
/// checked on consecutive snapshot pairs. Pairs whose segment
/// [h_{n+1}, v] fails the convexity probe by more than 1e-8 are skipped.
inline EviReport evi_test(const Trajectory& traj, const std::vector<HeightProfile>& probes,
                          const BvBallSpec& ball, const ThresholdRule& rule = {},
                          int convexity_samples = 21) {
  if (traj.states.size() < 2) throw InvalidArgument("evi_test needs at least two states");
  if (probes.empty()) throw InvalidArgument("evi_test needs at least one probe");
  std::vector<double> probe_energy(probes.size());
  for (std::size_t j = 0; j < probes.size(); ++j) {
    const PhiValue p = phi(probes[j], rule);
    if (!p.finite() || psi(probes[j], ball) != 0.0)
      throw InfeasibleProbe("probe " + std::to_string(j) + " is not feasible");
    probe_energy[j] = p.value;
  }

  EviReport rep;
  rep.n_probes = static_cast<int>(probes.size());
  for (std::size_t k = 0; k + 1 < traj.states.size(); ++k) {
    if (traj.state_steps[k + 1] != traj.state_steps[k] + 1) continue;
    const HeightProfile& prev = traj.states[k];
    const HeightProfile& next = traj.states[k + 1];
    const double tau = traj.times[k + 1] - traj.times[k];
    const double dx = next.grid().dx();
    const double energy = phi(next, rule).value;
    double worst = -kInfinity;
    for (std::size_t j = 0; j < probes.size(); ++j) {
      if (convexity_probe(next, probes[j], convexity_samples, rule) > 1e-8) {
        ++rep.excluded_nonconvex;
        continue;
      }
      double lhs = 0.0;
      for (int i = 0; i < next.size(); ++i)
        lhs += (next[i] - prev[i]) / tau * (next[i] - probes[j][i]);
      lhs *= dx;
      const double viol = lhs - (probe_energy[j] - energy);
      ++rep.n_pairs;
      worst = std::max(worst, viol);
      if (viol > rep.max_violation) {
        rep.max_violation = viol;
        rep.worst_probe_id = static_cast<int>(j);
        rep.worst_step = traj.state_steps[k + 1];
      }
    }
    rep.step_max.push_back(worst);
    rep.step_index.push_back(traj.state_steps[k + 1]);
  }
  return rep;
}

/// Periodic trigonometric test direction cos or sin of mode k, node-sampled.
inline std::vector<double> trig_direction(const GridSpec& grid, int mode, bool cosine) {
  std::vector<double> d(grid.n);
  for (int i = 0; i < grid.n; ++i) {
    const double arg = 2.0 * std::numbers::pi * mode * grid.x(i) / grid.length;
    d[i] = cosine ? std::cos(arg) : std::sin(arg);
  }
  project_mean_zero(d);
  return d;
}

struct PerturbationRow {
  double eps = 0.0;
  double forward = 0.0;   // (phi(h + eps d) - phi(h)) / eps
  double backward = 0.0;  // (phi(h) - phi(h - eps d)) / eps
  double error = 0.0;     // max of both deviations from the analytic value
  bool bracketed = false;
};

struct PerturbationReport {
  double analytic = 0.0;
  std::vector<PerturbationRow> rows;
  /// log(error_k / error_{k+1}) / log(eps_k / eps_{k+1}), minimum over consecutive pairs
  double observed_order = 0.0;
  bool all_bracketed = false;
};

inline PerturbationReport perturbation_test(const HeightProfile& h, const std::vector<double>& direction,
                                            const std::vector<double>& eps_list,
                                            const ThresholdRule& rule = {}) {
  if (static_cast<int>(direction.size()) != h.size())
    throw InvalidArgument("direction size does not match the grid");
  if (eps_list.empty()) throw InvalidArgument("need at least one eps");
  const PhiValue base = phi(h, rule);
  if (!base.finite()) throw InfeasibleStart("perturbation_test needs a feasible state");
  const std::vector<double> grad = phi_height_gradient(h, rule);
  PerturbationReport rep;
  for (int k = 0; k < h.size(); ++k) rep.analytic += grad[k] * direction[k];

  auto shifted = [&](double eps) {
    std::vector<double> v(h.values().begin(), h.values().end());
    for (int k = 0; k < h.size(); ++k) v[k] += eps * direction[k];
    HeightProfile out(h.grid(), std::move(v));
    if (!out.monotone())
      throw MonotonicityLost("perturbation eps = " + std::to_string(eps) + " breaks monotonicity");
    return out;
  };
  rep.all_bracketed = true;
  for (double eps : eps_list) {
    PerturbationRow row;
    row.eps = eps;
    const PhiValue up = phi(shifted(eps), rule);
    const PhiValue down = phi(shifted(-eps), rule);
    row.forward = (up.value - base.value) / eps;
    row.backward = (base.value - down.value) / eps;
    row.error = std::max(std::abs(row.forward - rep.analytic), std::abs(row.backward - rep.analytic));
    const double slack = 1e-9 * std::max(1.0, std::abs(rep.analytic));
    row.bracketed = row.backward <= rep.analytic + slack && rep.analytic <= row.forward + slack;
    rep.all_bracketed = rep.all_bracketed && row.bracketed;
    rep.rows.push_back(row);
  }
  rep.observed_order = kInfinity;
  for (std::size_t k = 0; k + 1 < rep.rows.size(); ++k) {
    const auto& a = rep.rows[k];
    const auto& b = rep.rows[k + 1];
    if (a.error == 0.0 || b.error == 0.0) continue;
    rep.observed_order =
        std::min(rep.observed_order, std::log(a.error / b.error) / std::log(a.eps / b.eps));
  }
  return rep;
}

/// Weak form on consecutive minimizing-movement steps:
///   <(h_{n+1} - h_n)/tau, d> + <grad phi(h_{n+1}), d> = 0
/// for each test direction; returns the largest residual.
inline double trajectory_weak_form_check(const Trajectory& traj,
                                         const std::vector<std::vector<double>>& directions,
                                         const ThresholdRule& rule = {}) {
  double worst = 0.0;
  for (std::size_t k = 0; k + 1 < traj.states.size(); ++k) {
    if (traj.state_steps[k + 1] != traj.state_steps[k] + 1) continue;
    const HeightProfile& prev = traj.states[k];
    const HeightProfile& next = traj.states[k + 1];
    const double tau = traj.times[k + 1] - traj.times[k];
    const double dx = next.grid().dx();
    const std::vector<double> grad = phi_height_gradient(next, rule);
    for (const auto& d : directions) {
      double r = 0.0;
      for (int i = 0; i < next.size(); ++i) r += ((next[i] - prev[i]) / tau * dx + grad[i]) * d[i];
      worst = std::max(worst, std::abs(r));
    }
  }
  return worst;
}

struct RefinementLevel {
  int n = 0;
  double initial_pos = 0.0;
  double initial_neg = 0.0;
  double final_pos = 0.0;
  double final_neg = 0.0;
};

struct RefinementReport {
  std::vector<RefinementLevel> levels;
  /// final negative singular mass nonincreasing across levels and either
  /// strictly decreasing or identically zero
  bool neg_vanishing = false;
  /// max/min of final positive singular mass <= 2
  bool pos_persistent = false;
};

inline RefinementReport singularity_refinement_study(double left_slope, double right_slope,
                                                     double position, const std::vector<int>& levels,
                                                     double length, const EvolutionConfig& cfg) {
  if (levels.empty()) throw InvalidArgument("refinement study needs at least one level");
  RefinementReport rep;
  for (int n : levels) {
    const GridSpec grid = GridSpec::make(n, length);
    const HeightProfile h0 = kink_profile(grid, left_slope, right_slope, position);
    const CurvatureDecomposition d0 = curvature(h0, cfg.rule);
    const Trajectory traj = evolve(h0, cfg);
    const CurvatureDecomposition d1 = curvature(traj.states.back(), cfg.rule);
    rep.levels.push_back({n, d0.singular_pos_mass, d0.singular_neg_mass, d1.singular_pos_mass,
                          d1.singular_neg_mass});
  }
  constexpr double tiny = 1e-12;
  bool nonincreasing = true;
  bool strictly = true;
  bool all_zero = true;
  double lo = kInfinity;
  double hi = 0.0;
  for (std::size_t k = 0; k < rep.levels.size(); ++k) {
    const auto& l = rep.levels[k];
    all_zero = all_zero && l.final_neg <= tiny;
    if (k > 0) {
      nonincreasing = nonincreasing && l.final_neg <= rep.levels[k - 1].final_neg + tiny;
      strictly = strictly && l.final_neg < rep.levels[k - 1].final_neg;
    }
    lo = std::min(lo, l.final_pos);
    hi = std::max(hi, l.final_pos);
  }
  rep.neg_vanishing = nonincreasing && (strictly || all_zero);
  rep.pos_persistent = lo > 0.0 && hi <= 2.0 * lo;
  return rep;
}

struct InvariantTolerances {
  double grad_tol = 1e-10;
  double l2_slack = 1e-8;
  double mass_drift = 1e-12;
  double balance = 1e-10;
  double bound_rel = 1e-6;
  double tv_slack = 1e-6;
};

struct InvariantViolation {
  std::string name;
  int step = 0;
  double value = 0.0;
  double limit = 0.0;
};

/// Invariants that must hold along any minimizing-movement trajectory given
/// only its diagnostics history and the derived bounds of the initial state.
inline std::vector<InvariantViolation> check_invariants(const std::vector<DiagnosticsRecord>& recs,
                                                        const DerivedBounds& bounds,
                                                        const InvariantTolerances& tol = {}) {
  std::vector<InvariantViolation> out;
  if (recs.empty()) return out;
  const double lo = bounds.c1 * (1.0 - tol.bound_rel);
  const double hi = bounds.c2 * (1.0 + tol.bound_rel);
  const double tv_max = 2.0 * bounds.phi0 + tol.tv_slack;
  for (std::size_t k = 0; k < recs.size(); ++k) {
    const DiagnosticsRecord& r = recs[k];
    auto fail = [&](const char* name, double value, double limit) {
      out.push_back({name, r.step, value, limit});
    };
    if (r.min_slope < lo) fail("slope_lower_bound", r.min_slope, lo);
    if (r.max_slope > hi) fail("slope_upper_bound", r.max_slope, hi);
    if (r.tv_logslope > tv_max) fail("tv_logslope_bound", r.tv_logslope, tv_max);
    if (std::abs(r.pos_mass - r.neg_mass) > tol.balance)
      fail("curvature_balance", std::abs(r.pos_mass - r.neg_mass), tol.balance);
    if (std::abs(0.5 * r.tv_logslope - r.pos_mass) > tol.balance)
      fail("half_tv_identity", std::abs(0.5 * r.tv_logslope - r.pos_mass), tol.balance);
    if (r.evi_viol && *r.evi_viol > 100.0 * tol.grad_tol)
      fail("evi_violation", *r.evi_viol, 100.0 * tol.grad_tol);
    if (k == 0) continue;
    const DiagnosticsRecord& p = recs[k - 1];
    if (r.phi > p.phi + 10.0 * tol.grad_tol) fail("phi_nonincreasing", r.phi - p.phi, 10.0 * tol.grad_tol);
    if (r.l2 > p.l2 + tol.l2_slack) fail("l2_nonincreasing", r.l2 - p.l2, tol.l2_slack);
    if (std::abs(r.mass - p.mass) > tol.mass_drift)
      fail("mass_conservation", std::abs(r.mass - p.mass), tol.mass_drift);
  }
  return out;
}

struct DissipationReport {
  /// sum_n |h_{n+1} - h_n|^2 / tau_n
  double dissipated = 0.0;
  double energy_drop = 0.0;
  double allowance = 0.0;
  bool holds = false;
};

/// Requires every step to be stored (snapshot_every = 1).
inline DissipationReport dissipation_check(const Trajectory& traj, double grad_tol) {
  DissipationReport rep;
  if (traj.states.size() < 2) {
    rep.holds = true;
    return rep;
  }
  int steps = 0;
  for (std::size_t k = 0; k + 1 < traj.states.size(); ++k) {
    if (traj.state_steps[k + 1] != traj.state_steps[k] + 1)
      throw InvalidArgument("dissipation_check needs every step stored");
    const double tau = traj.times[k + 1] - traj.times[k];
    rep.dissipated += l2_distance_sq(traj.states[k + 1], traj.states[k]) / tau;
    ++steps;
  }
  rep.energy_drop = traj.diagnostics.front().phi - traj.diagnostics.back().phi;
  rep.allowance = steps * 10.0 * grad_tol;
  rep.holds = rep.dissipated <= rep.energy_drop + rep.allowance;
  return rep;
}

}  // namespace sosflow
