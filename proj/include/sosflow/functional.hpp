#pragma once

// Discrete energies on the periodic grid:
//   E(h)   = sum u ln u dx
//   phi(h) = sum over regular nodes of exp(-q_i) dx + dx per positive singular node
//   psi(h) = 0 if sum |u_{i+1/2} - u_{i-1/2}| <= C*, +inf otherwise
// and the proximal objective Phi(tau, h; v) = phi(v) + psi(v) + |v - h|^2 / (2 tau).

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "sosflow/grid.hpp"

namespace sosflow {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

enum class Infeasibility { NegativeSingular, NonMonotone };

inline const char* to_string(Infeasibility r) {
  switch (r) {
    case Infeasibility::NegativeSingular:
      return "NegativeSingular";
    case Infeasibility::NonMonotone:
      return "NonMonotone";
  }
  return "?";
}

struct PhiValue {
  double value = kInfinity;
  std::optional<Infeasibility> reason;

  bool finite() const { return !reason.has_value(); }

  static PhiValue infeasible(Infeasibility r) { return PhiValue{kInfinity, r}; }
};

struct BvBallSpec {
  double c_star = 1.0;

  static BvBallSpec make(double c_star) {
    if (!(c_star > 0.0)) throw InvalidArgument("C* must be positive");
    return BvBallSpec{c_star};
  }
};

inline double l2_distance_sq(const HeightProfile& a, const HeightProfile& b) {
  const double dx = a.grid().dx();
  double s = 0.0;
  for (int i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s * dx;
}

inline double l2_norm(std::span<const double> v, double dx) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s * dx);
}

inline double energy_E(const HeightProfile& h) {
  const double dx = h.grid().dx();
  double e = 0.0;
  for (double u : slopes(h)) e += u * std::log(u);
  return e * dx;
}

/// Weights g_i = exp(-q_i) on regular nodes and exp(0) = 1 on singular nodes.
inline std::vector<double> exponent_weights(const CurvatureDecomposition& d) {
  std::vector<double> g(d.q.size());
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = std::exp(-d.regular[i]);
  return g;
}

inline PhiValue phi(const CurvatureDecomposition& d, double dx) {
  double s = 0.0;
  for (std::size_t i = 0; i < d.q.size(); ++i) {
    if (d.is_flagged[i]) {
      if (d.q[i] < 0.0) return PhiValue::infeasible(Infeasibility::NegativeSingular);
      s += 1.0;
    } else {
      s += std::exp(-d.q[i]);
    }
  }
  return PhiValue{s * dx, std::nullopt};
}

inline PhiValue phi(const HeightProfile& h, const ThresholdRule& rule = {}) {
  if (!h.monotone()) return PhiValue::infeasible(Infeasibility::NonMonotone);
  return phi(curvature(h, rule), h.grid().dx());
}

/// Discrete |h_xx|_M: total variation of the slope field.
inline double slope_total_variation(const HeightProfile& h) {
  const int n = h.size();
  const double dx = h.grid().dx();
  std::vector<double> u(n);
  for (int i = 0; i < n; ++i) u[i] = (h.at(i + 1) - h[i]) / dx;
  double tv = 0.0;
  for (int i = 0; i < n; ++i) tv += std::abs(u[i] - u[(i + n - 1) % n]);
  return tv;
}

inline double psi(const HeightProfile& h, const BvBallSpec& ball) {
  return slope_total_variation(h) <= ball.c_star ? 0.0 : kInfinity;
}

struct ChemicalPotential {
  std::vector<double> values;
  std::vector<int> flagged;
};

/// mu = -(ln h_x)_x restricted to the regular part; singular nodes report 0.
inline ChemicalPotential mu(const HeightProfile& h, const ThresholdRule& rule = {}) {
  CurvatureDecomposition d = curvature(h, rule);
  ChemicalPotential m;
  m.values.resize(d.regular.size());
  for (std::size_t i = 0; i < d.regular.size(); ++i) m.values[i] = -d.regular[i];
  m.flagged = std::move(d.flagged);
  return m;
}

inline double moreau_objective(double tau, const HeightProfile& anchor,
                               const HeightProfile& candidate, const BvBallSpec& ball,
                               const ThresholdRule& rule = {}) {
  if (!(tau > 0.0)) throw InvalidArgument("tau must be positive");
  const PhiValue p = phi(candidate, rule);
  if (!p.finite()) return kInfinity;
  const double s = psi(candidate, ball);
  if (!std::isfinite(s)) return kInfinity;
  return p.value + s + l2_distance_sq(candidate, anchor) / (2.0 * tau);
}

/// Partial derivatives d phi / d h_k (not divided by dx) with singular nodes
/// carrying the frozen exponent 0. Equals -dx times the strong-form right-hand side.
inline std::vector<double> phi_height_gradient(const HeightProfile& h,
                                               const ThresholdRule& rule = {}) {
  const std::vector<double> u = slopes(h);
  const CurvatureDecomposition d = curvature(h, rule);
  const std::vector<double> g = exponent_weights(d);
  const int n = h.size();
  const double dx = h.grid().dx();
  std::vector<double> flux(n);
  for (int j = 0; j < n; ++j) flux[j] = (g[(j + 1) % n] - g[j]) / (dx * u[j]);
  std::vector<double> grad(n);
  for (int k = 0; k < n; ++k) grad[k] = flux[(k + n - 1) % n] - flux[k];
  return grad;
}

inline HeightProfile interpolate(const HeightProfile& u, const HeightProfile& v, double t) {
  std::vector<double> x(u.size());
  for (int i = 0; i < u.size(); ++i) x[i] = (1.0 - t) * u[i] + t * v[i];
  return HeightProfile(u.grid(), std::move(x));
}

/// max over t_k = k/(samples-1) of phi((1-t)u + t v) - [(1-t) phi(u) + t phi(v)].
/// Positive values mean the chord lies below the function somewhere.
inline double convexity_probe(const HeightProfile& u, const HeightProfile& v, int samples,
                              const ThresholdRule& rule = {}) {
  if (samples < 2) throw InvalidArgument("convexity probe needs at least 2 samples");
  const PhiValue pu = phi(u, rule);
  const PhiValue pv = phi(v, rule);
  if (!pu.finite() || !pv.finite()) throw InvalidArgument("convexity probe endpoints infeasible");
  const auto a = u.values();
  const auto b = v.values();
  if (std::equal(a.begin(), a.end(), b.begin(), b.end())) return 0.0;
  if (samples == 2) return 0.0;
  double worst = -kInfinity;
  for (int k = 1; k + 1 < samples; ++k) {
    const double t = static_cast<double>(k) / (samples - 1);
    const PhiValue pt = phi(interpolate(u, v, t), rule);
    const double chord = (1.0 - t) * pu.value + t * pv.value;
    worst = std::max(worst, pt.value - chord);
  }
  return worst;
}

}  // namespace sosflow
