#pragma once

// Periodic 1D grid for monotone height profiles h(x + L) = h(x) + 1.
//
// Layout: heights live on nodes x_i = i*dx, slopes u_{i+1/2} and log-slopes
// w_{i+1/2} = ln u_{i+1/2} live on half nodes (stored at index i), curvature
// q_i = (w_{i+1/2} - w_{i-1/2}) / dx lives on nodes again.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "sosflow/errors.hpp"

namespace sosflow {

struct GridSpec {
  int n = 0;
  double length = 1.0;

  static GridSpec make(int n, double length) {
    if (n < 4) throw InvalidArgument("grid needs N >= 4, got " + std::to_string(n));
    if (!(length > 0.0) || !std::isfinite(length)) throw InvalidArgument("grid needs L > 0");
    return GridSpec{n, length};
  }

  double dx() const { return length / n; }
  double x(int i) const { return i * dx(); }

  friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

inline double mean(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

inline void project_mean_zero(std::vector<double>& v) {
  const double m = mean(v);
  for (double& x : v) x -= m;
}

/// Node heights of one period, always stored with zero mean.
class HeightProfile {
 public:
  HeightProfile(GridSpec grid, std::vector<double> values) : grid_(grid), h_(std::move(values)) {
    if (static_cast<int>(h_.size()) != grid_.n)
      throw InvalidArgument("profile size does not match grid");
    for (double v : h_)
      if (!std::isfinite(v)) throw InvalidArgument("profile contains non-finite height");
    project_mean_zero(h_);
  }

  const GridSpec& grid() const { return grid_; }
  int size() const { return grid_.n; }
  std::span<const double> values() const { return h_; }
  double operator[](int i) const { return h_[i]; }

  /// Periodic extension with the unit offset per period.
  double at(long i) const {
    const long n = grid_.n;
    long k = i % n;
    long wraps = i / n;
    if (k < 0) {
      k += n;
      --wraps;
    }
    return h_[k] + static_cast<double>(wraps);
  }

  bool monotone() const {
    for (int i = 0; i < grid_.n; ++i)
      if (!(at(i + 1) - h_[i] > 0.0)) return false;
    return true;
  }

 private:
  GridSpec grid_;
  std::vector<double> h_;
};

/// Log-slopes w_{i+1/2}; a valid field satisfies sum(exp(w)) * dx = 1.
struct LogSlopeField {
  GridSpec grid;
  std::vector<double> w;

  double normalization() const {
    double s = 0.0;
    for (double v : w) s += std::exp(v);
    return s * grid.dx();
  }
};

/// Shifts w by a constant so that sum(exp(w)) * dx = 1.
inline LogSlopeField normalized(GridSpec grid, std::vector<double> w) {
  LogSlopeField f{grid, std::move(w)};
  const double shift = std::log(f.normalization());
  for (double& v : f.w) v -= shift;
  return f;
}

inline std::vector<double> slopes(const HeightProfile& h) {
  const GridSpec& g = h.grid();
  const double dx = g.dx();
  std::vector<double> u(g.n);
  for (int i = 0; i < g.n; ++i) {
    u[i] = (h.at(i + 1) - h[i]) / dx;
    if (!(u[i] > 0.0))
      throw NonMonotone("non-positive slope " + std::to_string(u[i]) + " at half node " +
                        std::to_string(i));
  }
  return u;
}

inline LogSlopeField log_slope_field(const HeightProfile& h) {
  std::vector<double> u = slopes(h);
  for (double& v : u) v = std::log(v);
  return LogSlopeField{h.grid(), std::move(u)};
}

inline constexpr double kNormalizationTolerance = 1e-8;

/// Heights from log-slopes: h_{i+1} = h_i + exp(w_i) dx, then mean-zero.
inline HeightProfile reconstruct(const LogSlopeField& f) {
  const double total = f.normalization();
  if (!(std::abs(total - 1.0) <= kNormalizationTolerance))
    throw NotNormalized("sum(exp(w)) dx = " + std::to_string(total) + ", expected 1");
  const double dx = f.grid.dx();
  std::vector<double> h(f.grid.n);
  double acc = 0.0;
  for (int i = 0; i < f.grid.n; ++i) {
    h[i] = acc;
    acc += std::exp(f.w[i]) * dx / total;
  }
  return HeightProfile(f.grid, std::move(h));
}

inline HeightProfile profile_from_slopes(GridSpec grid, std::span<const double> u) {
  std::vector<double> w(u.begin(), u.end());
  for (double& v : w) {
    if (!(v > 0.0)) throw NonMonotone("slopes must be positive");
    v = std::log(v);
  }
  return reconstruct(LogSlopeField{grid, std::move(w)});
}

/// Decides which curvature nodes are treated as concentrated (singular) mass.
///
/// A node is singular when |q_i| > K / sqrt(dx). In adaptive mode
/// K = coefficient * max(1, median|q| * sqrt(dx)); otherwise K = coefficient.
/// A bounded density stays below c/sqrt(dx) as dx -> 0 while a point mass m
/// gives |q| = m/dx, so the two separate under refinement.
struct ThresholdRule {
  double coefficient = 5.0;
  bool adaptive = true;

  static ThresholdRule fixed(double k) { return ThresholdRule{k, false}; }
  static ThresholdRule never() {
    return ThresholdRule{std::numeric_limits<double>::infinity(), false};
  }

  double threshold(std::span<const double> q, double dx) const {
    const double root = std::sqrt(dx);
    double k = coefficient;
    if (adaptive && !q.empty()) {
      std::vector<double> a(q.size());
      std::transform(q.begin(), q.end(), a.begin(), [](double v) { return std::abs(v); });
      const std::size_t mid = a.size() / 2;
      std::nth_element(a.begin(), a.begin() + mid, a.end());
      double med = a[mid];
      if (a.size() % 2 == 0) {
        const double lower = *std::max_element(a.begin(), a.begin() + mid);
        med = 0.5 * (med + lower);
      }
      k *= std::max(1.0, med * root);
    }
    return k / root;
  }
};

struct CurvatureDecomposition {
  std::vector<double> q;
  std::vector<double> regular;
  std::vector<int> flagged;
  std::vector<bool> is_flagged;
  double singular_pos_mass = 0.0;
  double singular_neg_mass = 0.0;
  double threshold = 0.0;
};

/// Discrete (ln u)_x at nodes: q_i = (w_i - w_{i-1}) / dx with wrap.
inline std::vector<double> log_slope_derivative(std::span<const double> w, double dx) {
  const int n = static_cast<int>(w.size());
  std::vector<double> q(n);
  for (int i = 0; i < n; ++i) q[i] = (w[i] - w[(i + n - 1) % n]) / dx;
  return q;
}

inline CurvatureDecomposition decompose(std::vector<double> q, double dx,
                                        const ThresholdRule& rule) {
  CurvatureDecomposition d;
  d.threshold = rule.threshold(q, dx);
  d.regular = q;
  d.is_flagged.assign(q.size(), false);
  for (std::size_t i = 0; i < q.size(); ++i) {
    if (std::abs(q[i]) > d.threshold) {
      d.flagged.push_back(static_cast<int>(i));
      d.is_flagged[i] = true;
      d.regular[i] = 0.0;
      if (q[i] > 0.0)
        d.singular_pos_mass += q[i] * dx;
      else
        d.singular_neg_mass += -q[i] * dx;
    }
  }
  d.q = std::move(q);
  return d;
}

inline CurvatureDecomposition curvature(const LogSlopeField& f, const ThresholdRule& rule = {}) {
  const double dx = f.grid.dx();
  return decompose(log_slope_derivative(f.w, dx), dx, rule);
}

inline CurvatureDecomposition curvature(const HeightProfile& h, const ThresholdRule& rule = {}) {
  return curvature(log_slope_field(h), rule);
}

// Initial data families.

inline HeightProfile linear_profile(GridSpec grid) {
  std::vector<double> h(grid.n);
  for (int i = 0; i < grid.n; ++i) h[i] = grid.x(i) / grid.length;
  return HeightProfile(grid, std::move(h));
}

/// Linear profile plus amplitude * sin(2 pi k x / L).
inline HeightProfile sine_profile(GridSpec grid, double amplitude, int wavenumber = 1) {
  std::vector<double> h(grid.n);
  for (int i = 0; i < grid.n; ++i) {
    const double x = grid.x(i);
    h[i] = x / grid.length +
           amplitude * std::sin(2.0 * std::numbers::pi * wavenumber * x / grid.length);
  }
  return HeightProfile(grid, std::move(h));
}

/// Slope left_slope on [position/2, position) L, right_slope on [position, 1) L,
/// and a ramp linear in ln u on [0, position/2) L that returns right -> left.
/// The jump at `position` is a single node carrying mass ln(right/left); the
/// return is resolved over many cells. Renormalization keeps the slope ratio.
inline HeightProfile kink_profile(GridSpec grid, double left_slope, double right_slope,
                                  double position = 0.5) {
  if (!(left_slope > 0.0 && right_slope > 0.0))
    throw InvalidArgument("kink slopes must be positive");
  if (!(position > 0.0 && position < 1.0))
    throw InvalidArgument("kink position must lie in (0, 1)");
  const double wl = std::log(left_slope);
  const double wr = std::log(right_slope);
  const double ramp = 0.5 * position;
  std::vector<double> w(grid.n);
  for (int j = 0; j < grid.n; ++j) {
    const double xi = (j + 0.5) / grid.n;
    if (xi < ramp)
      w[j] = wr + (wl - wr) * (xi / ramp);
    else if (xi < position)
      w[j] = wl;
    else
      w[j] = wr;
  }
  return reconstruct(normalized(grid, std::move(w)));
}

}  // namespace sosflow
