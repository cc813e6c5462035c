#pragma once

// One backward-Euler (proximal) step
//
//   J_tau[h] = argmin_v  phi(v) + psi(v) + |v - h|^2 / (2 tau)
//
// solved in log-slope coordinates w = ln v_x, where monotonicity is automatic
// and the only constraint is sum(exp(w)) dx = 1. The inner solver is a
// projected Newton method on that manifold with an eigenvalue-modified
// Hessian and a backtracking line search; the retraction is the constant
// shift w -> w - ln(sum(exp(w)) dx).

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "sosflow/functional.hpp"
#include "sosflow/grid.hpp"

namespace sosflow {

struct InnerSolverConfig {
  double grad_tol = 1e-10;
  int max_iter = 200;
  double tau_backoff = 0.5;
  int max_backoffs = 20;
  double constraint_tol = 1e-12;

  void validate() const {
    if (!(grad_tol > 0.0)) throw InvalidArgument("grad_tol must be positive");
    if (max_iter < 1) throw InvalidArgument("max_iter must be positive");
    if (!(tau_backoff > 0.0 && tau_backoff < 1.0))
      throw InvalidArgument("tau_backoff must lie in (0, 1)");
    if (max_backoffs < 1) throw InvalidArgument("max_backoffs must be positive");
    if (!(constraint_tol > 0.0)) throw InvalidArgument("constraint_tol must be positive");
  }
};

struct StepReport {
  double tau_used = 0.0;
  int iterations = 0;
  double objective_before = 0.0;
  double objective_after = 0.0;
  double decrease = 0.0;
  int backoffs = 0;
  bool converged = false;
  double grad_norm = 0.0;
};

struct ResolventResult {
  HeightProfile state;
  StepReport report;
};

namespace detail {

/// Phi(tau, anchor; h(w)) as a smooth function of unconstrained w.
///
/// Singular nodes (fixed for the whole solve) keep their exponent frozen at
/// the regular value 0: their term is dx * (1 - (q_i - q_i^ref)), whose
/// derivative matches the weight exp(0) = 1 used by the strong form and
/// whose value at the reference state is the dx counted by phi.
class ProximalObjective {
 public:
  ProximalObjective(const HeightProfile& anchor, double tau, std::vector<bool> frozen,
                    std::vector<double> q_ref, double c_star)
      : n_(anchor.size()),
        dx_(anchor.grid().dx()),
        tau_(tau),
        c_star_(c_star),
        w_ref_(log_slope_field(anchor).w),
        s_ref_(slopes(anchor)),
        frozen_(std::move(frozen)),
        q_ref_(std::move(q_ref)) {
    for (double& v : s_ref_) v *= dx_;
    const std::vector<double> qa = log_slope_derivative(w_ref_, dx_);
    e_ref_.resize(n_);
    for (int i = 0; i < n_; ++i) {
      e_ref_[i] = std::exp(-qa[i]);
      base_ += frozen_[i] ? 1.0 - (qa[i] - q_ref_[i]) : e_ref_[i];
    }
    base_ *= dx_;
  }

  int size() const { return n_; }
  double dx() const { return dx_; }
  double reference_value() const { return base_; }

  struct Point {
    std::vector<double> s;   // exp(w) dx
    std::vector<double> q;   // (w_i - w_{i-1}) / dx
    std::vector<double> dq;  // q - q(anchor)
    std::vector<double> r;   // h(w) - anchor
  };

  Point point(std::span<const double> w) const {
    Point p;
    p.s.resize(n_);
    for (int i = 0; i < n_; ++i) p.s[i] = std::exp(w[i]) * dx_;
    p.q = log_slope_derivative(w, dx_);
    // Increments against the anchor keep r and dq accurate when they are tiny.
    std::vector<double> dw(n_);
    for (int k = 0; k < n_; ++k) dw[k] = w[k] - w_ref_[k];
    p.dq = log_slope_derivative(dw, dx_);
    p.r.resize(n_);
    double acc = 0.0;
    for (int k = 0; k < n_; ++k) {
      p.r[k] = acc;
      acc += s_ref_[k] * std::expm1(dw[k]);
    }
    const double m = mean(p.r);
    for (double& v : p.r) v -= m;
    return p;
  }

  /// Phi(w) - Phi(anchor); +inf when the slope field leaves the BV ball.
  double increment(const Point& p) const {
    double tv = 0.0;
    for (int i = 0; i < n_; ++i) tv += std::abs(p.s[i] - p.s[(i + n_ - 1) % n_]);
    if (tv / dx_ > c_star_) return kInfinity;
    double phi_part = 0.0;
    for (int i = 0; i < n_; ++i)
      phi_part += frozen_[i] ? -p.dq[i] : e_ref_[i] * std::expm1(-p.dq[i]);
    double prox = 0.0;
    for (double v : p.r) prox += v * v;
    return phi_part * dx_ + prox * dx_ / (2.0 * tau_);
  }

  /// Objective value; +inf when the slope field leaves the BV ball.
  double value(const Point& p) const { return base_ + increment(p); }

  double value(std::span<const double> w) const { return value(point(w)); }

  Eigen::VectorXd gradient(const Point& p) const {
    Eigen::VectorXd g = Eigen::VectorXd::Zero(n_);
    for (int i = 0; i < n_; ++i) {
      const double c = frozen_[i] ? 1.0 : std::exp(-p.q[i]);
      g[i] -= c;
      g[(i + n_ - 1) % n_] += c;
    }
    const std::vector<double> lever = prox_lever(p);
    for (int j = 0; j < n_; ++j) g[j] += lever[j] * p.s[j];
    return g;
  }

  Eigen::MatrixXd hessian(const Point& p) const {
    Eigen::MatrixXd hess = Eigen::MatrixXd::Zero(n_, n_);
    for (int i = 0; i < n_; ++i) {
      if (frozen_[i]) continue;
      const double c = std::exp(-p.q[i]) / dx_;
      const int im = (i + n_ - 1) % n_;
      hess(i, i) += c;
      hess(im, im) += c;
      hess(i, im) -= c;
      hess(im, i) -= c;
    }
    // J = P C diag(s) with C the strict cumulative sum and P the mean projection;
    // (C^T P C)_{ab} = (N-1-max(a,b)) - (N-1-a)(N-1-b)/N.
    const double scale = dx_ / tau_;
    const double nm1 = n_ - 1.0;
    for (int a = 0; a < n_; ++a) {
      for (int b = 0; b < n_; ++b) {
        const double m = (nm1 - std::max(a, b)) - (nm1 - a) * (nm1 - b) / n_;
        hess(a, b) += scale * m * p.s[a] * p.s[b];
      }
    }
    const std::vector<double> lever = prox_lever(p);
    for (int j = 0; j < n_; ++j) hess(j, j) += lever[j] * p.s[j];
    return hess;
  }

 private:
  // d prox / d s_j = (dx/tau) (sum_{k>j} r_k - (N-1-j)/N sum_k r_k)
  std::vector<double> prox_lever(const Point& p) const {
    double total = 0.0;
    for (double v : p.r) total += v;
    std::vector<double> lever(n_);
    double tail = 0.0;
    for (int j = n_ - 1; j >= 0; --j) {
      lever[j] = (dx_ / tau_) * (tail - (n_ - 1.0 - j) / n_ * total);
      tail += p.r[j];
    }
    return lever;
  }

  int n_;
  double dx_;
  double tau_;
  double c_star_;
  std::vector<double> w_ref_;
  std::vector<double> s_ref_;
  std::vector<double> e_ref_;
  double base_ = 0.0;
  std::vector<bool> frozen_;
  std::vector<double> q_ref_;
};

inline Eigen::VectorXd as_vector(std::span<const double> v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

/// Orthogonal projection of g onto the tangent space {d : s . d = 0}.
inline Eigen::VectorXd project_tangent(const Eigen::VectorXd& g, std::span<const double> s) {
  const Eigen::VectorXd n = as_vector(s);
  return g - n * (n.dot(g) / n.squaredNorm());
}

inline double scaled_norm(const Eigen::VectorXd& g, double dx) { return g.norm() / std::sqrt(dx); }

inline void retract(std::vector<double>& w, double dx) {
  double total = 0.0;
  for (double v : w) total += std::exp(v);
  const double shift = std::log(total * dx);
  for (double& v : w) v -= shift;
}

struct InnerResult {
  std::vector<double> w;
  int iterations = 0;
  bool converged = false;
  double value = 0.0;
  double increment = 0.0;
  double grad_norm = 0.0;
};

inline InnerResult minimize(const ProximalObjective& f, std::vector<double> w,
                            const InnerSolverConfig& cfg) {
  const int n = f.size();
  const double dx = f.dx();
  InnerResult out;
  ProximalObjective::Point p = f.point(w);
  double value = f.increment(p);
  for (int it = 0;; ++it) {
    const Eigen::VectorXd g = f.gradient(p);
    const Eigen::VectorXd s = as_vector(p.s);
    const double lambda = s.dot(g) / s.squaredNorm();
    const Eigen::VectorXd gp = g - lambda * s;
    out.grad_norm = scaled_norm(gp, dx);
    out.iterations = it;
    if (out.grad_norm <= cfg.grad_tol) {
      out.converged = true;
      break;
    }
    if (it >= cfg.max_iter) break;

    // Lagrangian Hessian restricted to the tangent space, made positive definite.
    Eigen::MatrixXd hl = f.hessian(p);
    hl.diagonal() -= lambda * s;
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(s);
    const Eigen::MatrixXd q = qr.householderQ();
    const Eigen::MatrixXd z = q.rightCols(n - 1);
    const Eigen::MatrixXd reduced = z.transpose() * hl * z;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(reduced);
    Eigen::VectorXd ev = eig.eigenvalues().cwiseAbs();
    const double floor = 1e-8 * std::max(ev.maxCoeff(), std::numeric_limits<double>::min());
    ev = ev.cwiseMax(floor);
    const Eigen::VectorXd rhs = eig.eigenvectors().transpose() * (z.transpose() * g);
    const Eigen::VectorXd dir = -z * (eig.eigenvectors() * rhs.cwiseQuotient(ev));
    const double slope = g.dot(dir);

    // Below this predicted decrease the objective cannot resolve the
    // Armijo test; the full Newton step is taken instead.
    const double noise = 64.0 * std::numeric_limits<double>::epsilon() *
                         std::max(1.0, std::abs(f.reference_value()));
    bool accepted = false;
    double alpha = 1.0;
    const double slack = 4.0 * std::numeric_limits<double>::epsilon() * std::abs(value);
    for (int ls = 0; ls < 60; ++ls, alpha *= 0.5) {
      std::vector<double> trial(n);
      for (int i = 0; i < n; ++i) trial[i] = w[i] + alpha * dir[i];
      retract(trial, dx);
      ProximalObjective::Point tp = f.point(trial);
      const double tv = f.increment(tp);
      const bool unresolved = alpha == 1.0 && -slope <= noise && std::isfinite(tv);
      if (unresolved || tv <= value + 1e-4 * alpha * slope + slack) {
        w = std::move(trial);
        p = std::move(tp);
        value = tv;
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
  }
  out.w = std::move(w);
  out.value = f.value(p);
  out.increment = value;
  return out;
}

}  // namespace detail

/// Gradient of Phi(tau, anchor; reconstruct(w)) with respect to w, orthogonally
/// projected onto the tangent space of sum(exp(w)) dx = 1.
inline std::vector<double> reduced_gradient(const LogSlopeField& w, const HeightProfile& anchor,
                                            double tau, const ThresholdRule& rule = {}) {
  if (!(tau > 0.0)) throw InvalidArgument("tau must be positive");
  if (!(std::abs(w.normalization() - 1.0) <= kNormalizationTolerance))
    throw NotNormalized("reduced_gradient needs a normalized log-slope field");
  const CurvatureDecomposition d = curvature(w, rule);
  const detail::ProximalObjective f(anchor, tau, d.is_flagged, d.q, kInfinity);
  const auto p = f.point(w.w);
  const Eigen::VectorXd gp = detail::project_tangent(f.gradient(p), p.s);
  return std::vector<double>(gp.data(), gp.data() + gp.size());
}

/// Scaled norm used by the inner solver's stopping test: |g| / sqrt(dx).
inline double gradient_norm(std::span<const double> g, double dx) {
  return detail::scaled_norm(detail::as_vector(g), dx);
}

inline ResolventResult resolvent_step(const HeightProfile& h, double tau, const BvBallSpec& ball,
                                      const ThresholdRule& rule = {},
                                      const InnerSolverConfig& cfg = {}) {
  if (!(tau > 0.0)) throw InvalidArgument("tau must be positive");
  cfg.validate();
  const PhiValue start = phi(h, rule);
  if (!start.finite())
    throw InfeasibleStart(std::string("phi(h) is infinite: ") + to_string(*start.reason));
  if (psi(h, ball) != 0.0) throw InfeasibleStart("initial state violates the BV ball");

  const LogSlopeField w0 = log_slope_field(h);
  const CurvatureDecomposition d = curvature(w0, rule);

  StepReport report;
  double tau_try = tau;
  for (int backoff = 0; backoff <= cfg.max_backoffs; ++backoff) {
    const detail::ProximalObjective f(h, tau_try, d.is_flagged, d.q, ball.c_star);
    const double before = f.value(w0.w);
    detail::InnerResult r = detail::minimize(f, w0.w, cfg);
    const double normalization_error =
        std::abs(LogSlopeField{h.grid(), r.w}.normalization() - 1.0);
    if (r.converged && r.increment <= cfg.grad_tol &&
        normalization_error <= cfg.constraint_tol) {
      report.tau_used = tau_try;
      report.iterations = r.iterations;
      report.objective_before = before;
      report.objective_after = r.value;
      report.decrease = before - r.value;
      report.backoffs = backoff;
      report.converged = true;
      report.grad_norm = r.grad_norm;
      return ResolventResult{reconstruct(LogSlopeField{h.grid(), std::move(r.w)}), report};
    }
    if (backoff < cfg.max_backoffs) tau_try *= cfg.tau_backoff;
  }
  throw NoDecrease("resolvent did not converge after " + std::to_string(cfg.max_backoffs) +
                       " tau back-offs (last tau " + std::to_string(tau_try) + ")",
                   cfg.max_backoffs);
}

}  // namespace sosflow
