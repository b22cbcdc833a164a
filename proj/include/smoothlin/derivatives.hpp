#pragma once

// First derivatives of the solution maps and of the conjugacies in both
// variables, plus a finite-difference harness to validate them.

#include "smoothlin/conjugacy.hpp"
#include "smoothlin/evolution.hpp"
#include "smoothlin/system.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace smoothlin {

/// Jacobians of x_2(k, n, ., .) and y(k, n, .) for every k on a trajectory.
struct TrajectoryJacobians {
  long lo = 0;
  long hi = 0;
  std::vector<Matrix> dx_dxi;   // dim_x x dim_x
  std::vector<Matrix> dx_deta;  // dim_x x dim_y
  std::vector<Matrix> dy_deta;  // dim_y x dim_y

  std::size_t at(long k) const { return static_cast<std::size_t>(k - lo); }
};

namespace detail {

inline Eigen::PartialPivLU<Matrix> checked_lu(const Matrix& s, long j, const char* what) {
  Eigen::PartialPivLU<Matrix> lu(s);
  const Matrix id = Matrix::Identity(s.rows(), s.cols());
  const double defect = (s * lu.solve(id) - id).lpNorm<Eigen::Infinity>();
  if (!(defect <= 1e-8)) throw SingularOperator(j, std::string(what) + " is numerically singular");
  return lu;
}

}  // namespace detail

/// (A_j + df_j/du (x, eta))^{-1}; at x = T_j(xi, eta) this is the backward-step Jacobian L.
inline Matrix backward_jacobian(const SystemSpec& sys, long j, const Vector& x, const Vector& eta) {
  const Matrix s = sys.A(j) + sys.f.jac_x(j, x, eta);
  return detail::checked_lu(s, j, "A_j + df_j/du").solve(Matrix::Identity(s.rows(), s.cols()));
}

/// Chain rule along tr: forward steps multiply by A_j + f_u, backward steps by
/// L = (A_j + f_u)^{-1}; the eta-chain adds f_v dy and L~ = -(A_j + f_u)^{-1} f_v.
inline TrajectoryJacobians trajectory_jacobians(const SystemSpec& sys, const Trajectory& tr, bool with_eta) {
  const int dx = sys.dim_x(), dy = sys.dim_y();
  const auto size = static_cast<std::size_t>(tr.hi - tr.lo + 1);
  TrajectoryJacobians out{tr.lo, tr.hi, std::vector<Matrix>(size), {}, {}};
  if (with_eta) {
    out.dx_deta.resize(size);
    out.dy_deta.resize(size);
  }
  const std::size_t c = out.at(tr.n);
  out.dx_dxi[c] = Matrix::Identity(dx, dx);
  if (with_eta) {
    out.dx_deta[c] = Matrix::Zero(dx, dy);
    out.dy_deta[c] = Matrix::Identity(dy, dy);
  }
  const bool has_y = with_eta && dy > 0;

  for (long j = tr.n; j < tr.hi; ++j) {
    const std::size_t i = out.at(j);
    const Vector& x = tr.x[i];
    const Vector& y = tr.y[i];
    const Matrix step = sys.A(j) + sys.f.jac_x(j, x, y);
    out.dx_dxi[i + 1] = step * out.dx_dxi[i];
    if (with_eta) {
      out.dx_deta[i + 1] = step * out.dx_deta[i];
      if (has_y) out.dx_deta[i + 1] += sys.f.jac_y(j, x, y) * out.dy_deta[i];
      out.dy_deta[i + 1] = has_y ? Matrix(sys.g.jac(j, y) * out.dy_deta[i]) : out.dy_deta[i];
    }
  }
  for (long j = tr.n - 1; j >= tr.lo; --j) {
    const std::size_t i = out.at(j);
    const Vector& x = tr.x[i];
    const Vector& y = tr.y[i];
    const auto lu = detail::checked_lu(sys.A(j) + sys.f.jac_x(j, x, y), j, "A_j + df_j/du");
    out.dx_dxi[i] = lu.solve(out.dx_dxi[i + 1]);
    if (with_eta) {
      if (has_y) {
        out.dy_deta[i] = detail::checked_lu(sys.g.jac(j, y), j, "Dg_j").solve(out.dy_deta[i + 1]);
        out.dx_deta[i] = lu.solve(Matrix(out.dx_deta[i + 1] - sys.f.jac_y(j, x, y) * out.dy_deta[i]));
      } else {
        out.dy_deta[i] = out.dy_deta[i + 1];
        out.dx_deta[i] = lu.solve(out.dx_deta[i + 1]);
      }
    }
  }
  return out;
}

namespace detail {

inline TrajectoryJacobians jacobians_between(const SystemSpec& sys, long k, long n, const Vector& xi,
                                             const Vector& eta, bool with_eta, const SolveOptions& opts) {
  const Trajectory tr = coupled_trajectory(sys, n, std::min(k, n), std::max(k, n), xi, eta, opts);
  return trajectory_jacobians(sys, tr, with_eta);
}

}  // namespace detail

inline Matrix d_x2_dxi(const SystemSpec& sys, long k, long n, const Vector& xi, const Vector& eta,
                       const SolveOptions& opts = {}) {
  const auto jac = detail::jacobians_between(sys, k, n, xi, eta, false, opts);
  return jac.dx_dxi[jac.at(k)];
}

inline Matrix d_x2_deta(const SystemSpec& sys, long k, long n, const Vector& xi, const Vector& eta,
                        const SolveOptions& opts = {}) {
  const auto jac = detail::jacobians_between(sys, k, n, xi, eta, true, opts);
  return jac.dx_deta[jac.at(k)];
}

/// Ordered product of Dg_j forward, or of the Jacobians of g_j^{-1} backward.
inline Matrix d_y_deta(const SystemSpec& sys, long k, long n, const Vector& eta) {
  const int dy = sys.dim_y();
  Matrix out = Matrix::Identity(dy, dy);
  if (dy == 0) return out;
  Vector y = eta;
  for (long j = n; j < k; ++j) {
    out = sys.g.jac(j, y) * out;
    y = sys.g.eval(j, y);
  }
  for (long j = n - 1; j >= k; --j) {
    y = sys.g.eval_inv(j, y);
    out = detail::checked_lu(sys.g.jac(j, y), j, "Dg_j").solve(out);
  }
  return out;
}

// ---------------------------------------------------------------------------
// bar_h and h

namespace detail {

inline void require_tail(const SeriesEstimate& est, long n, const char* what) {
  if (!est.converged())
    throw WindowExhausted(std::string(what) + " at n=" + std::to_string(n) + " has no tail bound (" +
                          to_string(est.verdict) + (est.witness.empty() ? "" : ": " + est.witness) + ")");
}

}  // namespace detail

/// -sum_k G(n,k+1) f_u d_x2/dxi over the plan window; the tail bounds the
/// neglected sum of |G(n,k+1)| gamma_k C_{k,n}.
inline SeriesValue<Matrix> d_barh_dxi_detailed(const ConjugacyEngine& engine, long n, const Vector& xi,
                                               const Vector& eta) {
  const SystemSpec& sys = engine.system();
  const SeriesPlan& plan = engine.plan(n);
  const SeriesEstimate& tail = engine.derivative_tail_x(n);
  detail::require_tail(tail, n, "derivative series in xi");
  const Trajectory tr = plan_trajectory(engine, plan, xi, eta);
  const auto jac = trajectory_jacobians(sys, tr, false);
  SeriesValue<Matrix> out{Matrix::Zero(sys.dim_x(), sys.dim_x()), *tail.tail_bound, plan.halfwidth};
  for (long k = plan.k_min(); k <= plan.k_max(); ++k) {
    if (sys.f.gamma(k) == 0.0) continue;
    out.value -= plan.green_at(k) * (sys.f.jac_x(k, tr.x_at(k), tr.y_at(k)) * jac.dx_dxi[jac.at(k)]);
  }
  return out;
}

/// -sum_k G(n,k+1) [f_u d_x2/deta + f_v d_y/deta]; tail from the AC9 envelope.
inline SeriesValue<Matrix> d_barh_deta_detailed(const ConjugacyEngine& engine, long n, const Vector& xi,
                                                const Vector& eta) {
  const SystemSpec& sys = engine.system();
  const SeriesPlan& plan = engine.plan(n);
  SeriesValue<Matrix> out{Matrix::Zero(sys.dim_x(), sys.dim_y()), 0.0, plan.halfwidth};
  if (sys.dim_y() == 0) return out;
  const SeriesEstimate& tail = engine.derivative_tail_y(n);
  detail::require_tail(tail, n, "derivative series in eta");
  out.tail_bound = *tail.tail_bound;
  const Trajectory tr = plan_trajectory(engine, plan, xi, eta);
  const auto jac = trajectory_jacobians(sys, tr, true);
  for (long k = plan.k_min(); k <= plan.k_max(); ++k) {
    if (sys.f.gamma(k) == 0.0 && sys.f.rho(k) == 0.0) continue;
    const Vector& x = tr.x_at(k);
    const Vector& y = tr.y_at(k);
    const std::size_t i = jac.at(k);
    out.value -= plan.green_at(k) * (sys.f.jac_x(k, x, y) * jac.dx_deta[i] + sys.f.jac_y(k, x, y) * jac.dy_deta[i]);
  }
  return out;
}

inline Matrix d_barh_dxi(const ConjugacyEngine& engine, long n, const Vector& xi, const Vector& eta) {
  return d_barh_dxi_detailed(engine, n, xi, eta).value;
}

inline Matrix d_barh_deta(const ConjugacyEngine& engine, long n, const Vector& xi, const Vector& eta) {
  return d_barh_deta_detailed(engine, n, xi, eta).value;
}

/// Derivative of h_n together with the ingredients of the resolvent formula.
struct ResolventDerivative {
  Matrix value;      // R or R~
  Matrix barh_du;    // d bar_h / du at (xi + h_n, eta)
  Vector shifted;    // xi + h_n(xi, eta)
};

namespace detail {

inline Vector shifted_point(const ConjugacyEngine& engine, long n, const Vector& xi, const Vector& eta) {
  return xi + h(engine, n, xi, eta);
}

}  // namespace detail

/// R = -(Id + B)^{-1} B with B = d bar_h/du at the shifted point.
inline ResolventDerivative d_h_dxi_detailed(const ConjugacyEngine& engine, long n, const Vector& xi,
                                            const Vector& eta) {
  ResolventDerivative out;
  out.shifted = detail::shifted_point(engine, n, xi, eta);
  out.barh_du = d_barh_dxi(engine, n, out.shifted, eta);
  const Matrix id = Matrix::Identity(out.barh_du.rows(), out.barh_du.cols());
  out.value = -detail::checked_lu(id + out.barh_du, n, "Id + d bar_h/du").solve(out.barh_du);
  return out;
}

/// R~ = -(Id + B)^{-1} d bar_h/dv at the shifted point.
inline ResolventDerivative d_h_deta_detailed(const ConjugacyEngine& engine, long n, const Vector& xi,
                                             const Vector& eta) {
  ResolventDerivative out;
  out.shifted = detail::shifted_point(engine, n, xi, eta);
  out.barh_du = d_barh_dxi(engine, n, out.shifted, eta);
  const Matrix id = Matrix::Identity(out.barh_du.rows(), out.barh_du.cols());
  const Matrix dv = d_barh_deta(engine, n, out.shifted, eta);
  out.value = -detail::checked_lu(id + out.barh_du, n, "Id + d bar_h/du").solve(dv);
  return out;
}

inline Matrix d_h_dxi(const ConjugacyEngine& engine, long n, const Vector& xi, const Vector& eta) {
  return d_h_dxi_detailed(engine, n, xi, eta).value;
}

inline Matrix d_h_deta(const ConjugacyEngine& engine, long n, const Vector& xi, const Vector& eta) {
  return d_h_deta_detailed(engine, n, xi, eta).value;
}

// ---------------------------------------------------------------------------
// finite differences

/// Central differences (fun(p + s e_i) - fun(p - s e_i)) / 2s, column by column.
template <typename Fun>
Matrix fd_jacobian(Fun&& fun, const Vector& point, double step) {
  if (!(step > 0.0)) throw ConfigError("finite-difference step must be positive");
  const Vector f0 = fun(point);
  Matrix out(f0.size(), point.size());
  Vector p = point;
  for (Eigen::Index i = 0; i < point.size(); ++i) {
    p(i) = point(i) + step;
    const Vector plus = fun(p);
    p(i) = point(i) - step;
    const Vector minus = fun(p);
    p(i) = point(i);
    out.col(i) = (plus - minus) / (2.0 * step);
  }
  return out;
}

struct JacobianReport {
  std::string label;
  Matrix analytic;
  Matrix finite_difference;
  double rel_error = 0.0;
  double fd_step = 0.0;
  bool richardson = false;  // finite_difference is the extrapolated estimate
};

inline double relative_error(const Matrix& analytic, const Matrix& fd) {
  if (analytic.size() == 0) return 0.0;
  return (analytic - fd).norm() / std::max(1.0, analytic.norm());
}

/// Compares against central differences at step; when that misses threshold,
/// also tries the Richardson combination of steps 10*step and step and keeps
/// whichever agrees better.
template <typename Fun>
JacobianReport check_jacobian(std::string label, const Matrix& analytic, Fun&& fun, const Vector& point,
                              double step = 1e-6, double threshold = 1e-5) {
  JacobianReport out;
  out.label = std::move(label);
  out.analytic = analytic;
  out.fd_step = step;
  out.finite_difference = fd_jacobian(fun, point, step);
  out.rel_error = relative_error(analytic, out.finite_difference);
  if (out.rel_error > threshold) {
    const Matrix coarse = fd_jacobian(fun, point, 10.0 * step);
    const Matrix extrapolated = (100.0 * out.finite_difference - coarse) / 99.0;
    const double err = relative_error(analytic, extrapolated);
    if (err < out.rel_error) {
      out.finite_difference = extrapolated;
      out.rel_error = err;
      out.richardson = true;
    }
  }
  return out;
}

}  // namespace smoothlin
