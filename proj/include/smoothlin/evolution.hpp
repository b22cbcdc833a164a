#pragma once

// Solution maps of the coupled, linear and driver recursions, forward and
// backward in time, and the Lipschitz envelopes C_{k,n}, D_{k,n}, M_{k,n}.

#include "smoothlin/system.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace smoothlin {

struct SolveOptions {
  double fixed_point_tol = 1e-12;
  int max_iters = 200;

  void validate() const {
    if (!(fixed_point_tol > 0.0)) throw ConfigError("fixed_point_tol must be positive");
    if (max_iters < 1) throw ConfigError("max_iters must be at least 1");
  }
};

/// y(k, n, eta): g_j forward for j = n..k-1, g_j^{-1} backward for j = n-1..k.
inline Vector evolve_driver(const SystemSpec& sys, long k, long n, const Vector& eta) {
  Vector y = eta;
  if (sys.dim_y() == 0) return y;
  for (long j = n; j < k; ++j) y = sys.g.eval(j, y);
  for (long j = n - 1; j >= k; --j) y = sys.g.eval_inv(j, y);
  return y;
}

/// x_1(k, n, xi) = transition(k, n) xi, stepped one operator at a time.
inline Vector evolve_linear(const SystemSpec& sys, long k, long n, const Vector& xi) {
  Vector x = xi;
  for (long j = n; j < k; ++j) x = sys.A(j) * x;
  for (long j = n - 1; j >= k; --j) x = sys.A_inv(j) * x;
  return x;
}

/// One forward step of the coupled recursion in x: A_j x + f_j(x, y).
inline Vector coupled_step(const SystemSpec& sys, long j, const Vector& x, const Vector& y) {
  return sys.A(j) * x + sys.f.eval(j, x, y);
}

struct BackwardStepResult {
  Vector value;
  int iterations = 0;
  double rate_bound = 0.0;     // |A_j^{-1}| gamma_j
  double observed_rate = 0.0;  // largest ratio of successive Picard increments
  double last_increment = 0.0;
};

/// T_j(xi, eta): the unique x with A_j x + f_j(x, eta) = xi, by Picard iteration
/// x <- A_j^{-1}(xi - f_j(x, eta)) started at A_j^{-1} xi.
inline BackwardStepResult backward_step_detailed(const SystemSpec& sys, long j, const Vector& xi,
                                                 const Vector& eta, const SolveOptions& opts = {}) {
  const double rate = sys.backward_rate(j);
  if (!(rate < 1.0)) throw ContractionViolation(j, rate, "|A_j^{-1}| gamma_j must be < 1");
  const Matrix& inv = sys.A_inv(j);
  constexpr double eps = std::numeric_limits<double>::epsilon();

  BackwardStepResult out;
  out.rate_bound = rate;
  const Vector base = inv * xi;
  Vector x = base;
  double prev = -1.0;
  for (int it = 1; it <= opts.max_iters; ++it) {
    Vector next = base - inv * sys.f.eval(j, x, eta);
    const double step = sys.x_norm(next - x);
    const double scale = 1.0 + sys.x_norm(next);
    if (prev > 1e4 * eps * scale && step > 1e4 * eps * scale)
      out.observed_rate = std::max(out.observed_rate, step / prev);
    x = std::move(next);
    out.iterations = it;
    out.last_increment = step;
    if (step <= opts.fixed_point_tol || step <= 64.0 * eps * scale) {
      out.value = std::move(x);
      return out;
    }
    prev = step;
  }
  throw NoConvergence("backward step at index " + std::to_string(j) + " did not reach tolerance " +
                      std::to_string(opts.fixed_point_tol) + " in " + std::to_string(opts.max_iters) +
                      " iterations");
}

inline Vector backward_step(const SystemSpec& sys, long j, const Vector& xi, const Vector& eta,
                            const SolveOptions& opts = {}) {
  return backward_step_detailed(sys, j, xi, eta, opts).value;
}

/// Coupled solution through (xi, eta) at time n, sampled on [lo, hi] (lo <= n <= hi).
struct Trajectory {
  long lo = 0;
  long n = 0;
  long hi = 0;
  std::vector<Vector> x;
  std::vector<Vector> y;

  const Vector& x_at(long k) const { return x[static_cast<std::size_t>(k - lo)]; }
  const Vector& y_at(long k) const { return y[static_cast<std::size_t>(k - lo)]; }
};

inline Trajectory coupled_trajectory(const SystemSpec& sys, long n, long lo, long hi, const Vector& xi,
                                     const Vector& eta, const SolveOptions& opts = {}) {
  if (lo > n || hi < n) throw ConfigError("trajectory range must contain the initial time");
  Trajectory tr{lo, n, hi, std::vector<Vector>(hi - lo + 1), std::vector<Vector>(hi - lo + 1)};
  tr.x[n - lo] = xi;
  tr.y[n - lo] = eta;
  const bool has_y = sys.dim_y() > 0;
  for (long k = n; k < hi; ++k) {
    const auto i = static_cast<std::size_t>(k - lo);
    tr.x[i + 1] = coupled_step(sys, k, tr.x[i], tr.y[i]);
    tr.y[i + 1] = has_y ? sys.g.eval(k, tr.y[i]) : tr.y[i];
  }
  if (lo < n) {
    SolveOptions step_opts = opts;
    step_opts.fixed_point_tol = opts.fixed_point_tol / static_cast<double>(n - lo);
    for (long k = n - 1; k >= lo; --k) {
      const auto i = static_cast<std::size_t>(k - lo);
      tr.y[i] = has_y ? sys.g.eval_inv(k, tr.y[i + 1]) : tr.y[i + 1];
      tr.x[i] = backward_step(sys, k, tr.x[i + 1], tr.y[i], step_opts);
    }
  }
  return tr;
}

/// x_2(k, n, xi, eta).
inline Vector evolve_coupled(const SystemSpec& sys, long k, long n, const Vector& xi, const Vector& eta,
                             const SolveOptions& opts = {}) {
  if (k == n) return xi;
  const Trajectory tr = coupled_trajectory(sys, n, std::min(k, n), std::max(k, n), xi, eta, opts);
  return tr.x_at(k);
}

// ---------------------------------------------------------------------------
// Lipschitz envelopes

/// |A_j| + gamma_j: forward per-step factor of C.
inline double forward_c_factor(const SystemSpec& sys, long j) { return sys.norm_A(j) + sys.f.gamma(j); }

/// |A_j^{-1}| / (1 - gamma_j |A_j^{-1}|): backward per-step factor of C.
inline double backward_c_factor(const SystemSpec& sys, long j) {
  const double inv = sys.norm_A_inv(j);
  const double denom = 1.0 - sys.f.gamma(j) * inv;
  if (!(denom > 0.0)) throw ContractionViolation(j, 1.0 - denom, "1 - gamma_j |A_j^{-1}| must be > 0");
  return inv / denom;
}

inline double forward_m_factor(const SystemSpec& sys, long j) {
  return forward_c_factor(sys, j) + std::max(sys.f.rho(j), sys.g.tau(j));
}

inline double backward_m_factor(const SystemSpec& sys, long j) {
  return backward_c_factor(sys, j) + sys.g.sigma(j);
}

namespace detail {

template <typename Fwd, typename Bwd>
double envelope_product(long k, long n, Fwd&& fwd, Bwd&& bwd) {
  double out = 1.0;
  for (long j = n; j < k; ++j) out *= fwd(j);
  for (long j = k; j < n; ++j) out *= bwd(j);
  return out;
}

}  // namespace detail

inline double lip_C(const SystemSpec& sys, long k, long n) {
  return detail::envelope_product(
      k, n, [&](long j) { return forward_c_factor(sys, j); }, [&](long j) { return backward_c_factor(sys, j); });
}

inline double lip_D(const SystemSpec& sys, long k, long n) {
  return detail::envelope_product(
      k, n, [&](long j) { return sys.g.tau(j); }, [&](long j) { return sys.g.sigma(j); });
}

inline double lip_M(const SystemSpec& sys, long k, long n) {
  return detail::envelope_product(
      k, n, [&](long j) { return forward_m_factor(sys, j); }, [&](long j) { return backward_m_factor(sys, j); });
}

}  // namespace smoothlin
