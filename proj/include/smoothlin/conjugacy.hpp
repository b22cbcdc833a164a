#pragma once

// The conjugacies between the coupled system and its partially linearized form.
//
//   bar_h_n(xi, eta) = -sum_k G(n, k+1) f_k(x_2(k, n, xi, eta), y(k, n, eta))
//   bar_H_n(xi, eta) = (xi + bar_h_n(xi, eta), eta)
//   h_n = -bar_h_n(xi + h_n, eta)  (fixed point)
//   H_n(xi, eta) = (xi + h_n(xi, eta), eta)
//
// bar_H maps coupled solutions to linear ones and H maps linear solutions to
// coupled ones; they are inverse to each other.

#include "smoothlin/evolution.hpp"
#include "smoothlin/hypotheses.hpp"
#include "smoothlin/system.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <utility>
#include <vector>

namespace smoothlin {

struct EngineOptions {
  long window_halfwidth = 40;   // initial truncation half-width of the series
  long max_halfwidth = 160;     // cap for automatic enlargement
  long certify_halfwidth = 40;  // half-width of the K_n / J_n / AC9 evaluations
  double series_tol = 1e-9;     // target truncation error of bar_h
  double fp_tol = 1e-10;        // fixed-point residual for h
  int fp_max_iters = 500;
  SolveOptions solve{};
  SeriesOptions series{};

  void validate() const {
    if (window_halfwidth < 1) throw ConfigError("window half-width must be positive");
    if (max_halfwidth < window_halfwidth) throw ConfigError("max half-width below the initial window");
    if (certify_halfwidth < 1) throw ConfigError("certify half-width must be positive");
    if (!(series_tol > 0.0)) throw ConfigError("series_tol must be positive");
    if (!(fp_tol > 0.0)) throw ConfigError("fp_tol must be positive");
    if (fp_max_iters < 1) throw ConfigError("fp_max_iters must be positive");
    solve.validate();
  }
};

/// Truncation window of the series at time n and the Green kernels it needs.
struct SeriesPlan {
  long n = 0;
  long halfwidth = 0;
  double tail_bound = 0.0;  // sum over |k - n| > halfwidth of |G(n,k+1)| mu_k
  std::vector<Matrix> greens;  // G(n, k+1) for k = n - halfwidth .. n + halfwidth

  long k_min() const { return n - halfwidth; }
  long k_max() const { return n + halfwidth; }
  const Matrix& green_at(long k) const { return greens[static_cast<std::size_t>(k - k_min())]; }
};

/// A truncated series value with its truncation bound.
template <typename T>
struct SeriesValue {
  T value;
  double tail_bound = 0.0;
  long halfwidth = 0;
};

class ConjugacyEngine {
 public:
  ConjugacyEngine(SystemSpec sys, EngineOptions opts = {})
      : sys_(std::move(sys)), opts_(opts), state_(std::make_shared<State>()) {
    opts_.validate();
  }

  const SystemSpec& system() const { return sys_; }
  const EngineOptions& options() const { return opts_; }

  /// Smallest half-width >= window_halfwidth whose mu-tail is within series_tol.
  const SeriesPlan& plan(long n) const {
    {
      std::lock_guard lock(state_->mu);
      if (auto it = state_->plans.find(n); it != state_->plans.end()) return *it->second;
    }
    auto made = std::make_unique<SeriesPlan>(make_plan(n));
    std::lock_guard lock(state_->mu);
    return *state_->plans.try_emplace(n, std::move(made)).first->second;
  }

  /// K_n, J_n and |G(n,n+1)| gamma_n at the certify half-width.
  const AdvancedFirst& contraction(long n) const {
    {
      std::lock_guard lock(state_->mu);
      if (auto it = state_->contraction.find(n); it != state_->contraction.end()) return *it->second;
    }
    auto made = std::make_unique<AdvancedFirst>(check_advanced_first(sys_, n, opts_.certify_halfwidth, opts_.series));
    std::lock_guard lock(state_->mu);
    return *state_->contraction.try_emplace(n, std::move(made)).first->second;
  }

  /// Upper bound on the first-variable Lipschitz constant of bar_h_n (+inf if uncertified).
  double contraction_estimate(long n) const { return contraction(n).contraction_upper(); }

  /// Summability of sum_k |G(n,k+1)| gamma_k C_{k,n} outside the plan window.
  const SeriesEstimate& derivative_tail_x(long n) const {
    {
      std::lock_guard lock(state_->mu);
      if (auto it = state_->tail_x.find(n); it != state_->tail_x.end()) return *it->second;
    }
    auto made = std::make_unique<SeriesEstimate>(derivative_tail(n, false));
    std::lock_guard lock(state_->mu);
    return *state_->tail_x.try_emplace(n, std::move(made)).first->second;
  }

  /// Same for the AC9 envelope gamma_k M_{k,n} + rho_k D_{k,n}.
  const SeriesEstimate& derivative_tail_y(long n) const {
    {
      std::lock_guard lock(state_->mu);
      if (auto it = state_->tail_y.find(n); it != state_->tail_y.end()) return *it->second;
    }
    auto made = std::make_unique<SeriesEstimate>(derivative_tail(n, true));
    std::lock_guard lock(state_->mu);
    return *state_->tail_y.try_emplace(n, std::move(made)).first->second;
  }

  SolveOptions trajectory_options() const { return opts_.solve; }

 private:
  struct State {
    std::mutex mu;
    std::map<long, std::unique_ptr<SeriesPlan>> plans;
    std::map<long, std::unique_ptr<AdvancedFirst>> contraction;
    std::map<long, std::unique_ptr<SeriesEstimate>> tail_x, tail_y;
  };

  SeriesPlan make_plan(long n) const {
    SeriesPlan out;
    out.n = n;
    const auto envelopes = SeriesEnvelopes::get(sys_.envelopes.hbar_terms, n);
    if (!envelopes.empty()) {
      auto tail = [&](long k) {
        double best = std::numeric_limits<double>::infinity();
        for (const auto& env : envelopes) best = std::min(best, env.tail_above(n + k) + env.tail_below(n - k));
        return best;
      };
      long k = opts_.window_halfwidth;
      while (k < opts_.max_halfwidth && !(tail(k) <= opts_.series_tol)) ++k;
      if (!(tail(k) <= opts_.series_tol))
        throw WindowExhausted("series tail at n=" + std::to_string(n) + " stays above " +
                              std::to_string(opts_.series_tol) + " up to half-width " + std::to_string(k));
      out.halfwidth = k;
      out.tail_bound = tail(k);
    } else {
      // No closed form: evaluate |G(n,k+1)| mu_k up to the cap and extrapolate beyond it.
      const long cap = opts_.max_halfwidth;
      const auto row = green_row(sys_, n, n - cap + 1, n + cap + 1);
      std::vector<double> terms(static_cast<std::size_t>(2 * cap + 1));
      for (long k = n - cap; k <= n + cap; ++k)
        terms[static_cast<std::size_t>(k - (n - cap))] =
            sys_.x_op_norm(row[static_cast<std::size_t>(k - (n - cap))]) * sys_.f.mu(k);
      const auto est = summarize_series(n - cap, terms, n, {}, {}, opts_.series);
      if (!est.converged())
        throw WindowExhausted("series at n=" + std::to_string(n) + " has no tail bound (" +
                              std::string(to_string(est.verdict)) + ")");
      // tail(K) = sum_{K < |k - n| <= cap} terms + tail beyond the cap
      std::vector<double> tails(static_cast<std::size_t>(cap + 1));
      double acc = *est.tail_bound;
      for (long k = cap; k >= 0; --k) {
        tails[static_cast<std::size_t>(k)] = acc;
        if (k > 0)
          acc += terms[static_cast<std::size_t>(cap + k)] + terms[static_cast<std::size_t>(cap - k)];
      }
      long k = opts_.window_halfwidth;
      while (k < cap && !(tails[static_cast<std::size_t>(k)] <= opts_.series_tol)) ++k;
      if (!(tails[static_cast<std::size_t>(k)] <= opts_.series_tol))
        throw WindowExhausted("series tail at n=" + std::to_string(n) + " stays above " +
                              std::to_string(opts_.series_tol) + " up to half-width " + std::to_string(cap));
      out.halfwidth = k;
      out.tail_bound = tails[static_cast<std::size_t>(k)];
    }
    out.greens = green_row(sys_, n, out.k_min() + 1, out.k_max() + 1);
    return out;
  }

  SeriesEstimate derivative_tail(long n, bool second) const {
    const SeriesPlan& p = plan(n);
    const long w = p.halfwidth;
    std::vector<double> terms(static_cast<std::size_t>(2 * w + 1));
    auto g_norm = [&](long k) { return sys_.x_op_norm(p.green_at(k)); };
    auto put = [&](long k, double c, double d) {
      const double v = second ? sys_.f.gamma(k) * c + sys_.f.rho(k) * d : sys_.f.gamma(k) * c;
      terms[static_cast<std::size_t>(k - p.k_min())] = g_norm(k) * v;
    };
    put(n, 1.0, 1.0);
    double c = 1.0, d = 1.0;
    for (long k = n - 1; k >= p.k_min(); --k) {
      c *= second ? backward_m_factor(sys_, k) : backward_c_factor(sys_, k);
      d *= sys_.g.sigma(k);
      put(k, c, d);
    }
    c = d = 1.0;
    for (long k = n + 1; k <= p.k_max(); ++k) {
      c *= second ? forward_m_factor(sys_, k - 1) : forward_c_factor(sys_, k - 1);
      d *= sys_.g.tau(k - 1);
      put(k, c, d);
    }
    if (second) {
      return summarize_series(p.k_min(), terms, n, {}, SeriesEnvelopes::get(sys_.envelopes.ac9_terms, n),
                              opts_.series);
    }
    return summarize_series(p.k_min(), terms, n, {}, SeriesEnvelopes::get(sys_.envelopes.k_terms, n),
                            SeriesEnvelopes::get(sys_.envelopes.j_terms, n), opts_.series);
  }

  SystemSpec sys_;
  EngineOptions opts_;
  std::shared_ptr<State> state_;
};

// ---------------------------------------------------------------------------
// bar_h / bar_H

/// Coupled trajectory through (xi, eta) at time n across the plan window.
inline Trajectory plan_trajectory(const ConjugacyEngine& engine, const SeriesPlan& plan, const Vector& xi,
                                  const Vector& eta) {
  return coupled_trajectory(engine.system(), plan.n, plan.k_min(), plan.k_max(), xi, eta,
                            engine.trajectory_options());
}

inline SeriesValue<Vector> bar_h_detailed(const ConjugacyEngine& engine, long n, const Vector& xi,
                                          const Vector& eta) {
  const SystemSpec& sys = engine.system();
  const SeriesPlan& plan = engine.plan(n);
  SeriesValue<Vector> out{sys.zero_x(), plan.tail_bound, plan.halfwidth};
  const Trajectory tr = plan_trajectory(engine, plan, xi, eta);
  for (long k = plan.k_min(); k <= plan.k_max(); ++k) {
    if (sys.f.mu(k) == 0.0) continue;
    out.value -= plan.green_at(k) * sys.f.eval(k, tr.x_at(k), tr.y_at(k));
  }
  return out;
}

inline Vector bar_h(const ConjugacyEngine& engine, long n, const Vector& xi, const Vector& eta) {
  return bar_h_detailed(engine, n, xi, eta).value;
}

inline std::pair<Vector, Vector> bar_H(const ConjugacyEngine& engine, long n, const Vector& xi, const Vector& eta) {
  return {xi + bar_h(engine, n, xi, eta), eta};
}

// ---------------------------------------------------------------------------
// h / H

struct FixedPointResult {
  Vector value;
  int iterations = 0;
  double residual = 0.0;          // |u + bar_h(xi + u, eta)| of the returned u, bounded via the last increment
  double rate = 0.0;              // contraction estimate used for the guarantee
  std::vector<double> increments; // |u_{i+1} - u_i| per iteration
};

inline FixedPointResult h_detailed(const ConjugacyEngine& engine, long n, const Vector& xi, const Vector& eta) {
  const SystemSpec& sys = engine.system();
  const AdvancedFirst& first = engine.contraction(n);
  const double rate = first.contraction_upper();
  if (!first.ac3)
    throw ContractionViolation(n, rate, "K_n + J_n + |G(n,n+1)| gamma_n < 1 is not certified");
  constexpr double eps = std::numeric_limits<double>::epsilon();
  const double fp_tol = engine.options().fp_tol;

  FixedPointResult out;
  out.rate = rate;
  Vector u = sys.zero_x();
  double best = std::numeric_limits<double>::infinity();
  int stalled = 0;
  for (int it = 1; it <= engine.options().fp_max_iters; ++it) {
    Vector next = -bar_h(engine, n, xi + u, eta);
    const double step = sys.x_norm(next - u);
    out.increments.push_back(step);
    u = std::move(next);
    out.iterations = it;
    const double floor = 256.0 * eps * (1.0 + sys.x_norm(xi) + sys.x_norm(u));
    if (step <= fp_tol || step <= floor) {
      out.value = std::move(u);
      out.residual = rate * step;
      return out;
    }
    if (step < best) {
      best = step;
      stalled = 0;
    } else if (++stalled >= 5) {
      break;
    }
  }
  throw NoConvergence("fixed point for h at n=" + std::to_string(n) + " stalled with increment " +
                      std::to_string(out.increments.empty() ? 0.0 : out.increments.back()) + " above fp_tol " +
                      std::to_string(fp_tol));
}

inline Vector h(const ConjugacyEngine& engine, long n, const Vector& xi, const Vector& eta) {
  return h_detailed(engine, n, xi, eta).value;
}

inline std::pair<Vector, Vector> H(const ConjugacyEngine& engine, long n, const Vector& xi, const Vector& eta) {
  return {xi + h(engine, n, xi, eta), eta};
}

// ---------------------------------------------------------------------------
// residuals

struct EquivarianceResidual {
  double linear_to_coupled = 0.0;  // H along linear trajectories
  double coupled_to_linear = 0.0;  // bar_H along coupled trajectories
  double max() const { return std::max(linear_to_coupled, coupled_to_linear); }
};

/// Defect of the intertwining relations over steps time steps from (xi, eta) at n.
inline EquivarianceResidual equivariance_residuals(const ConjugacyEngine& engine, long n, const Vector& xi,
                                                   const Vector& eta, int steps) {
  if (steps < 1) throw ConfigError("steps must be positive");
  const SystemSpec& sys = engine.system();
  EquivarianceResidual out;
  const bool has_y = sys.dim_y() > 0;

  // H maps the linear solution through (xi, eta) to a coupled solution.
  Vector x = xi, y = eta;
  Vector hx = x + h(engine, n, x, y);
  for (long j = n; j < n + steps; ++j) {
    const Vector x_next = sys.A(j) * x;
    const Vector y_next = has_y ? sys.g.eval(j, y) : y;
    const Vector stepped = coupled_step(sys, j, hx, y);
    const Vector h_next = x_next + h(engine, j + 1, x_next, y_next);
    out.linear_to_coupled = std::max(out.linear_to_coupled, sys.x_norm(stepped - h_next));
    x = x_next;
    y = y_next;
    hx = h_next;
  }

  // bar_H maps the coupled solution through (xi, eta) to a linear solution.
  x = xi;
  y = eta;
  Vector bx = x + bar_h(engine, n, x, y);
  for (long j = n; j < n + steps; ++j) {
    const Vector x_next = coupled_step(sys, j, x, y);
    const Vector y_next = has_y ? sys.g.eval(j, y) : y;
    const Vector stepped = sys.A(j) * bx;
    const Vector b_next = x_next + bar_h(engine, j + 1, x_next, y_next);
    out.coupled_to_linear = std::max(out.coupled_to_linear, sys.x_norm(stepped - b_next));
    x = x_next;
    y = y_next;
    bx = b_next;
  }
  return out;
}

inline double equivariance_residual(const ConjugacyEngine& engine, long n, const Vector& xi, const Vector& eta,
                                    int steps) {
  return equivariance_residuals(engine, n, xi, eta, steps).max();
}

struct InverseResidual {
  double bar_after_h = 0.0;  // |bar_H(H(p)) - p|
  double h_after_bar = 0.0;  // |H(bar_H(p)) - p|
  double max() const { return std::max(bar_after_h, h_after_bar); }
};

inline InverseResidual inverse_residuals(const ConjugacyEngine& engine, long n, const Vector& xi, const Vector& eta) {
  const SystemSpec& sys = engine.system();
  auto dist = [&](const std::pair<Vector, Vector>& p) {
    return std::max(sys.x_norm(p.first - xi), sys.y_norm(p.second - eta));
  };
  InverseResidual out;
  const auto fwd = H(engine, n, xi, eta);
  out.bar_after_h = dist(bar_H(engine, n, fwd.first, fwd.second));
  const auto back = bar_H(engine, n, xi, eta);
  out.h_after_bar = dist(H(engine, n, back.first, back.second));
  return out;
}

}  // namespace smoothlin
