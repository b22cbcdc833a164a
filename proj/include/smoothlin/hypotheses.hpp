#pragma once

// Numerical certification of the basic (boundedness, summability, backward
// contraction) and advanced (derivative summability) conditions over an
// explicit window of time indices.

#include "smoothlin/evolution.hpp"
#include "smoothlin/series.hpp"
#include "smoothlin/system.hpp"

#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

namespace smoothlin {

struct CheckWindow {
  long n_min = -10;
  long n_max = 10;
  long halfwidth = 40;  // inner sums run over [m - halfwidth, m + halfwidth]
};

struct ProbeSpec {
  int count = 200;
  double extent = 2.0;
  std::uint64_t seed = 0;
};

/// Outcome of spot-checking the pointwise conditions at random probes.
struct SampledConditions {
  bool bc1_ok = true;      // |f| <= mu, x-Lipschitz with gamma, |df/dx| <= gamma
  bool ac4_ok = true;      // y-Lipschitz with rho, |df/dy| <= rho
  bool ac5_ok = true;      // g and g^{-1} Lipschitz with tau and sigma, g^{-1}(g(y)) = y
  long probes = 0;
  long violations = 0;
  std::string first_violation;
};

struct IndexedCheck {
  bool ok = true;
  long worst_index = 0;
  double worst_value = 0.0;
};

/// K_n, J_n and the diagonal term |G(n,n+1)| gamma_n.
struct AdvancedFirst {
  SeriesEstimate k_series;
  SeriesEstimate j_series;
  double diagonal = 0.0;
  bool ac3 = false;

  /// Upper bound on K_n + J_n + |G(n,n+1)| gamma_n (+inf without tail bounds).
  double contraction_upper() const { return k_series.upper() + j_series.upper() + diagonal; }
};

struct HypothesisReport {
  CheckWindow window;
  SampledConditions sampled;
  SeriesEstimate bc2;  // N
  SeriesEstimate bc3;  // q
  IndexedCheck bc4;
  std::map<long, AdvancedFirst> ac2;
  std::map<long, bool> ac3;
  IndexedCheck ac6;
  std::map<long, SeriesEstimate> ac9;
  double weight_norm_sup = 0.0;  // sup |P_n| over the inspected indices

  bool basic_ok() const {
    return sampled.bc1_ok && bc2.converged() && bc3.converged() && bc3.upper() < 1.0 && bc4.ok;
  }
  bool all_ac3() const {
    for (const auto& [n, ok] : ac3)
      if (!ok) return false;
    return true;
  }
  bool all_ac9() const {
    for (const auto& [n, est] : ac9)
      if (!est.converged()) return false;
    return true;
  }
  bool pass() const {
    return basic_ok() && sampled.ac4_ok && sampled.ac5_ok && all_ac3() && ac6.ok && all_ac9();
  }
};

namespace detail {

inline bool within(double lhs, double rhs) { return lhs <= rhs * (1.0 + 1e-12) + 1e-14; }

inline Vector random_vector(std::mt19937_64& rng, int dim, double extent) {
  std::uniform_real_distribution<double> dist(-extent, extent);
  Vector v(dim);
  for (int i = 0; i < dim; ++i) v(i) = dist(rng);
  return v;
}

}  // namespace detail

/// Spot-check BC1, AC4 and AC5 at random probe pairs with n drawn from the window.
inline SampledConditions sample_conditions(const SystemSpec& sys, const CheckWindow& window,
                                           const ProbeSpec& probes) {
  SampledConditions out;
  std::mt19937_64 rng(probes.seed);
  std::uniform_int_distribution<long> pick_n(window.n_min, window.n_max);
  auto fail = [&](bool& flag, const std::string& what) {
    flag = false;
    ++out.violations;
    if (out.first_violation.empty()) out.first_violation = what;
  };
  for (int i = 0; i < probes.count; ++i) {
    const long n = pick_n(rng);
    const Vector x1 = detail::random_vector(rng, sys.dim_x(), probes.extent);
    const Vector x2 = detail::random_vector(rng, sys.dim_x(), probes.extent);
    const Vector y1 = detail::random_vector(rng, sys.dim_y(), probes.extent);
    const Vector y2 = detail::random_vector(rng, sys.dim_y(), probes.extent);
    const std::string at = " at n=" + std::to_string(n);
    const Vector f11 = sys.f.eval(n, x1, y1);
    const double mu = sys.f.mu(n), gamma = sys.f.gamma(n), rho = sys.f.rho(n);
    if (!detail::within(sys.x_norm(f11), mu)) fail(out.bc1_ok, "|f_n| > mu_n" + at);
    if (!detail::within(sys.x_norm(f11 - sys.f.eval(n, x2, y1)), gamma * sys.x_norm(x1 - x2)))
      fail(out.bc1_ok, "f_n not gamma_n-Lipschitz in x" + at);
    if (!detail::within(sys.x_op_norm(sys.f.jac_x(n, x1, y1)), gamma))
      fail(out.bc1_ok, "|df_n/dx| > gamma_n" + at);
    if (sys.dim_y() == 0) continue;
    if (!detail::within(sys.x_norm(f11 - sys.f.eval(n, x1, y2)), rho * sys.y_norm(y1 - y2)))
      fail(out.ac4_ok, "f_n not rho_n-Lipschitz in y" + at);
    if (!detail::within(sys.xy_op_norm(sys.f.jac_y(n, x1, y1)), rho))
      fail(out.ac4_ok, "|df_n/dy| > rho_n" + at);
    const double dy = sys.y_norm(y1 - y2);
    if (!detail::within(sys.y_norm(sys.g.eval(n, y1) - sys.g.eval(n, y2)), sys.g.tau(n) * dy))
      fail(out.ac5_ok, "g_n not tau_n-Lipschitz" + at);
    if (!detail::within(sys.y_norm(sys.g.eval_inv(n, y1) - sys.g.eval_inv(n, y2)), sys.g.sigma(n) * dy))
      fail(out.ac5_ok, "g_n^{-1} not sigma_n-Lipschitz" + at);
    if (!(sys.y_norm(sys.g.eval_inv(n, sys.g.eval(n, y1)) - y1) <= 1e-12 * (1.0 + sys.y_norm(y1))))
      fail(out.ac5_ok, "g_n^{-1}(g_n(y)) != y" + at);
  }
  out.probes = probes.count;
  return out;
}

/// BC2 (N) and BC3 (q): sup over m in the window of sum_k |G(m,k)| c_{k-1}.
struct BasicSums {
  SeriesEstimate n_estimate;
  SeriesEstimate q_estimate;
};

namespace detail {

inline void take_sup(SeriesEstimate& acc, const SeriesEstimate& est, bool first) {
  auto rank = [](Verdict v) { return v == Verdict::converged ? 0 : v == Verdict::inconclusive ? 1 : 2; };
  if (first) {
    acc = est;
    return;
  }
  const int worst = std::max(rank(acc.verdict), rank(est.verdict));
  const bool replace = est.partial_sum > acc.partial_sum;
  std::optional<double> tail;
  if (acc.tail_bound && est.tail_bound) tail = std::max(*acc.tail_bound, *est.tail_bound);
  std::string witness = acc.witness.empty() ? est.witness : acc.witness;
  const long inspected = acc.terms_inspected + est.terms_inspected;
  if (replace) acc = est;
  acc.verdict = worst == 0 ? Verdict::converged : worst == 1 ? Verdict::inconclusive : Verdict::divergent;
  acc.tail_bound = acc.verdict == Verdict::converged ? tail : std::nullopt;
  acc.witness = witness;
  acc.terms_inspected = inspected;
}

}  // namespace detail

inline BasicSums basic_sums(const SystemSpec& sys, const CheckWindow& window, const SeriesOptions& opts = {}) {
  BasicSums out;
  const long w = window.halfwidth;
  for (long m = window.n_min; m <= window.n_max; ++m) {
    const long lo = m - w, hi = m + w;
    const auto row = green_row(sys, m, lo, hi);
    std::vector<double> mu_terms, gamma_terms;
    for (long k = lo; k <= hi; ++k) {
      const double g = sys.x_op_norm(row[static_cast<std::size_t>(k - lo)]);
      mu_terms.push_back(g * sys.f.mu(k - 1));
      gamma_terms.push_back(g * sys.f.gamma(k - 1));
    }
    const auto n_est = summarize_series(lo, mu_terms, m, {}, SeriesEnvelopes::get(sys.envelopes.basic_mu, m), opts);
    const auto q_est =
        summarize_series(lo, gamma_terms, m, {}, SeriesEnvelopes::get(sys.envelopes.basic_gamma, m), opts);
    detail::take_sup(out.n_estimate, n_est, m == window.n_min);
    detail::take_sup(out.q_estimate, q_est, m == window.n_min);
  }
  return out;
}

/// BC4 over every index the window's inner sums reach.
inline IndexedCheck check_bc4(const SystemSpec& sys, long lo, long hi) {
  IndexedCheck out;
  out.worst_value = -1.0;
  for (long j = lo; j <= hi; ++j) {
    const double rate = sys.backward_rate(j);
    if (rate > out.worst_value) {
      out.worst_value = rate;
      out.worst_index = j;
    }
  }
  out.ok = out.worst_value < 1.0;
  return out;
}

/// AC6: sigma_j rho_j <= 1 on [lo, hi].
inline IndexedCheck check_ac6(const SystemSpec& sys, long lo, long hi) {
  IndexedCheck out;
  for (long j = lo; j <= hi; ++j) {
    const double v = sys.g.sigma(j) * sys.f.rho(j);
    if (j == lo || v > out.worst_value) {
      out.worst_value = v;
      out.worst_index = j;
    }
  }
  out.ok = out.worst_value <= 1.0;
  return out;
}

/// Basic conditions: BC1 sampled, BC2/BC3 sums, BC4 over the reach of the window.
inline HypothesisReport check_basic(const SystemSpec& sys, const CheckWindow& window, const ProbeSpec& probes,
                                    const SeriesOptions& opts = {}) {
  HypothesisReport rep;
  rep.window = window;
  rep.sampled = sample_conditions(sys, window, probes);
  auto sums = basic_sums(sys, window, opts);
  rep.bc2 = std::move(sums.n_estimate);
  rep.bc3 = std::move(sums.q_estimate);
  rep.bc4 = check_bc4(sys, window.n_min - window.halfwidth - 1, window.n_max + window.halfwidth + 1);
  for (long j = window.n_min - window.halfwidth; j <= window.n_max + window.halfwidth; ++j)
    rep.weight_norm_sup = std::max(rep.weight_norm_sup, sys.x_op_norm(sys.P(j)));
  return rep;
}

/// K_n, J_n over [n - halfwidth, n + halfwidth] with C_{k,n} accumulated step by step.
inline AdvancedFirst check_advanced_first(const SystemSpec& sys, long n, long halfwidth,
                                          const SeriesOptions& opts = {}) {
  AdvancedFirst out;
  const auto row = green_row(sys, n, n - halfwidth + 1, n + halfwidth + 1);
  auto g_norm = [&](long k) { return sys.x_op_norm(row[static_cast<std::size_t>(k + 1 - (n - halfwidth + 1))]); };

  std::vector<double> k_terms(static_cast<std::size_t>(halfwidth));
  double c = 1.0;
  for (long k = n - 1; k >= n - halfwidth; --k) {
    c *= backward_c_factor(sys, k);
    k_terms[static_cast<std::size_t>(k - (n - halfwidth))] = g_norm(k) * sys.f.gamma(k) * c;
  }
  std::vector<double> j_terms(static_cast<std::size_t>(halfwidth));
  c = 1.0;
  for (long k = n + 1; k <= n + halfwidth; ++k) {
    c *= forward_c_factor(sys, k - 1);
    j_terms[static_cast<std::size_t>(k - (n + 1))] = g_norm(k) * sys.f.gamma(k) * c;
  }
  out.k_series = summarize_series(n - halfwidth, k_terms, n, {true, false},
                                  SeriesEnvelopes::get(sys.envelopes.k_terms, n), opts);
  out.j_series = summarize_series(n + 1, j_terms, n, {false, true},
                                  SeriesEnvelopes::get(sys.envelopes.j_terms, n), opts);
  out.diagonal = g_norm(n) * sys.f.gamma(n);
  out.ac3 = out.k_series.converged() && out.j_series.converged() && out.contraction_upper() < 1.0;
  return out;
}

/// The AC9 series sum_k |G(n,k+1)| (gamma_k M_{k,n} + rho_k D_{k,n}).
inline SeriesEstimate check_advanced_second(const SystemSpec& sys, long n, long halfwidth,
                                            const SeriesOptions& opts = {}) {
  const long lo = n - halfwidth, hi = n + halfwidth;
  const auto row = green_row(sys, n, lo + 1, hi + 1);
  std::vector<double> terms(static_cast<std::size_t>(hi - lo + 1));
  auto put = [&](long k, double m_kn, double d_kn) {
    const double g = sys.x_op_norm(row[static_cast<std::size_t>(k - lo)]);
    terms[static_cast<std::size_t>(k - lo)] = g * (sys.f.gamma(k) * m_kn + sys.f.rho(k) * d_kn);
  };
  put(n, 1.0, 1.0);
  double m = 1.0, d = 1.0;
  for (long k = n - 1; k >= lo; --k) {
    m *= backward_m_factor(sys, k);
    d *= sys.g.sigma(k);
    put(k, m, d);
  }
  m = 1.0;
  d = 1.0;
  for (long k = n + 1; k <= hi; ++k) {
    m *= forward_m_factor(sys, k - 1);
    d *= sys.g.tau(k - 1);
    put(k, m, d);
  }
  return summarize_series(lo, terms, n, {}, SeriesEnvelopes::get(sys.envelopes.ac9_terms, n), opts);
}

/// Every condition over the window: basic checks plus AC2/AC3/AC9 at each n and AC6.
inline HypothesisReport certify(const SystemSpec& sys, const CheckWindow& window, const ProbeSpec& probes,
                                const SeriesOptions& opts = {}) {
  HypothesisReport rep = check_basic(sys, window, probes, opts);
  rep.ac6 = check_ac6(sys, window.n_min - window.halfwidth, window.n_max + window.halfwidth);
  if (!rep.bc4.ok) {
    for (long n = window.n_min; n <= window.n_max; ++n) rep.ac3[n] = false;
    return rep;
  }
  for (long n = window.n_min; n <= window.n_max; ++n) {
    auto first = check_advanced_first(sys, n, window.halfwidth, opts);
    rep.ac3[n] = first.ac3;
    rep.ac2[n] = std::move(first);
    rep.ac9[n] = check_advanced_second(sys, n, window.halfwidth, opts);
  }
  return rep;
}

}  // namespace smoothlin
