#pragma once

// Batch runs behind the command line: hypothesis certification, conjugacy
// residuals and Jacobian validation over a probe grid, with JSON and CSV output.

#include "smoothlin/conjugacy.hpp"
#include "smoothlin/derivatives.hpp"
#include "smoothlin/examples.hpp"
#include "smoothlin/hypotheses.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iomanip>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace smoothlin {

inline constexpr const char* kSchemaVersion = "1.0";

struct RunConfig {
  ExampleParams example{};
  long window = 40;
  long n_min = -10;
  long n_max = 10;
  long n_stride = 5;          // conjugacy and Jacobian phases visit n_min, n_min + stride, ..., n_max
  int grid_points = 5;        // lattice points per axis
  double grid_extent = 1.0;   // lattice covers [-extent, extent] per axis
  double jitter = 0.1;        // fraction of the lattice spacing
  int steps = 10;             // equivariance steps
  double series_tol = 1e-9;
  double fp_tol = 1e-10;
  double fd_step = 1e-6;
  std::uint64_t seed = 0;
  bool force = false;
  int threads = 0;            // 0: NL_THREADS, else hardware concurrency

  double equivariance_tol = 1e-7;
  double jacobian_tol = 1e-4;
  double resolvent_tol = 1e-8;

  void validate() const {
    example.validate();
    if (window < 1) throw ConfigError("window must be positive");
    if (n_min > n_max) throw ConfigError("n-min must not exceed n-max");
    if (n_stride < 1) throw ConfigError("n-stride must be positive");
    if (grid_points < 1) throw ConfigError("probe count per axis must be at least 1");
    if (!(grid_extent > 0.0)) throw ConfigError("grid extent must be positive");
    if (!(jitter >= 0.0 && jitter < 0.5)) throw ConfigError("jitter must lie in [0, 0.5)");
    if (steps < 1) throw ConfigError("steps must be positive");
    if (!(series_tol > 0.0) || !(fp_tol > 0.0) || !(fd_step > 0.0))
      throw ConfigError("tolerances and the finite-difference step must be positive");
    if (!(equivariance_tol > 0.0) || !(jacobian_tol > 0.0) || !(resolvent_tol > 0.0))
      throw ConfigError("thresholds must be positive");
  }

  double inverse_tol() const { return fp_tol + 10.0 * series_tol; }

  std::vector<long> sampled_n() const {
    std::vector<long> out;
    for (long n = n_min; n <= n_max; n += n_stride) out.push_back(n);
    if (out.back() != n_max) out.push_back(n_max);
    return out;
  }
};

// ---------------------------------------------------------------------------
// probes and the work pool

struct Probe {
  Vector xi;
  Vector eta;
};

/// Lattice of grid_points per axis on [-extent, extent]^(dim_x + dim_y), each
/// point moved by seeded uniform jitter of at most jitter * spacing per axis.
inline std::vector<Probe> probe_grid(const SystemSpec& sys, const RunConfig& cfg) {
  const int dx = sys.dim_x(), dy = sys.dim_y(), dim = dx + dy;
  const int pts = cfg.grid_points;
  const double spacing = pts > 1 ? 2.0 * cfg.grid_extent / (pts - 1) : 0.0;
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> jit(-cfg.jitter * spacing, cfg.jitter * spacing);
  long total = 1;
  for (int i = 0; i < dim; ++i) total *= pts;
  std::vector<Probe> out;
  out.reserve(static_cast<std::size_t>(total));
  for (long idx = 0; idx < total; ++idx) {
    Vector v(dim);
    long rest = idx;
    for (int i = 0; i < dim; ++i) {
      const long c = rest % pts;
      rest /= pts;
      const double base = pts > 1 ? -cfg.grid_extent + spacing * static_cast<double>(c) : 0.0;
      v(i) = base + (spacing > 0.0 ? jit(rng) : 0.0);
    }
    out.push_back(Probe{v.head(dx), v.tail(dy)});
  }
  return out;
}

inline int worker_count(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("NL_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v >= 1) return static_cast<int>(std::min(v, 256L));
    throw ConfigError(std::string("NL_THREADS must be a positive integer, got '") + env + "'");
  }
  return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

/// Runs job(i) for i in [0, count); results go to caller-owned slots by index.
inline void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& job) {
  const auto workers = static_cast<std::size_t>(std::max(1, threads));
  if (workers == 1 || count < 2) {
    for (std::size_t i = 0; i < count; ++i) job(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < std::min(workers, count); ++w)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) job(i);
    });
  for (auto& t : pool) t.join();
}

// ---------------------------------------------------------------------------
// report

struct ResidualRow {
  long n = 0;
  std::size_t probe = 0;
  Vector xi, eta, value;  // value: h_n(xi, eta)
  double inverse = 0.0;
  double linear_to_coupled = 0.0;
  double coupled_to_linear = 0.0;
  double tail_bound = 0.0;
  std::string error;
};

struct JacobianRow {
  long n = 0;
  std::size_t probe = 0;
  Vector xi, eta;
  JacobianReport report;
};

struct JacobianProbeChecks {
  long n = 0;
  std::size_t probe = 0;
  double barh_du_norm = 0.0;
  double contraction = 0.0;
  double resolvent_defect = 0.0;
  std::string error;
};

enum class Phase { check, conjugate, derivatives, report };

inline const char* to_string(Phase p) {
  switch (p) {
    case Phase::check: return "check";
    case Phase::conjugate: return "conjugate";
    case Phase::derivatives: return "derivatives";
    default: return "report";
  }
}

struct RunReport {
  RunConfig config;
  Phase phase = Phase::check;
  std::string system_name;
  bool has_hypothesis = false, has_conjugacy = false, has_jacobians = false;
  HypothesisReport hypothesis;
  std::vector<ResidualRow> residuals;
  std::vector<JacobianRow> jacobians;
  std::vector<JacobianProbeChecks> jacobian_checks;
  std::string skipped;  // why requested phases did not run
  double hypothesis_seconds = 0.0, conjugacy_seconds = 0.0, jacobian_seconds = 0.0;

  double max_inverse() const {
    double out = 0.0;
    for (const auto& r : residuals) out = std::max(out, r.inverse);
    return out;
  }
  double max_equivariance() const {
    double out = 0.0;
    for (const auto& r : residuals) out = std::max({out, r.linear_to_coupled, r.coupled_to_linear});
    return out;
  }
  double max_rel_error() const {
    double out = 0.0;
    for (const auto& r : jacobians) out = std::max(out, r.report.rel_error);
    return out;
  }
  double max_resolvent_defect() const {
    double out = 0.0;
    for (const auto& c : jacobian_checks) out = std::max(out, c.resolvent_defect);
    return out;
  }
  bool norm_bound_ok() const {
    for (const auto& c : jacobian_checks)
      if (c.error.empty() && !(c.barh_du_norm <= c.contraction * (1.0 + 1e-12) + 1e-15)) return false;
    return true;
  }
  std::size_t error_count() const {
    std::size_t out = 0;
    for (const auto& r : residuals) out += !r.error.empty();
    for (const auto& c : jacobian_checks) out += !c.error.empty();
    return out;
  }

  bool hypothesis_pass() const { return !has_hypothesis || hypothesis.pass(); }
  bool conjugacy_pass() const {
    return !has_conjugacy || (max_inverse() <= config.inverse_tol() && max_equivariance() <= config.equivariance_tol &&
                              std::all_of(residuals.begin(), residuals.end(),
                                          [](const ResidualRow& r) { return r.error.empty(); }));
  }
  bool jacobian_pass() const {
    return !has_jacobians ||
           (max_rel_error() <= config.jacobian_tol && norm_bound_ok() &&
            max_resolvent_defect() <= config.resolvent_tol &&
            std::all_of(jacobian_checks.begin(), jacobian_checks.end(),
                        [](const JacobianProbeChecks& c) { return c.error.empty(); }));
  }
  bool pass() const { return skipped.empty() && hypothesis_pass() && conjugacy_pass() && jacobian_pass(); }
};

namespace detail {

inline EngineOptions engine_options(const RunConfig& cfg) {
  EngineOptions eo;
  eo.window_halfwidth = cfg.window;
  eo.max_halfwidth = std::max(cfg.window, 4 * cfg.window);
  eo.certify_halfwidth = cfg.window;
  eo.series_tol = cfg.series_tol;
  eo.fp_tol = cfg.fp_tol;
  eo.solve.fixed_point_tol = std::min(1e-12, cfg.fp_tol * 1e-2);
  return eo;
}

/// Finite differences of h need solves far below the step size.
inline EngineOptions derivative_engine_options(const RunConfig& cfg) {
  EngineOptions eo = engine_options(cfg);
  eo.series_tol = std::min(cfg.series_tol, 1e-12);
  eo.fp_tol = std::min(cfg.fp_tol, 1e-13);
  eo.solve.fixed_point_tol = 1e-15;
  return eo;
}

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace detail

inline SystemSpec build_system(const RunConfig& cfg) { return make_example(cfg.example); }

inline void run_hypothesis(const SystemSpec& sys, const RunConfig& cfg, RunReport& rep) {
  const auto t0 = std::chrono::steady_clock::now();
  rep.hypothesis = certify(sys, CheckWindow{cfg.n_min, cfg.n_max, cfg.window},
                           ProbeSpec{200, 2.0, cfg.seed});
  rep.has_hypothesis = true;
  rep.hypothesis_seconds = detail::seconds_since(t0);
}

/// Inverse and equivariance residuals over the probe grid at every sampled n.
inline void run_conjugacy(const SystemSpec& sys, const RunConfig& cfg, RunReport& rep) {
  const auto t0 = std::chrono::steady_clock::now();
  rep.has_conjugacy = true;
  const ConjugacyEngine engine(sys, detail::engine_options(cfg));
  const auto probes = probe_grid(sys, cfg);
  const auto ns = cfg.sampled_n();
  std::vector<ResidualRow> rows(ns.size() * probes.size());
  parallel_for(rows.size(), worker_count(cfg.threads), [&](std::size_t i) {
    ResidualRow& row = rows[i];
    row.n = ns[i / probes.size()];
    row.probe = i % probes.size();
    row.xi = probes[row.probe].xi;
    row.eta = probes[row.probe].eta;
    try {
      row.value = h(engine, row.n, row.xi, row.eta);
      row.tail_bound = engine.plan(row.n).tail_bound;
      row.inverse = inverse_residuals(engine, row.n, row.xi, row.eta).max();
      const auto eq = equivariance_residuals(engine, row.n, row.xi, row.eta, cfg.steps);
      row.linear_to_coupled = eq.linear_to_coupled;
      row.coupled_to_linear = eq.coupled_to_linear;
    } catch (const Error& e) {
      row.error = e.what();
    }
  });
  rep.residuals = std::move(rows);
  rep.conjugacy_seconds = detail::seconds_since(t0);
}

/// Every analytic Jacobian against central differences at every probe and sampled n.
inline void run_jacobians(const SystemSpec& sys, const RunConfig& cfg, RunReport& rep) {
  const auto t0 = std::chrono::steady_clock::now();
  rep.has_jacobians = true;
  const ConjugacyEngine engine(sys, detail::derivative_engine_options(cfg));
  const SolveOptions solve = engine.trajectory_options();
  const auto probes = probe_grid(sys, cfg);
  const auto ns = cfg.sampled_n();
  const bool has_y = sys.dim_y() > 0;
  const long reach = 4;
  const double step = cfg.fd_step;
  const double richardson_at = cfg.jacobian_tol * 0.1;

  std::vector<std::vector<JacobianRow>> rows(ns.size() * probes.size());
  std::vector<JacobianProbeChecks> checks(rows.size());
  parallel_for(rows.size(), worker_count(cfg.threads), [&](std::size_t i) {
    const long n = ns[i / probes.size()];
    const std::size_t p = i % probes.size();
    const Vector& xi = probes[p].xi;
    const Vector& eta = probes[p].eta;
    auto& out = rows[i];
    auto add = [&](std::string label, const Matrix& analytic, auto&& fun, const Vector& at) {
      out.push_back(JacobianRow{n, p, xi, eta, check_jacobian(std::move(label), analytic, fun, at, step, richardson_at)});
    };
    JacobianProbeChecks& chk = checks[i];
    chk.n = n;
    chk.probe = p;
    try {
      for (long k : {n - reach, n + reach}) {
        const std::string side = k < n ? "[k=n-4]" : "[k=n+4]";
        add("d_x2_dxi" + side, d_x2_dxi(sys, k, n, xi, eta, solve),
            [&](const Vector& z) { return evolve_coupled(sys, k, n, z, eta, solve); }, xi);
        if (has_y) {
          add("d_x2_deta" + side, d_x2_deta(sys, k, n, xi, eta, solve),
              [&](const Vector& w) { return evolve_coupled(sys, k, n, xi, w, solve); }, eta);
          add("d_y_deta" + side, d_y_deta(sys, k, n, eta),
              [&](const Vector& w) { return evolve_driver(sys, k, n, w); }, eta);
        }
      }
      const Matrix bx = d_barh_dxi(engine, n, xi, eta);
      add("d_barh_dxi", bx, [&](const Vector& z) { return bar_h(engine, n, z, eta); }, xi);
      chk.barh_du_norm = sys.x_op_norm(bx);
      chk.contraction = engine.contraction_estimate(n);
      if (has_y)
        add("d_barh_deta", d_barh_deta(engine, n, xi, eta),
            [&](const Vector& w) { return bar_h(engine, n, xi, w); }, eta);
      const auto r = d_h_dxi_detailed(engine, n, xi, eta);
      add("d_h_dxi", r.value, [&](const Vector& z) { return h(engine, n, z, eta); }, xi);
      const Matrix id = Matrix::Identity(sys.dim_x(), sys.dim_x());
      chk.resolvent_defect = sys.x_op_norm((id + r.value) * (id + r.barh_du) - id);
      if (has_y)
        add("d_h_deta", d_h_deta(engine, n, xi, eta), [&](const Vector& w) { return h(engine, n, xi, w); }, eta);
    } catch (const Error& e) {
      chk.error = e.what();
    }
  });
  rep.jacobians.clear();
  for (auto& r : rows)
    for (auto& j : r) rep.jacobians.push_back(std::move(j));
  rep.jacobian_checks = std::move(checks);
  rep.jacobian_seconds = detail::seconds_since(t0);
}

/// Certification always runs; later phases need it to pass unless forced.
inline RunReport run(const RunConfig& cfg, Phase phase) {
  cfg.validate();
  const SystemSpec sys = build_system(cfg);
  RunReport rep;
  rep.config = cfg;
  rep.phase = phase;
  rep.system_name = sys.name;
  run_hypothesis(sys, cfg, rep);
  if (phase == Phase::check) return rep;
  if (!rep.hypothesis.pass() && !cfg.force) {
    rep.skipped = "hypothesis certification failed; conjugacy and Jacobian phases skipped (use --force)";
    return rep;
  }
  if (phase == Phase::conjugate || phase == Phase::report) run_conjugacy(sys, cfg, rep);
  if (phase == Phase::derivatives || phase == Phase::report) run_jacobians(sys, cfg, rep);
  return rep;
}

inline RunReport cmd_check(const RunConfig& cfg) { return run(cfg, Phase::check); }
inline RunReport cmd_conjugate(const RunConfig& cfg) { return run(cfg, Phase::conjugate); }
inline RunReport cmd_derivatives(const RunConfig& cfg) { return run(cfg, Phase::derivatives); }
inline RunReport cmd_report(const RunConfig& cfg) { return run(cfg, Phase::report); }

// ---------------------------------------------------------------------------
// serialization

using Json = nlohmann::ordered_json;

namespace detail {

inline Json finite_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

inline Json to_json(const Vector& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

inline Json to_json(const SeriesEstimate& est) {
  return Json{{"partial_sum", finite_or_null(est.partial_sum)},
              {"tail_bound", est.tail_bound ? finite_or_null(*est.tail_bound) : Json(nullptr)},
              {"upper", finite_or_null(est.upper())},
              {"verdict", to_string(est.verdict)},
              {"window", {est.k_min, est.k_max}},
              {"terms_inspected", est.terms_inspected},
              {"witness", est.witness}};
}

inline Json to_json(const IndexedCheck& c) {
  return Json{{"ok", c.ok}, {"worst_index", c.worst_index}, {"worst_value", finite_or_null(c.worst_value)}};
}

}  // namespace detail

inline Json config_json(const RunConfig& cfg, const std::string& system_name) {
  const auto& e = cfg.example;
  return Json{{"system", system_name},
              {"lambda", e.lambda},
              {"dim_half", e.dim_half},
              {"gamma_scale", e.gamma_scale},
              {"theta_ratio", e.theta_ratio},
              {"rotation_angle", e.rotation_angle},
              {"c", e.c},
              {"rho_scale", e.rho_scale},
              {"n0", e.n0},
              {"window_halfwidth", cfg.window},
              {"n_range", {cfg.n_min, cfg.n_max}},
              {"n_stride", cfg.n_stride},
              {"probe_grid", {{"points_per_axis", cfg.grid_points}, {"extent", cfg.grid_extent}, {"jitter", cfg.jitter}}},
              {"steps", cfg.steps},
              {"series_tol", cfg.series_tol},
              {"fp_tol", cfg.fp_tol},
              {"fd_step", cfg.fd_step},
              {"seed", cfg.seed},
              {"force", cfg.force},
              {"thresholds",
               {{"inverse", cfg.inverse_tol()},
                {"equivariance", cfg.equivariance_tol},
                {"jacobian_rel_error", cfg.jacobian_tol},
                {"resolvent", cfg.resolvent_tol}}}};
}

inline Json hypothesis_json(const HypothesisReport& h) {
  Json per_n = Json::array();
  for (const auto& [n, first] : h.ac2) {
    Json row{{"n", n},
             {"K", detail::to_json(first.k_series)},
             {"J", detail::to_json(first.j_series)},
             {"diagonal", first.diagonal},
             {"contraction", detail::finite_or_null(first.contraction_upper())},
             {"ac3", first.ac3}};
    if (auto it = h.ac9.find(n); it != h.ac9.end()) row["ac9"] = detail::to_json(it->second);
    per_n.push_back(std::move(row));
  }
  return Json{{"window", {{"n_min", h.window.n_min}, {"n_max", h.window.n_max}, {"halfwidth", h.window.halfwidth}}},
              {"bc1", {{"ok", h.sampled.bc1_ok},
                       {"probes", h.sampled.probes},
                       {"violations", h.sampled.violations},
                       {"first_violation", h.sampled.first_violation}}},
              {"ac4_sampled_ok", h.sampled.ac4_ok},
              {"ac5_sampled_ok", h.sampled.ac5_ok},
              {"bc2", detail::to_json(h.bc2)},
              {"bc3", detail::to_json(h.bc3)},
              {"bc4", detail::to_json(h.bc4)},
              {"ac6", detail::to_json(h.ac6)},
              {"weight_norm_sup", h.weight_norm_sup},
              {"per_n", std::move(per_n)},
              {"verdict", h.pass() ? "pass" : "fail"}};
}

inline Json report_json(const RunReport& rep) {
  Json out;
  out["schema_version"] = kSchemaVersion;
  out["config"] = config_json(rep.config, rep.system_name);
  out["config"]["command"] = to_string(rep.phase);
  out["hypothesis"] = rep.has_hypothesis ? hypothesis_json(rep.hypothesis) : Json(nullptr);

  if (rep.has_conjugacy) {
    Json eq_rows = Json::array(), inv_rows = Json::array(), errors = Json::array();
    for (const auto& r : rep.residuals) {
      if (!r.error.empty()) {
        errors.push_back({{"n", r.n}, {"probe", r.probe}, {"error", r.error}});
        continue;
      }
      eq_rows.push_back({{"n", r.n}, {"probe", r.probe}, {"linear_to_coupled", r.linear_to_coupled},
                         {"coupled_to_linear", r.coupled_to_linear}});
      inv_rows.push_back({{"n", r.n}, {"probe", r.probe}, {"residual", r.inverse}, {"tail_bound", r.tail_bound}});
    }
    out["equivariance"] = {{"steps", rep.config.steps},
                           {"threshold", rep.config.equivariance_tol},
                           {"max", rep.max_equivariance()},
                           {"rows", std::move(eq_rows)},
                           {"errors", errors}};
    out["inverse"] = {{"threshold", rep.config.inverse_tol()},
                      {"max", rep.max_inverse()},
                      {"rows", std::move(inv_rows)},
                      {"errors", errors}};
  } else {
    const bool wanted = rep.phase == Phase::conjugate || rep.phase == Phase::report;
    out["equivariance"] = wanted ? Json{{"skipped", rep.skipped}} : Json(nullptr);
    out["inverse"] = out["equivariance"];
  }

  if (rep.has_jacobians) {
    std::map<std::string, std::pair<std::size_t, double>> by_label;
    std::map<std::string, std::size_t> richardson;
    for (const auto& j : rep.jacobians) {
      auto& [count, worst] = by_label[j.report.label];
      ++count;
      worst = std::max(worst, j.report.rel_error);
      richardson[j.report.label] += j.report.richardson;
    }
    Json summary = Json::array();
    for (const auto& [label, cw] : by_label)
      summary.push_back({{"label", label},
                         {"count", cw.first},
                         {"max_rel_error", cw.second},
                         {"richardson_used", richardson[label]}});
    Json errors = Json::array();
    for (const auto& c : rep.jacobian_checks)
      if (!c.error.empty()) errors.push_back({{"n", c.n}, {"probe", c.probe}, {"error", c.error}});
    out["jacobians"] = {{"threshold", rep.config.jacobian_tol},
                        {"fd_step", rep.config.fd_step},
                        {"max_rel_error", rep.max_rel_error()},
                        {"summary", std::move(summary)},
                        {"norm_bound_ok", rep.norm_bound_ok()},
                        {"resolvent_max_defect", rep.max_resolvent_defect()},
                        {"errors", std::move(errors)}};
  } else {
    const bool wanted = rep.phase == Phase::derivatives || rep.phase == Phase::report;
    out["jacobians"] = wanted ? Json{{"skipped", rep.skipped}} : Json(nullptr);
  }

  out["timing"] = {{"hypothesis_s", rep.hypothesis_seconds},
                   {"conjugacy_s", rep.conjugacy_seconds},
                   {"derivatives_s", rep.jacobian_seconds},
                   {"total_s", rep.hypothesis_seconds + rep.conjugacy_seconds + rep.jacobian_seconds}};
  out["verdict"] = rep.pass() ? "pass" : "fail";
  return out;
}

namespace detail {

inline std::string csv_number(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

inline void csv_header(std::ostream& os, int dx, int dy) {
  os << "n";
  for (int i = 0; i < dx; ++i) os << ",xi" << i;
  for (int i = 0; i < dy; ++i) os << ",eta" << i;
}

inline void csv_point(std::ostream& os, long n, const Vector& xi, const Vector& eta) {
  os << n;
  for (Eigen::Index i = 0; i < xi.size(); ++i) os << ',' << csv_number(xi(i));
  for (Eigen::Index i = 0; i < eta.size(); ++i) os << ',' << csv_number(eta(i));
}

}  // namespace detail

/// n, xi..., eta..., value... (h_n), residual (worst of inverse and equivariance), tail_bound.
inline void write_residual_csv(std::ostream& os, const RunReport& rep, int dx, int dy) {
  detail::csv_header(os, dx, dy);
  for (int i = 0; i < dx; ++i) os << ",value" << i;
  os << ",residual,tail_bound\n";
  for (const auto& r : rep.residuals) {
    if (!r.error.empty()) continue;
    detail::csv_point(os, r.n, r.xi, r.eta);
    for (Eigen::Index i = 0; i < r.value.size(); ++i) os << ',' << detail::csv_number(r.value(i));
    os << ',' << detail::csv_number(std::max({r.inverse, r.linear_to_coupled, r.coupled_to_linear})) << ','
       << detail::csv_number(r.tail_bound) << '\n';
  }
}

/// n, xi..., eta..., label, rel_error, fd_step, richardson.
inline void write_jacobian_csv(std::ostream& os, const RunReport& rep, int dx, int dy) {
  detail::csv_header(os, dx, dy);
  os << ",label,rel_error,fd_step,richardson\n";
  for (const auto& j : rep.jacobians) {
    detail::csv_point(os, j.n, j.xi, j.eta);
    os << ',' << j.report.label << ',' << detail::csv_number(j.report.rel_error) << ','
       << detail::csv_number(j.report.fd_step) << ',' << (j.report.richardson ? 1 : 0) << '\n';
  }
}

/// n, K, J, diagonal, contraction, ac3, ac9 per certified index.
inline void write_hypothesis_csv(std::ostream& os, const RunReport& rep) {
  os << "n,K,J,diagonal,contraction,ac3,ac9\n";
  for (const auto& [n, first] : rep.hypothesis.ac2) {
    const auto it = rep.hypothesis.ac9.find(n);
    os << n << ',' << detail::csv_number(first.k_series.upper()) << ',' << detail::csv_number(first.j_series.upper())
       << ',' << detail::csv_number(first.diagonal) << ',' << detail::csv_number(first.contraction_upper()) << ','
       << (first.ac3 ? 1 : 0) << ','
       << (it == rep.hypothesis.ac9.end() ? std::string("") : detail::csv_number(it->second.upper())) << '\n';
  }
}

}  // namespace smoothlin
