// smoothlin: certify hypotheses, build conjugacies and validate Jacobians for
// the built-in systems.  Exit codes: 0 pass, 1 fail, 2 configuration error.

#include "smoothlin/report.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

namespace {

using namespace smoothlin;

struct Flags {
  std::string system = "ex1";
  double lambda = 0.6931471805599453;
  double gamma_scale = 0.9;
  double c = 0.01;
  double theta_ratio = 2.0;
  double rotation_angle = 0.5;
  double rho_scale = 1.0;
  int dim_half = 0;
  int n0 = 1;
  long window = 40;
  long n_min = -10;
  long n_max = 10;
  long n_stride = 5;
  int grid_points = 5;
  double series_tol = 1e-9;
  double fp_tol = 1e-10;
  double fd_step = 1e-6;
  std::uint64_t seed = 0;
  std::string out;
  std::string format = "json";
  bool force = false;
};

void add_options(CLI::App& cmd, Flags& f) {
  cmd.add_option("--system", f.system, "remm | ex1 | ex2 | end_cfg | emo, or a JSON parameter file");
  cmd.add_option("--lambda", f.lambda, "rate lambda of ex1 / emo");
  cmd.add_option("--gamma-scale", f.gamma_scale, "multiplier on the admissible gamma sequence, in [0, 1]");
  cmd.add_option("--c", f.c, "emo constant coupling");
  cmd.add_option("--theta-ratio", f.theta_ratio, "ex2 bound T on theta_{n+1}/theta_n");
  cmd.add_option("--rotation-angle", f.rotation_angle, "ex2 isometries and end_cfg driver");
  cmd.add_option("--rho-scale", f.rho_scale, "end_cfg multiplier on rho, in [0, 1]");
  cmd.add_option("--dim-half", f.dim_half, "dimension of each factor (0: example default)");
  cmd.add_option("--n0", f.n0, "remm shift in gamma_k = gamma_scale / 2^{2|k| + n0}");
  cmd.add_option("--window", f.window, "series truncation half-width");
  cmd.add_option("--n-min", f.n_min, "first time index");
  cmd.add_option("--n-max", f.n_max, "last time index");
  cmd.add_option("--n-stride", f.n_stride, "stride of the time indices probed by conjugate/derivatives");
  cmd.add_option("--grid-points", f.grid_points, "probe lattice points per axis");
  cmd.add_option("--series-tol", f.series_tol, "truncation target of bar_h");
  cmd.add_option("--fp-tol", f.fp_tol, "fixed-point tolerance of h");
  cmd.add_option("--fd-step", f.fd_step, "central-difference step");
  cmd.add_option("--seed", f.seed, "probe jitter seed");
  cmd.add_option("--out", f.out, "output path (stdout when omitted)");
  cmd.add_option("--format", f.format, "json | csv")->check(CLI::IsMember({"json", "csv"}));
  cmd.add_flag("--force", f.force, "run later phases even when certification fails");
}

template <typename T>
void take(const Json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

/// Parameter file values first, then every flag given on the command line.
RunConfig make_config(const CLI::App& cmd, const Flags& f) {
  RunConfig cfg;
  ExampleParams& e = cfg.example;
  std::string name = f.system;
  if (name.size() > 5 && name.substr(name.size() - 5) == ".json") {
    std::ifstream in(name);
    if (!in) throw ConfigError("cannot open parameter file " + name);
    Json j;
    try {
      j = Json::parse(in);
    } catch (const nlohmann::json::exception& ex) {
      throw ConfigError("parameter file " + name + ": " + ex.what());
    }
    try {
      name = j.value("system", std::string("ex1"));
      take(j, "lambda", e.lambda);
      take(j, "gamma_scale", e.gamma_scale);
      take(j, "c", e.c);
      take(j, "theta_ratio", e.theta_ratio);
      take(j, "rotation_angle", e.rotation_angle);
      take(j, "rho_scale", e.rho_scale);
      take(j, "dim_half", e.dim_half);
      take(j, "n0", e.n0);
      take(j, "window", cfg.window);
      take(j, "n_min", cfg.n_min);
      take(j, "n_max", cfg.n_max);
      take(j, "n_stride", cfg.n_stride);
      take(j, "grid_points", cfg.grid_points);
      take(j, "series_tol", cfg.series_tol);
      take(j, "fp_tol", cfg.fp_tol);
      take(j, "fd_step", cfg.fd_step);
      take(j, "seed", cfg.seed);
    } catch (const nlohmann::json::exception& ex) {
      throw ConfigError("parameter file " + f.system + ": " + ex.what());
    }
  } else {
    e.lambda = f.lambda;
    e.gamma_scale = f.gamma_scale;
    e.c = f.c;
    e.theta_ratio = f.theta_ratio;
    e.rotation_angle = f.rotation_angle;
    e.rho_scale = f.rho_scale;
    e.dim_half = f.dim_half;
    e.n0 = f.n0;
    cfg.window = f.window;
    cfg.n_min = f.n_min;
    cfg.n_max = f.n_max;
    cfg.n_stride = f.n_stride;
    cfg.grid_points = f.grid_points;
    cfg.series_tol = f.series_tol;
    cfg.fp_tol = f.fp_tol;
    cfg.fd_step = f.fd_step;
    cfg.seed = f.seed;
  }
  auto given = [&](const char* flag) { return cmd.count(flag) > 0; };
  if (given("--lambda")) e.lambda = f.lambda;
  if (given("--gamma-scale")) e.gamma_scale = f.gamma_scale;
  if (given("--c")) e.c = f.c;
  if (given("--theta-ratio")) e.theta_ratio = f.theta_ratio;
  if (given("--rotation-angle")) e.rotation_angle = f.rotation_angle;
  if (given("--rho-scale")) e.rho_scale = f.rho_scale;
  if (given("--dim-half")) e.dim_half = f.dim_half;
  if (given("--n0")) e.n0 = f.n0;
  if (given("--window")) cfg.window = f.window;
  if (given("--n-min")) cfg.n_min = f.n_min;
  if (given("--n-max")) cfg.n_max = f.n_max;
  if (given("--n-stride")) cfg.n_stride = f.n_stride;
  if (given("--grid-points")) cfg.grid_points = f.grid_points;
  if (given("--series-tol")) cfg.series_tol = f.series_tol;
  if (given("--fp-tol")) cfg.fp_tol = f.fp_tol;
  if (given("--fd-step")) cfg.fd_step = f.fd_step;
  if (given("--seed")) cfg.seed = f.seed;
  e.variant = parse_variant(name);
  cfg.force = f.force;
  cfg.validate();
  worker_count(0);  // reject a malformed NL_THREADS before any work
  return cfg;
}

void emit(const RunReport& rep, const Flags& f) {
  const SystemSpec sys = build_system(rep.config);
  const int dx = sys.dim_x(), dy = sys.dim_y();
  auto write = [&](std::ostream& os) {
    if (f.format == "json") {
      os << report_json(rep).dump(2) << '\n';
    } else if (rep.phase == Phase::check) {
      write_hypothesis_csv(os, rep);
    } else if (rep.phase == Phase::derivatives) {
      write_jacobian_csv(os, rep, dx, dy);
    } else {
      write_residual_csv(os, rep, dx, dy);
    }
  };
  if (f.out.empty()) {
    write(std::cout);
    return;
  }
  std::ofstream file(f.out);
  if (!file) throw ConfigError("cannot write " + f.out);
  write(file);
  if (rep.phase == Phase::report) {
    const std::filesystem::path base(f.out);
    const auto stem = (base.parent_path() / base.stem()).string();
    std::ofstream res(stem + "_residuals.csv"), jac(stem + "_jacobians.csv"), hyp(stem + "_hypothesis.csv");
    write_residual_csv(res, rep, dx, dy);
    write_jacobian_csv(jac, rep, dx, dy);
    write_hypothesis_csv(hyp, rep);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Smooth linearization of nonautonomous coupled difference systems"};
  app.require_subcommand(1);
  Flags flags;
  struct Entry {
    const char* name;
    const char* help;
    Phase phase;
  };
  const Entry entries[] = {
      {"check", "certify the basic and advanced hypotheses", Phase::check},
      {"conjugate", "inverse and equivariance residuals of H and bar_H", Phase::conjugate},
      {"derivatives", "analytic Jacobians against finite differences", Phase::derivatives},
      {"report", "all phases, JSON plus CSV tables", Phase::report},
  };
  std::vector<std::pair<CLI::App*, Phase>> commands;
  for (const auto& e : entries) {
    CLI::App* cmd = app.add_subcommand(e.name, e.help);
    add_options(*cmd, flags);
    commands.emplace_back(cmd, e.phase);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    for (const auto& [cmd, phase] : commands) {
      if (!cmd->parsed()) continue;
      const RunConfig cfg = make_config(*cmd, flags);
      const RunReport rep = run(cfg, phase);
      emit(rep, flags);
      if (!rep.pass()) std::cerr << "verdict: fail\n";
      return rep.pass() ? 0 : 1;
    }
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
