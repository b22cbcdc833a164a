#pragma once

// Built-in systems: the hyperbolic and the non-dichotomic product examples,
// the identity-operator example with and without a driver, and the
// constant-coupling configuration on which the contraction series diverge.
//
// Every coupling is gamma_n s(x - shift) (+ rho_n s(y) when there is a driver),
// where s(v) = v / sqrt(1 + |v|^2) on each norm block.  s is bounded by 1 and
// 1-Lipschitz for the norm it is built for, so mu_n = gamma_n (+ rho_n).

#include "smoothlin/system.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>
#include <vector>

namespace smoothlin {

enum class Variant { remm, ex1, ex2, end_cfg, emo };

inline const char* to_string(Variant v) {
  switch (v) {
    case Variant::remm: return "remm";
    case Variant::ex1: return "ex1";
    case Variant::ex2: return "ex2";
    case Variant::end_cfg: return "end_cfg";
    default: return "emo";
  }
}

inline Variant parse_variant(const std::string& name) {
  if (name == "remm") return Variant::remm;
  if (name == "ex1") return Variant::ex1;
  if (name == "ex2") return Variant::ex2;
  if (name == "end" || name == "end_cfg") return Variant::end_cfg;
  if (name == "emo") return Variant::emo;
  throw ConfigError("unknown system '" + name + "' (expected remm, ex1, ex2, end_cfg or emo)");
}

struct ExampleParams {
  Variant variant = Variant::ex1;
  double lambda = 0.6931471805599453;  // ex1 / emo rate
  int dim_half = 0;                    // 0: per-example default (1, or 2 for ex2 and end_cfg)
  double gamma_scale = 0.9;
  double theta_ratio = 2.0;            // ex2: bound T on theta_{n+1}/theta_n
  double rotation_angle = 0.5;         // ex2 isometries, end_cfg driver
  double c = 0.01;                     // emo constant coupling (times gamma_scale)
  double rho_scale = 1.0;              // end_cfg
  int n0 = 1;                          // remm: gamma_k = gamma_scale / 2^{2|k| + n0}

  void validate() const {
    if (!(lambda > 0.0)) throw ConfigError("lambda must be positive");
    if (dim_half < 0) throw ConfigError("dim_half must be positive");
    if (!(gamma_scale >= 0.0 && gamma_scale <= 1.0)) throw ConfigError("gamma_scale must lie in [0, 1]");
    if (!(theta_ratio >= 1.0)) throw ConfigError("theta_ratio must be at least 1");
    if (!std::isfinite(rotation_angle)) throw ConfigError("rotation_angle must be finite");
    if (!(c >= 0.0)) throw ConfigError("c must be nonnegative");
    if (!(rho_scale >= 0.0 && rho_scale <= 1.0)) throw ConfigError("rho_scale must lie in [0, 1]");
    if (n0 < 1) throw ConfigError("n0 must be at least 1");
  }
};

// ---------------------------------------------------------------------------
// building blocks

/// s(v) = v / sqrt(1 + |v|^2) applied per norm block.
inline Vector block_sigmoid(const Vector& v, const NormSpec& spec) {
  Vector out(v.size());
  const int b = detail::block_size(spec, v.size());
  for (Eigen::Index start = 0; start < v.size(); start += b) {
    const Eigen::Index len = std::min<Eigen::Index>(b, v.size() - start);
    const auto seg = v.segment(start, len);
    out.segment(start, len) = seg / std::sqrt(1.0 + seg.squaredNorm());
  }
  return out;
}

/// Jacobian of block_sigmoid: (I (1 + r^2) - v v^T) / (1 + r^2)^{3/2} per block.
inline Matrix block_sigmoid_jacobian(const Vector& v, const NormSpec& spec) {
  Matrix out = Matrix::Zero(v.size(), v.size());
  const int b = detail::block_size(spec, v.size());
  for (Eigen::Index start = 0; start < v.size(); start += b) {
    const Eigen::Index len = std::min<Eigen::Index>(b, v.size() - start);
    const Vector seg = v.segment(start, len);
    const double q = 1.0 + seg.squaredNorm();
    out.block(start, start, len, len) =
        (Matrix::Identity(len, len) * q - seg * seg.transpose()) / (q * std::sqrt(q));
  }
  return out;
}

/// Planar rotations by angle on coordinate pairs; a trailing odd coordinate is fixed.
inline Matrix rotation_blocks(int dim, double angle) {
  Matrix out = Matrix::Identity(dim, dim);
  const double c = std::cos(angle), s = std::sin(angle);
  for (int i = 0; i + 1 < dim; i += 2) {
    out(i, i) = c;
    out(i, i + 1) = -s;
    out(i + 1, i) = s;
    out(i + 1, i + 1) = c;
  }
  return out;
}

/// Fixed offset (0.3, -0.2, 0.3, ...) so that f_n(0) != 0.
inline Vector coupling_shift(int dim) {
  Vector out(dim);
  for (int i = 0; i < dim; ++i) out(i) = i % 2 == 0 ? 0.3 : -0.2;
  return out;
}

/// gamma_n s(x - shift), independent of y.
inline CouplingSpec sigmoid_coupling(IndexedScalar gamma, const SpaceSpec& space) {
  const NormSpec xs = space.x_norm;
  const Vector shift = coupling_shift(space.dim_x);
  const int dy = space.dim_y;
  CouplingSpec f;
  f.eval = [gamma, xs, shift](long n, const Vector& x, const Vector&) -> Vector {
    return gamma(n) * block_sigmoid(x - shift, xs);
  };
  f.jac_x = [gamma, xs, shift](long n, const Vector& x, const Vector&) -> Matrix {
    return gamma(n) * block_sigmoid_jacobian(x - shift, xs);
  };
  f.jac_y = [dy](long, const Vector& x, const Vector&) -> Matrix { return Matrix::Zero(x.size(), dy); };
  f.mu = gamma;
  f.gamma = gamma;
  f.rho = [](long) { return 0.0; };
  return f;
}

inline EnvelopeSet single(double scale, double ratio, long center) {
  return {GeometricEnvelope{scale, ratio, center}};
}

inline Matrix hyperbolic_block(int half, double top, double bottom) {
  Matrix out = Matrix::Zero(2 * half, 2 * half);
  out.topLeftCorner(half, half).diagonal().setConstant(top);
  out.bottomRightCorner(half, half).diagonal().setConstant(bottom);
  return out;
}

inline Matrix lower_projection(int half) {
  Matrix out = Matrix::Zero(2 * half, 2 * half);
  out.bottomRightCorner(half, half).setIdentity();
  return out;
}

inline Matrix upper_projection(int half) {
  Matrix out = Matrix::Zero(2 * half, 2 * half);
  out.topLeftCorner(half, half).setIdentity();
  return out;
}

/// prod_{j in Z} (1 + r^{|j|}) for 0 <= r < 1.
inline double two_sided_product(double r) {
  double out = 2.0;
  double t = r;
  for (int j = 1; j < 100000 && t > 1e-18; ++j, t *= r) out *= (1.0 + t) * (1.0 + t);
  return out;
}

/// The constant M of the hyperbolic example.
inline double ex1_M(double lambda) { return two_sided_product(std::exp(-lambda)); }

/// The constant M of the non-dichotomic example.
inline double ex2_M() { return two_sided_product(0.5); }

inline double ex2_theta(long n, double T) {
  if (n <= 0 || T == 1.0) return 1.0;
  const double cap = 1e12;
  const double log_theta = static_cast<double>(n) * std::log(T);
  return log_theta >= std::log(cap) ? cap : std::exp(log_theta);
}

/// gamma_k for the hyperbolic example: below the pointwise bound and within a
/// summable budget 2^{-(|k|+2)} / (e^lambda M) whose total is 3/4 of the allowed sum.
inline double ex1_gamma(long k, double lambda, double M, double scale) {
  const double pointwise = 1.0 / (std::exp(lambda * (std::abs(k) + 1.0)) + std::exp(lambda));
  const double budget = std::ldexp(1.0 / (std::exp(lambda) * M), -static_cast<int>(std::min(std::abs(k) + 2, 1000L)));
  return scale * std::min(pointwise, budget);
}

inline double ex2_gamma(long k, double T, double M, double scale) {
  const int e = static_cast<int>(std::min(std::abs(k), 1000L));
  const double pointwise = 1.0 / (T * (std::ldexp(1.0, e + 1) + 1.0));
  const double budget = std::ldexp(1.0 / (T * M), -(e + 2));
  return scale * std::min(pointwise, budget);
}

namespace detail {

inline int half_dim(const ExampleParams& p, int fallback) { return p.dim_half > 0 ? p.dim_half : fallback; }

inline void hyperbolic_operators(SystemSpec& sys, int half, double lambda) {
  const double up = std::exp(lambda), down = std::exp(-lambda);
  sys.a.eval = [half, up, down](long) { return hyperbolic_block(half, up, down); };
  sys.a.eval_inv = [half, up, down](long) { return hyperbolic_block(half, 1.0 / up, 1.0 / down); };
  sys.a.norm_bound = [up](long) { return up; };
  sys.a.inv_norm_bound = [up](long) { return up; };
  sys.p.eval = [half](long) { return lower_projection(half); };
}

}  // namespace detail

// ---------------------------------------------------------------------------
// constructors

inline SystemSpec make_ex1(const ExampleParams& params) {
  params.validate();
  const int half = detail::half_dim(params, 1);
  const double lambda = params.lambda, gs = params.gamma_scale;
  const double M = ex1_M(lambda);
  const double el = std::exp(lambda);

  SystemSpec sys;
  sys.name = "ex1";
  sys.space = SpaceSpec::uniform(2 * half, 0, NormKind::max);
  detail::hyperbolic_operators(sys, half, lambda);
  IndexedScalar gamma = [lambda, M, gs](long k) { return ex1_gamma(k, lambda, M, gs); };
  sys.f = sigmoid_coupling(gamma, sys.space);
  sys.g = DriverSpec::trivial();

  // gamma_k <= gs 2^{-(|k|+2)} / (e^lambda M); |G| <= 1 and |G(n,k+1)| = e^{-lambda|n-k-1|}
  const double g0 = gs / (4.0 * el * M);
  const double gmax = gs / (2.0 * el);
  sys.envelopes.basic_mu = [g0](long) { return single(g0, 0.5, 1); };
  sys.envelopes.basic_gamma = sys.envelopes.basic_mu;
  sys.envelopes.hbar_terms = [g0, gmax, lambda](long n) {
    return EnvelopeSet{{g0, 0.5, 0}, {gmax, std::exp(-lambda), n - 1}};
  };
  // K terms <= e^lambda M gamma_k, J terms <= e^{-lambda} M gamma_k
  sys.envelopes.k_terms = [gs](long) { return single(gs / 4.0, 0.5, 0); };
  sys.envelopes.j_terms = [gs, el](long) { return single(gs / (4.0 * el * el), 0.5, 0); };
  sys.envelopes.ac9_terms = sys.envelopes.k_terms;
  return sys;
}

inline SystemSpec make_ex2(const ExampleParams& params) {
  params.validate();
  const int half = detail::half_dim(params, 2);
  const double T = params.theta_ratio, gs = params.gamma_scale;
  const double M = ex2_M();
  const Matrix rot = rotation_blocks(half, params.rotation_angle);
  const Matrix rot_inv = rot.transpose();

  SystemSpec sys;
  sys.name = "ex2";
  sys.space = SpaceSpec{2 * half, 0, NormSpec{NormKind::euclidean, half}, NormSpec{NormKind::euclidean, 0}};
  auto block = [half](double top, const Matrix& b) {
    Matrix out = Matrix::Zero(2 * half, 2 * half);
    out.topLeftCorner(half, half).diagonal().setConstant(top);
    out.bottomRightCorner(half, half) = b;
    return out;
  };
  sys.a.eval = [block, rot, T](long n) { return block(ex2_theta(n, T) / ex2_theta(n + 1, T), rot); };
  sys.a.eval_inv = [block, rot_inv, T](long n) { return block(ex2_theta(n + 1, T) / ex2_theta(n, T), rot_inv); };
  sys.a.norm_bound = [](long) { return 1.0; };
  sys.a.inv_norm_bound = [T](long n) { return ex2_theta(n + 1, T) / ex2_theta(n, T); };
  sys.p.eval = [half](long) { return upper_projection(half); };
  IndexedScalar gamma = [T, M, gs](long k) { return ex2_gamma(k, T, M, gs); };
  sys.f = sigmoid_coupling(gamma, sys.space);
  sys.g = DriverSpec::trivial();

  // gamma_k <= gs 2^{-(|k|+2)} / (T M) and |G| <= 1
  const double g0 = gs / (4.0 * T * M);
  sys.envelopes.basic_mu = [g0](long) { return single(g0, 0.5, 1); };
  sys.envelopes.basic_gamma = sys.envelopes.basic_mu;
  sys.envelopes.hbar_terms = [g0](long) { return single(g0, 0.5, 0); };
  // K terms <= T M gamma_k, J terms <= M gamma_k
  sys.envelopes.k_terms = [gs](long) { return single(gs / 4.0, 0.5, 0); };
  sys.envelopes.j_terms = [gs, T](long) { return single(gs / (4.0 * T), 0.5, 0); };
  sys.envelopes.ac9_terms = sys.envelopes.k_terms;
  return sys;
}

inline SystemSpec make_remm(const ExampleParams& params) {
  params.validate();
  const int dim = detail::half_dim(params, 1);
  const double gs = params.gamma_scale;
  const int n0 = params.n0;

  SystemSpec sys;
  sys.name = "remm";
  sys.space = SpaceSpec::uniform(dim, 0, NormKind::max);
  sys.a.eval = [dim](long) { return Matrix::Identity(dim, dim); };
  sys.a.eval_inv = sys.a.eval;
  sys.a.norm_bound = [](long) { return 1.0; };
  sys.a.inv_norm_bound = sys.a.norm_bound;
  sys.p.eval = sys.a.eval;
  IndexedScalar gamma = [gs, n0](long k) {
    return gs * std::ldexp(1.0, -static_cast<int>(std::min(2 * std::abs(k) + n0, 2000L)));
  };
  sys.f = sigmoid_coupling(gamma, sys.space);
  sys.g = DriverSpec::trivial();

  // G(m,k) = Id for k <= m and 0 otherwise; 1/(1 - gamma_j) <= 2
  const double g0 = std::ldexp(gs, -n0);
  sys.envelopes.basic_mu = [g0](long) { return single(g0, 0.25, 1); };
  sys.envelopes.basic_gamma = sys.envelopes.basic_mu;
  sys.envelopes.hbar_terms = [g0](long) { return single(g0, 0.25, 0); };
  sys.envelopes.k_terms = [gs, n0](long n) {
    return single(gs * std::ldexp(1.0, static_cast<int>(std::abs(n)) - n0), 0.5, 0);
  };
  sys.envelopes.j_terms = [](long) { return single(0.0, 0.5, 0); };
  sys.envelopes.ac9_terms = sys.envelopes.k_terms;
  return sys;
}

/// Identity operators driven by a planar rotation on Y, with a y-dependent coupling.
inline SystemSpec make_end(const ExampleParams& params) {
  params.validate();
  const int dim = detail::half_dim(params, 2);
  const double gs = params.gamma_scale, rs = params.rho_scale;
  const Matrix rot = rotation_blocks(dim, params.rotation_angle);
  const Matrix rot_inv = rot.transpose();

  SystemSpec sys;
  sys.name = "end_cfg";
  sys.space = SpaceSpec::uniform(dim, dim, NormKind::euclidean);
  sys.a.eval = [dim](long) { return Matrix::Identity(dim, dim); };
  sys.a.eval_inv = sys.a.eval;
  sys.a.norm_bound = [](long) { return 1.0; };
  sys.a.inv_norm_bound = sys.a.norm_bound;
  sys.p.eval = sys.a.eval;

  // 3^{-(2|k|+1)} underflows to zero long before |k| = 400
  auto ninths = std::make_shared<std::vector<double>>(400);
  for (std::size_t i = 0; i < ninths->size(); ++i) (*ninths)[i] = gs * std::pow(3.0, -(2.0 * static_cast<double>(i) + 1.0));
  IndexedScalar gamma = [ninths](long k) {
    const auto i = static_cast<std::size_t>(std::abs(k));
    return i < ninths->size() ? (*ninths)[i] : 0.0;
  };
  IndexedScalar rho = [rs](long k) { return std::ldexp(rs, -static_cast<int>(std::min(std::abs(k), 2000L))); };
  const NormSpec xs = sys.space.x_norm, ys = sys.space.y_norm;
  const Vector shift = coupling_shift(dim);
  sys.f.eval = [gamma, rho, xs, ys, shift](long n, const Vector& x, const Vector& y) -> Vector {
    return gamma(n) * block_sigmoid(x - shift, xs) + rho(n) * block_sigmoid(y, ys);
  };
  sys.f.jac_x = [gamma, xs, shift](long n, const Vector& x, const Vector&) -> Matrix {
    return gamma(n) * block_sigmoid_jacobian(x - shift, xs);
  };
  sys.f.jac_y = [rho, ys](long n, const Vector&, const Vector& y) -> Matrix {
    return rho(n) * block_sigmoid_jacobian(y, ys);
  };
  sys.f.mu = [gamma, rho](long n) { return gamma(n) + rho(n); };
  sys.f.gamma = gamma;
  sys.f.rho = rho;

  sys.g.eval = [rot](long, const Vector& y) -> Vector { return rot * y; };
  sys.g.eval_inv = [rot_inv](long, const Vector& y) -> Vector { return rot_inv * y; };
  sys.g.jac = [rot](long, const Vector&) -> Matrix { return rot; };
  sys.g.tau = [](long) { return 1.0; };
  sys.g.sigma = [](long) { return 1.0; };

  // G(m,k) = Id for k <= m and 0 otherwise.  1/(1 - gamma_j) <= 3/2, so
  // gamma_k C_{k,n} <= gs/3 (3/2)^{|n|} 6^{-|k|} and
  // gamma_k M_{k,n} + rho_k D_{k,n} <= (gs/3 (5/2)^{|n|} + rs) 2^{-|k|}.
  sys.envelopes.basic_mu = [gs, rs](long) { return single(gs / 3.0 + rs, 0.5, 1); };
  sys.envelopes.basic_gamma = [gs](long) { return single(gs / 3.0, 1.0 / 9.0, 1); };
  sys.envelopes.hbar_terms = [gs, rs](long) { return single(gs / 3.0 + rs, 0.5, 0); };
  sys.envelopes.k_terms = [gs](long n) {
    return single(gs / 3.0 * std::pow(1.5, static_cast<double>(std::abs(n))), 1.0 / 6.0, 0);
  };
  sys.envelopes.j_terms = [](long) { return single(0.0, 0.5, 0); };
  sys.envelopes.ac9_terms = [gs, rs](long n) {
    return single(gs / 3.0 * std::pow(2.5, static_cast<double>(std::abs(n))) + rs, 0.5, 0);
  };
  return sys;
}

/// Hyperbolic operators with the constant coupling gamma_k = gamma_scale * c.
inline SystemSpec make_emo(const ExampleParams& params) {
  params.validate();
  const int half = detail::half_dim(params, 1);
  const double lambda = params.lambda;
  const double c = params.gamma_scale * params.c;

  SystemSpec sys;
  sys.name = "emo";
  sys.space = SpaceSpec::uniform(2 * half, 0, NormKind::max);
  detail::hyperbolic_operators(sys, half, lambda);
  sys.f = sigmoid_coupling([c](long) { return c; }, sys.space);
  sys.g = DriverSpec::trivial();

  const double r = std::exp(-lambda);
  sys.envelopes.basic_mu = [c, r](long m) { return single(c, r, m); };
  sys.envelopes.basic_gamma = sys.envelopes.basic_mu;
  sys.envelopes.hbar_terms = [c, r](long n) { return single(c, r, n - 1); };
  return sys;
}

inline SystemSpec make_example(const ExampleParams& params) {
  switch (params.variant) {
    case Variant::remm: return make_remm(params);
    case Variant::ex1: return make_ex1(params);
    case Variant::ex2: return make_ex2(params);
    case Variant::end_cfg: return make_end(params);
    default: return make_emo(params);
  }
}

/// A system of the given shape with f == 0, for reduction checks.
inline SystemSpec make_uncoupled(SystemSpec sys) {
  const int dx = sys.dim_x(), dy = sys.dim_y();
  sys.f.eval = [dx](long, const Vector&, const Vector&) -> Vector { return Vector::Zero(dx); };
  sys.f.jac_x = [dx](long, const Vector&, const Vector&) -> Matrix { return Matrix::Zero(dx, dx); };
  sys.f.jac_y = [dx, dy](long, const Vector&, const Vector&) -> Matrix { return Matrix::Zero(dx, dy); };
  sys.f.mu = sys.f.gamma = sys.f.rho = [](long) { return 0.0; };
  sys.envelopes = SeriesEnvelopes{};
  sys.name += "_uncoupled";
  return sys;
}

}  // namespace smoothlin
