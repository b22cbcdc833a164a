#pragma once

// Coupled system x_{n+1} = A_n x_n + f_n(x_n, y_n), y_{n+1} = g_n(y_n), its
// transition operators and the Green kernel built from the weights P_n.

#include "smoothlin/linalg.hpp"
#include "smoothlin/series.hpp"

#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <unordered_map>
#include <vector>

namespace smoothlin {

/// X = R^dim_x and Y = R^dim_y (dim_y == 0 is the trivial space).
struct SpaceSpec {
  int dim_x = 1;
  int dim_y = 0;
  NormSpec x_norm{};
  NormSpec y_norm{};

  static SpaceSpec uniform(int dim_x, int dim_y, NormKind kind = NormKind::max) {
    return SpaceSpec{dim_x, dim_y, NormSpec{kind, 0}, NormSpec{kind, 0}};
  }
};

using IndexedMatrix = std::function<Matrix(long)>;
using IndexedScalar = std::function<double(long)>;

struct OperatorSeq {
  IndexedMatrix eval;
  IndexedMatrix eval_inv;        // optional; LU otherwise
  IndexedScalar norm_bound;      // optional closed form of |A_n|
  IndexedScalar inv_norm_bound;  // optional closed form of |A_n^{-1}|
};

/// Weights P_n; they need not be projections.
struct WeightSeq {
  IndexedMatrix eval;
};

struct CouplingSpec {
  std::function<Vector(long, const Vector&, const Vector&)> eval;
  std::function<Matrix(long, const Vector&, const Vector&)> jac_x;
  std::function<Matrix(long, const Vector&, const Vector&)> jac_y;
  IndexedScalar mu;
  IndexedScalar gamma;
  IndexedScalar rho;
};

struct DriverSpec {
  std::function<Vector(long, const Vector&)> eval;
  std::function<Vector(long, const Vector&)> eval_inv;
  std::function<Matrix(long, const Vector&)> jac;
  IndexedScalar tau;
  IndexedScalar sigma;

  /// The only driver on the trivial space Y = {0}.
  static DriverSpec trivial() {
    DriverSpec g;
    g.eval = [](long, const Vector& y) { return y; };
    g.eval_inv = [](long, const Vector& y) { return y; };
    g.jac = [](long, const Vector& y) { return Matrix::Identity(y.size(), y.size()); };
    g.tau = [](long) { return 0.0; };
    g.sigma = [](long) { return 0.0; };
    return g;
  }
};

/// Closed-form geometric envelopes for the summands of the series used by the
/// hypothesis checks and the conjugacy.  Each callback receives the fixed outer
/// index (m or n) and returns envelopes in the summation index; an empty
/// callback or empty set means "no closed form, extrapolate".
struct SeriesEnvelopes {
  using Source = std::function<EnvelopeSet(long)>;
  Source basic_mu;     // k -> |G(m,k)| mu_{k-1}
  Source basic_gamma;  // k -> |G(m,k)| gamma_{k-1}
  Source k_terms;      // k < n -> |G(n,k+1)| gamma_k C_{k,n}
  Source j_terms;      // k > n -> |G(n,k+1)| gamma_k C_{k,n}
  Source ac9_terms;    // k -> |G(n,k+1)| (gamma_k M_{k,n} + rho_k D_{k,n})
  Source hbar_terms;   // k -> |G(n,k+1)| mu_k

  static EnvelopeSet get(const Source& src, long index) { return src ? src(index) : EnvelopeSet{}; }
};

namespace detail {

struct OperatorCache {
  std::shared_mutex mu;
  std::unordered_map<long, Matrix> a, a_inv, p;
  std::unordered_map<long, double> a_norm, a_inv_norm;
};

template <typename Map, typename Make>
const typename Map::mapped_type& memo(std::shared_mutex& mu, Map& map, long key, Make&& make) {
  {
    std::shared_lock lock(mu);
    if (auto it = map.find(key); it != map.end()) return it->second;
  }
  auto value = make();
  std::unique_lock lock(mu);
  return map.try_emplace(key, std::move(value)).first->second;
}

}  // namespace detail

class SystemSpec {
 public:
  SpaceSpec space;
  OperatorSeq a;
  WeightSeq p;
  CouplingSpec f;
  DriverSpec g;
  SeriesEnvelopes envelopes;
  std::string name = "custom";

  SystemSpec() : cache_(std::make_shared<detail::OperatorCache>()) {}

  int dim_x() const { return space.dim_x; }
  int dim_y() const { return space.dim_y; }

  const Matrix& A(long n) const {
    return detail::memo(cache_->mu, cache_->a, n, [&] {
      Matrix m = a.eval(n);
      if (m.rows() != dim_x() || m.cols() != dim_x())
        throw ConfigError("A_" + std::to_string(n) + " has the wrong shape");
      return m;
    });
  }

  /// A_n^{-1}, supplied or by LU, checked to reconstruct the identity within 1e-12.
  const Matrix& A_inv(long n) const {
    return detail::memo(cache_->mu, cache_->a_inv, n, [&] {
      const Matrix& fwd = A(n);
      Matrix inv;
      if (a.eval_inv) {
        inv = a.eval_inv(n);
      } else {
        Eigen::FullPivLU<Matrix> lu(fwd);
        if (!lu.isInvertible()) throw SingularOperator(n, "LU factorization is rank deficient");
        inv = lu.inverse();
      }
      const Matrix defect = fwd * inv - Matrix::Identity(dim_x(), dim_x());
      if (!(operator_norm(defect, space.x_norm) <= 1e-12))
        throw SingularOperator(n, "A_n A_n^{-1} differs from the identity by " +
                                      std::to_string(operator_norm(defect, space.x_norm)));
      return inv;
    });
  }

  const Matrix& P(long n) const {
    return detail::memo(cache_->mu, cache_->p, n, [&] { return p.eval(n); });
  }

  double norm_A(long n) const {
    return detail::memo(cache_->mu, cache_->a_norm, n, [&] {
      return a.norm_bound ? a.norm_bound(n) : operator_norm(A(n), space.x_norm);
    });
  }

  double norm_A_inv(long n) const {
    return detail::memo(cache_->mu, cache_->a_inv_norm, n, [&] {
      return a.inv_norm_bound ? a.inv_norm_bound(n) : operator_norm(A_inv(n), space.x_norm);
    });
  }

  double x_norm(const Vector& v) const { return vector_norm(v, space.x_norm); }
  double y_norm(const Vector& v) const { return vector_norm(v, space.y_norm); }
  double x_op_norm(const Matrix& m) const { return operator_norm(m, space.x_norm); }
  double y_op_norm(const Matrix& m) const { return operator_norm(m, space.y_norm); }
  /// Norm of an operator Y -> X.
  double xy_op_norm(const Matrix& m) const { return operator_norm(m, space.x_norm, space.y_norm); }

  /// |A_n^{-1}| gamma_n; must stay below one for the backward evolution.
  double backward_rate(long n) const { return norm_A_inv(n) * f.gamma(n); }

  Vector zero_x() const { return Vector::Zero(dim_x()); }
  Vector zero_y() const { return Vector::Zero(dim_y()); }

 private:
  std::shared_ptr<detail::OperatorCache> cache_;
};

/// Transition operator: A_{m-1}...A_n (m > n), Id (m == n), A_m^{-1}...A_{n-1}^{-1} (m < n).
inline Matrix transition(const SystemSpec& sys, long m, long n) {
  Matrix out = Matrix::Identity(sys.dim_x(), sys.dim_x());
  if (m > n) {
    for (long j = n; j < m; ++j) out = sys.A(j) * out;
  } else if (m < n) {
    for (long j = n - 1; j >= m; --j) out = sys.A_inv(j) * out;
  }
  return out;
}

/// Green kernel: transition(m,n) P_n for m >= n, -transition(m,n)(Id - P_n) for m < n.
inline Matrix green(const SystemSpec& sys, long m, long n) {
  const Matrix t = transition(sys, m, n);
  if (m >= n) return t * sys.P(n);
  return -t * (Matrix::Identity(sys.dim_x(), sys.dim_x()) - sys.P(n));
}

inline double green_norm(const SystemSpec& sys, long m, long n) {
  return sys.x_op_norm(green(sys, m, n));
}

/// G(m, k) for k = lo..hi, built incrementally from the diagonal outwards.
inline std::vector<Matrix> green_row(const SystemSpec& sys, long m, long lo, long hi) {
  std::vector<Matrix> out(static_cast<std::size_t>(std::max(hi - lo + 1, 0L)));
  if (out.empty()) return out;
  const Matrix id = Matrix::Identity(sys.dim_x(), sys.dim_x());
  auto put = [&](long k, const Matrix& t) {
    if (k < lo || k > hi) return;
    out[static_cast<std::size_t>(k - lo)] = k <= m ? Matrix(t * sys.P(k)) : Matrix(-t * (id - sys.P(k)));
  };
  // k <= m: transition(m,k) = transition(m,k+1) A_k
  Matrix t = id;
  put(m, t);
  for (long k = m - 1; k >= lo; --k) {
    t = t * sys.A(k);
    put(k, t);
  }
  // k > m: transition(m,k) = transition(m,k-1) A_{k-1}^{-1}
  t = id;
  for (long k = m + 1; k <= hi; ++k) {
    t = t * sys.A_inv(k - 1);
    put(k, t);
  }
  return out;
}

}  // namespace smoothlin
