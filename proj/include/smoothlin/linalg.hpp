#pragma once

// Dense linear algebra aliases, norms on X and Y, and the library's error types.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace smoothlin {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

enum class NormKind { max, euclidean };

inline const char* to_string(NormKind kind) { return kind == NormKind::max ? "max" : "euclidean"; }

/// Norm on R^d: the maximum over consecutive blocks of the chosen block norm.
/// block == 0 means the whole vector is a single block.
struct NormSpec {
  NormKind kind = NormKind::max;
  int block = 0;
};

// ---------------------------------------------------------------------------
// errors

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SingularOperator : public Error {
 public:
  SingularOperator(long index, const std::string& what)
      : Error("singular operator at index " + std::to_string(index) + ": " + what), index_(index) {}
  long index() const { return index_; }

 private:
  long index_;
};

class ContractionViolation : public Error {
 public:
  ContractionViolation(long index, double rate, const std::string& what)
      : Error("contraction violated at index " + std::to_string(index) + " (rate " +
              std::to_string(rate) + "): " + what),
        index_(index),
        rate_(rate) {}
  long index() const { return index_; }
  double rate() const { return rate_; }

 private:
  long index_;
  double rate_;
};

class NoConvergence : public Error {
 public:
  using Error::Error;
};

class WindowExhausted : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// ---------------------------------------------------------------------------
// norms

namespace detail {

inline int block_size(const NormSpec& spec, Eigen::Index dim) {
  if (spec.kind == NormKind::max) return 1;
  if (spec.block <= 0 || spec.block >= dim) return static_cast<int>(std::max<Eigen::Index>(dim, 1));
  return spec.block;
}

// Exact induced norm of a single block mapping (domain kind) -> (range kind).
template <typename Derived>
double block_operator_norm(const Eigen::MatrixBase<Derived>& m, NormKind range, NormKind domain) {
  if (m.size() == 0) return 0.0;
  if (range == NormKind::max && domain == NormKind::max)
    return m.cwiseAbs().rowwise().sum().maxCoeff();
  if (range == NormKind::euclidean && domain == NormKind::euclidean) {
    Eigen::JacobiSVD<Matrix> svd(m.eval());
    return svd.singularValues()(0);
  }
  if (range == NormKind::max)  // euclidean -> max: largest row 2-norm
    return m.rowwise().norm().maxCoeff();
  // max -> euclidean: upper bound by the column 2-norms
  return m.colwise().norm().sum();
}

}  // namespace detail

inline double vector_norm(const Vector& v, const NormSpec& spec) {
  if (v.size() == 0) return 0.0;
  if (spec.kind == NormKind::max) return v.cwiseAbs().maxCoeff();
  const int b = detail::block_size(spec, v.size());
  double out = 0.0;
  for (Eigen::Index start = 0; start < v.size(); start += b) {
    const Eigen::Index len = std::min<Eigen::Index>(b, v.size() - start);
    out = std::max(out, v.segment(start, len).norm());
  }
  return out;
}

/// Induced operator norm of mat : (R^cols, domain) -> (R^rows, range).
///
/// Exact when both sides are single-block norms of one kind and for block-diagonal
/// matrices; otherwise the block row-sum bound max_i sum_j |M_ij|, which is an upper bound.
inline double operator_norm(const Matrix& mat, const NormSpec& range, const NormSpec& domain) {
  if (mat.size() == 0) return 0.0;
  if (range.kind == NormKind::max && domain.kind == NormKind::max)
    return mat.cwiseAbs().rowwise().sum().maxCoeff();
  const int rb = detail::block_size(range, mat.rows());
  const int cb = detail::block_size(domain, mat.cols());
  double out = 0.0;
  for (Eigen::Index r = 0; r < mat.rows(); r += rb) {
    const Eigen::Index rl = std::min<Eigen::Index>(rb, mat.rows() - r);
    double row_sum = 0.0;
    for (Eigen::Index c = 0; c < mat.cols(); c += cb) {
      const Eigen::Index cl = std::min<Eigen::Index>(cb, mat.cols() - c);
      auto blk = mat.block(r, c, rl, cl);
      if (blk.cwiseAbs().maxCoeff() == 0.0) continue;
      row_sum += detail::block_operator_norm(blk, range.kind, domain.kind);
    }
    out = std::max(out, row_sum);
  }
  return out;
}

inline double operator_norm(const Matrix& mat, const NormSpec& spec) {
  return operator_norm(mat, spec, spec);
}

/// Plain induced norm: maximum absolute row sum for max, largest singular value for euclidean.
inline double operator_norm(const Matrix& mat, NormKind kind) {
  return operator_norm(mat, NormSpec{kind, 0}, NormSpec{kind, 0});
}

}  // namespace smoothlin
