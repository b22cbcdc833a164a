#pragma once

#include "smoothlin/examples.hpp"
#include "smoothlin/system.hpp"

#include <cmath>
#include <random>

namespace testutil {

using smoothlin::Matrix;
using smoothlin::Vector;

/// Deterministic pseudo-random invertible dim x dim matrix for index n.
inline Matrix random_invertible(long n, int dim, std::uint64_t salt = 7) {
  std::mt19937_64 rng(static_cast<std::uint64_t>(n + 1000003) * 2654435761ULL + salt);
  std::uniform_real_distribution<double> u(-0.4, 0.4);
  Matrix m = Matrix::Identity(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) m(i, j) += u(rng);
  return m;
}

/// A system with random, well-conditioned A_n (inverse by LU), P_n = diag(1, 0, ...)
/// and f = gamma tanh-type coupling scaled so BC4 holds.
inline smoothlin::SystemSpec random_system(int dim, double gamma = 0.05) {
  smoothlin::SystemSpec sys;
  sys.name = "random";
  sys.space = smoothlin::SpaceSpec::uniform(dim, 0);
  sys.a.eval = [dim](long n) { return random_invertible(n, dim); };
  sys.p.eval = [dim](long) {
    Matrix p = Matrix::Zero(dim, dim);
    p(0, 0) = 1.0;
    return p;
  };
  sys.f = smoothlin::sigmoid_coupling([gamma](long) { return gamma; }, sys.space);
  sys.g = smoothlin::DriverSpec::trivial();
  return sys;
}

inline Vector random_vector(std::mt19937_64& rng, int dim, double extent = 1.0) {
  std::uniform_real_distribution<double> u(-extent, extent);
  Vector v(dim);
  for (int i = 0; i < dim; ++i) v(i) = u(rng);
  return v;
}

inline double max_abs(const Matrix& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

}  // namespace testutil
