#include "helpers.hpp"

#include "smoothlin/derivatives.hpp"
#include "smoothlin/examples.hpp"
#include "smoothlin/hypotheses.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace smoothlin;
using testutil::max_abs;

namespace {

SystemSpec example(Variant v, double gs = 0.9) {
  ExampleParams p;
  p.variant = v;
  p.gamma_scale = gs;
  return make_example(p);
}

EngineOptions tight() {
  EngineOptions o;
  o.series_tol = 1e-12;
  o.fp_tol = 1e-13;
  o.max_halfwidth = 200;
  o.solve.fixed_point_tol = 1e-15;
  return o;
}

SolveOptions tight_solve() {
  SolveOptions s;
  s.fixed_point_tol = 1e-15;
  return s;
}

}  // namespace

TEST(FiniteDifference, LinearMapIsExact) {
  Matrix a(2, 3);
  a << 1, -2, 0.5, 3, 0.25, -1;
  Vector p(3);
  p << 0.3, -0.7, 2.0;
  const Matrix fd = fd_jacobian([&](const Vector& v) -> Vector { return a * v; }, p, 1e-5);
  EXPECT_LT(max_abs(fd - a), 1e-10);
}

TEST(FiniteDifference, ScalarSquare) {
  Vector p(1);
  p << 3.0;
  const Matrix fd = fd_jacobian([](const Vector& v) -> Vector { return v.cwiseProduct(v); }, p, 1e-6);
  EXPECT_NEAR(fd(0, 0), 6.0, 1e-6);
  EXPECT_THROW(fd_jacobian([](const Vector& v) -> Vector { return v; }, p, 0.0), ConfigError);
}

TEST(FiniteDifference, RelativeErrorDefinition) {
  Matrix a(1, 2), b(1, 2);
  a << 3, 4;
  b << 3, 4.5;
  EXPECT_DOUBLE_EQ(relative_error(a, b), 0.5 / 5.0);
  Matrix s(1, 1), t(1, 1);
  s << 0.1;
  t << 0.2;
  EXPECT_DOUBLE_EQ(relative_error(s, t), 0.1);
}

TEST(FiniteDifference, RichardsonFallback) {
  // exp has large third derivative at 6; a coarse step misses, extrapolation recovers
  Vector p(1);
  p << 6.0;
  Matrix exact(1, 1);
  exact << std::exp(6.0);
  auto fun = [](const Vector& v) -> Vector { return v.array().exp().matrix(); };
  const auto plain = check_jacobian("exp", exact, fun, p, 1e-2, 1e300);
  const auto rep = check_jacobian("exp", exact, fun, p, 1e-2, 1e-8);
  EXPECT_FALSE(plain.richardson);
  EXPECT_TRUE(rep.richardson);
  EXPECT_LT(rep.rel_error, plain.rel_error / 10);
}

TEST(SolutionJacobian, DiagonalCases) {
  const auto sys = example(Variant::end_cfg);
  Vector xi(2), eta(2);
  xi << 0.2, -0.4;
  eta << 0.5, 0.1;
  EXPECT_LT(max_abs(d_x2_dxi(sys, 3, 3, xi, eta) - Matrix::Identity(2, 2)), 1e-15);
  EXPECT_LT(max_abs(d_x2_deta(sys, 3, 3, xi, eta)), 1e-15);
  EXPECT_LT(max_abs(d_y_deta(sys, 3, 3, eta) - Matrix::Identity(2, 2)), 1e-15);
}

TEST(SolutionJacobian, LinearCaseIsTransition) {
  const auto sys = make_uncoupled(testutil::random_system(3));
  std::mt19937_64 rng(1);
  const Vector xi = testutil::random_vector(rng, 3);
  for (long k : {-4L, 0L, 2L, 6L})
    EXPECT_LT(max_abs(d_x2_dxi(sys, k, 1, xi, sys.zero_y()) - transition(sys, k, 1)), 1e-10) << k;
}

TEST(SolutionJacobian, RhoZeroGivesNoEtaDependence) {
  ExampleParams p;
  p.variant = Variant::end_cfg;
  p.rho_scale = 0.0;
  const auto sys = make_end(p);
  Vector xi(2), eta(2);
  xi << 0.2, -0.4;
  eta << 0.5, 0.1;
  for (long k : {-3L, 4L}) EXPECT_EQ(max_abs(d_x2_deta(sys, k, 0, xi, eta)), 0.0);
}

TEST(SolutionJacobian, MatchesFiniteDifferences) {
  std::mt19937_64 rng(2);
  const auto rnd = testutil::random_system(3, 0.2);
  const auto end = example(Variant::end_cfg, 1.0);
  for (int i = 0; i < 20; ++i) {
    const long n = i % 5 - 2, k = n + (i % 9) - 4;
    const Vector xi = testutil::random_vector(rng, 3);
    auto fx = [&](const Vector& v) -> Vector { return evolve_coupled(rnd, k, n, v, rnd.zero_y(), tight_solve()); };
    EXPECT_LE(check_jacobian("x", d_x2_dxi(rnd, k, n, xi, rnd.zero_y(), tight_solve()), fx, xi).rel_error, 1e-5);

    const Vector x2 = testutil::random_vector(rng, 2), eta = testutil::random_vector(rng, 2);
    auto gx = [&](const Vector& v) -> Vector { return evolve_coupled(end, k, n, v, eta, tight_solve()); };
    auto ge = [&](const Vector& v) -> Vector { return evolve_coupled(end, k, n, x2, v, tight_solve()); };
    auto gy = [&](const Vector& v) -> Vector { return evolve_driver(end, k, n, v); };
    EXPECT_LE(check_jacobian("x", d_x2_dxi(end, k, n, x2, eta, tight_solve()), gx, x2).rel_error, 1e-5);
    EXPECT_LE(check_jacobian("e", d_x2_deta(end, k, n, x2, eta, tight_solve()), ge, eta).rel_error, 1e-5);
    EXPECT_LE(check_jacobian("y", d_y_deta(end, k, n, eta), gy, eta).rel_error, 1e-5);
  }
}

TEST(SolutionJacobian, NormsBoundedByLipschitzProducts) {
  std::mt19937_64 rng(3);
  for (auto v : {Variant::ex1, Variant::ex2, Variant::end_cfg}) {
    const auto sys = example(v);
    for (int i = 0; i < 30; ++i) {
      const long n = i % 7 - 3, k = n + i % 13 - 6;
      const Vector xi = testutil::random_vector(rng, sys.dim_x(), 2.0);
      const Vector eta = testutil::random_vector(rng, sys.dim_y(), 2.0);
      EXPECT_LE(sys.x_op_norm(d_x2_dxi(sys, k, n, xi, eta)), lip_C(sys, k, n) * (1 + 1e-12)) << to_string(v);
      if (sys.dim_y() == 0) continue;
      EXPECT_LE(sys.xy_op_norm(d_x2_deta(sys, k, n, xi, eta)), lip_M(sys, k, n) * (1 + 1e-12));
      EXPECT_LE(sys.y_op_norm(d_y_deta(sys, k, n, eta)), lip_D(sys, k, n) * (1 + 1e-12));
    }
  }
}

TEST(SolutionJacobian, CouplingDerivativesBoundedOnTrajectories) {
  const auto sys = example(Variant::end_cfg, 1.0);
  std::mt19937_64 rng(4);
  for (int i = 0; i < 10; ++i) {
    const Vector xi = testutil::random_vector(rng, 2, 3.0), eta = testutil::random_vector(rng, 2, 3.0);
    const auto tr = coupled_trajectory(sys, 0, -8, 8, xi, eta);
    for (long k = -8; k <= 8; ++k) {
      EXPECT_LE(sys.x_op_norm(sys.f.jac_x(k, tr.x_at(k), tr.y_at(k))), sys.f.gamma(k) * (1 + 1e-12));
      EXPECT_LE(sys.xy_op_norm(sys.f.jac_y(k, tr.x_at(k), tr.y_at(k))), sys.f.rho(k) * (1 + 1e-12));
    }
  }
}

TEST(SolutionJacobian, BackwardIdentity) {
  const auto sys = testutil::random_system(3, 0.25);
  std::mt19937_64 rng(5);
  for (int i = 0; i < 30; ++i) {
    const long j = i % 7 - 3;
    const Vector xi = testutil::random_vector(rng, 3, 2.0);
    const Vector t = backward_step(sys, j, xi, sys.zero_y(), tight_solve());
    const Matrix L = backward_jacobian(sys, j, t, sys.zero_y());
    const Matrix S = sys.A(j) + sys.f.jac_x(j, t, sys.zero_y());
    EXPECT_LT(max_abs(S * L - Matrix::Identity(3, 3)), 1e-10);
  }
}

TEST(SeriesJacobian, ZeroCoupling) {
  const ConjugacyEngine engine(make_uncoupled(example(Variant::end_cfg)));
  Vector xi(2), eta(2);
  xi << 0.1, 0.2;
  eta << -0.3, 0.4;
  EXPECT_EQ(max_abs(d_barh_dxi(engine, 0, xi, eta)), 0.0);
  EXPECT_EQ(max_abs(d_barh_deta(engine, 0, xi, eta)), 0.0);
  EXPECT_EQ(max_abs(d_h_dxi(engine, 0, xi, eta)), 0.0);
  EXPECT_EQ(max_abs(d_h_deta(engine, 0, xi, eta)), 0.0);
}

TEST(SeriesJacobian, EtaDerivativeOfTrivialDriverIsEmpty) {
  const ConjugacyEngine engine(example(Variant::ex1));
  const Matrix d = d_barh_deta(engine, 0, Vector::Ones(2), Vector());
  EXPECT_EQ(d.rows(), 2);
  EXPECT_EQ(d.cols(), 0);
}

TEST(SeriesJacobian, MatchesFiniteDifferences) {
  std::mt19937_64 rng(6);
  for (auto v : {Variant::ex1, Variant::ex2, Variant::end_cfg}) {
    const ConjugacyEngine engine(example(v, 1.0), tight());
    const auto& sys = engine.system();
    for (long n : {-5L, 0L, 5L}) {
      const Vector xi = testutil::random_vector(rng, sys.dim_x());
      const Vector eta = testutil::random_vector(rng, sys.dim_y());
      auto bx = [&](const Vector& p) -> Vector { return bar_h(engine, n, p, eta); };
      const auto rx = check_jacobian("bar_h/xi", d_barh_dxi(engine, n, xi, eta), bx, xi);
      EXPECT_LE(rx.rel_error, 1e-5) << to_string(v) << ' ' << n;
      auto hx = [&](const Vector& p) -> Vector { return h(engine, n, p, eta); };
      EXPECT_LE(check_jacobian("h/xi", d_h_dxi(engine, n, xi, eta), hx, xi).rel_error, 1e-4);
      if (sys.dim_y() == 0) continue;
      auto be = [&](const Vector& p) -> Vector { return bar_h(engine, n, xi, p); };
      EXPECT_LE(check_jacobian("bar_h/eta", d_barh_deta(engine, n, xi, eta), be, eta).rel_error, 1e-5);
      auto he = [&](const Vector& p) -> Vector { return h(engine, n, xi, p); };
      EXPECT_LE(check_jacobian("h/eta", d_h_deta(engine, n, xi, eta), he, eta).rel_error, 1e-4);
    }
  }
}

TEST(SeriesJacobian, NormBounds) {
  std::mt19937_64 rng(7);
  for (auto v : {Variant::ex1, Variant::ex2, Variant::end_cfg}) {
    const ConjugacyEngine engine(example(v, 1.0));
    const auto& sys = engine.system();
    for (long n = -4; n <= 4; n += 2) {
      const double ac9 = check_advanced_second(sys, n, 40).upper();
      for (int i = 0; i < 5; ++i) {
        const Vector xi = testutil::random_vector(rng, sys.dim_x(), 3.0);
        const Vector eta = testutil::random_vector(rng, sys.dim_y(), 3.0);
        const double b = sys.x_op_norm(d_barh_dxi(engine, n, xi, eta));
        EXPECT_LE(b, engine.contraction_estimate(n)) << to_string(v) << ' ' << n;
        EXPECT_LT(b, 1.0);
        if (sys.dim_y() > 0) EXPECT_LE(sys.xy_op_norm(d_barh_deta(engine, n, xi, eta)), ac9);
      }
    }
  }
}

TEST(SeriesJacobian, TailBoundsReported) {
  const ConjugacyEngine engine(example(Variant::end_cfg), tight());
  Vector xi(2), eta(2);
  xi << 0.3, 0.3;
  eta << 0.1, -0.2;
  const auto dx = d_barh_dxi_detailed(engine, 0, xi, eta);
  const auto de = d_barh_deta_detailed(engine, 0, xi, eta);
  EXPECT_TRUE(std::isfinite(dx.tail_bound));
  EXPECT_TRUE(std::isfinite(de.tail_bound));
  EXPECT_LE(dx.tail_bound, 1e-6);
  EXPECT_LE(de.tail_bound, 1e-6);
}

TEST(Resolvent, InverseConsistency) {
  std::mt19937_64 rng(8);
  for (auto v : {Variant::ex1, Variant::ex2, Variant::end_cfg}) {
    const ConjugacyEngine engine(example(v, 1.0));
    const auto& sys = engine.system();
    for (long n : {-3L, 0L, 3L}) {
      const Vector xi = testutil::random_vector(rng, sys.dim_x());
      const Vector eta = testutil::random_vector(rng, sys.dim_y());
      const auto r = d_h_dxi_detailed(engine, n, xi, eta);
      const Matrix id = Matrix::Identity(sys.dim_x(), sys.dim_x());
      EXPECT_LT(max_abs((id + r.value) * (id + r.barh_du) - id), 1e-8) << to_string(v);
      EXPECT_LT(max_abs((id + r.barh_du) * (id + r.value) - id), 1e-8) << to_string(v);
    }
  }
}
