#include "helpers.hpp"

#include "smoothlin/examples.hpp"
#include "smoothlin/hypotheses.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace smoothlin;

namespace {

SystemSpec example(Variant v, double gs = 0.9) {
  ExampleParams p;
  p.variant = v;
  p.gamma_scale = gs;
  return make_example(p);
}

SystemSpec emo(double c, double lambda) {
  ExampleParams p;
  p.variant = Variant::emo;
  p.c = c;
  p.lambda = lambda;
  p.gamma_scale = 1.0;
  return make_emo(p);
}

// A = Id, P = 0, f = 0 with declared rho constant, driver y -> 2y
SystemSpec doubling_driver(double rho) {
  SystemSpec sys;
  sys.name = "doubling";
  sys.space = SpaceSpec::uniform(2, 1);
  sys.a.eval = [](long) { return Matrix::Identity(2, 2); };
  sys.p.eval = [](long) { return Matrix::Zero(2, 2); };
  sys.f.eval = [](long, const Vector&, const Vector&) -> Vector { return Vector::Zero(2); };
  sys.f.jac_x = [](long, const Vector&, const Vector&) -> Matrix { return Matrix::Zero(2, 2); };
  sys.f.jac_y = [](long, const Vector&, const Vector&) -> Matrix { return Matrix::Zero(2, 1); };
  sys.f.mu = sys.f.gamma = [](long) { return 0.0; };
  sys.f.rho = [rho](long) { return rho; };
  sys.g.eval = [](long, const Vector& y) -> Vector { return 2.0 * y; };
  sys.g.eval_inv = [](long, const Vector& y) -> Vector { return 0.5 * y; };
  sys.g.jac = [](long, const Vector&) -> Matrix { return Matrix::Identity(1, 1) * 2.0; };
  sys.g.tau = [](long) { return 2.0; };
  sys.g.sigma = [](long) { return 0.5; };
  return sys;
}

}  // namespace

TEST(Basic, ZeroCouplingGivesZeros) {
  const auto sys = make_uncoupled(example(Variant::ex1));
  const auto rep = check_basic(sys, CheckWindow{-3, 3, 20}, ProbeSpec{50, 2.0, 1});
  EXPECT_TRUE(rep.bc2.converged());
  EXPECT_TRUE(rep.bc3.converged());
  EXPECT_EQ(rep.bc2.partial_sum, 0.0);
  EXPECT_EQ(rep.bc3.partial_sum, 0.0);
  EXPECT_EQ(*rep.bc2.tail_bound, 0.0);
  EXPECT_TRUE(rep.basic_ok());
  const auto first = check_advanced_first(sys, 0, 20);
  EXPECT_EQ(first.k_series.partial_sum, 0.0);
  EXPECT_EQ(first.j_series.partial_sum, 0.0);
  EXPECT_TRUE(first.ac3);
}

TEST(Basic, Ex1QBelowOne) {
  const auto sys = example(Variant::ex1, 1.0);
  const auto rep = check_basic(sys, CheckWindow{-10, 10, 40}, ProbeSpec{200, 2.0, 3});
  ASSERT_TRUE(rep.bc3.converged());
  EXPECT_LT(rep.bc3.upper(), 1.0);
  // sum_k |G(m,k)| gamma_{k-1} <= sum_k gamma_k < 1/(e^lambda M) since |G| <= 1
  const double M = ex1_M(std::log(2.0));
  EXPECT_LT(rep.bc3.upper(), 1.0 / (2.0 * M));
  EXPECT_TRUE(rep.sampled.bc1_ok);
  EXPECT_EQ(rep.sampled.violations, 0);
  EXPECT_TRUE(rep.bc4.ok);
  EXPECT_DOUBLE_EQ(rep.weight_norm_sup, 1.0);
}

TEST(Basic, WrongEnvelopeIsSampled) {
  SystemSpec sys = example(Variant::ex1);
  sys.f.gamma = [](long) { return 1e-9; };
  const auto rep = check_basic(sys, CheckWindow{-3, 3, 10}, ProbeSpec{50, 2.0, 1});
  EXPECT_FALSE(rep.sampled.bc1_ok);
  EXPECT_GT(rep.sampled.violations, 0);
  EXPECT_FALSE(rep.sampled.first_violation.empty());
}

TEST(Basic, Bc4NamesWorstIndex) {
  SystemSpec sys = example(Variant::ex1);
  auto gamma = sys.f.gamma;
  sys.f.gamma = [gamma](long k) { return k == 4 ? 0.9 : gamma(k); };
  const auto rep = check_basic(sys, CheckWindow{-2, 2, 5}, ProbeSpec{0, 1.0, 0});
  EXPECT_FALSE(rep.bc4.ok);
  EXPECT_EQ(rep.bc4.worst_index, 4);
  EXPECT_NEAR(rep.bc4.worst_value, 2 * 0.9, 1e-12);
  const auto full = certify(sys, CheckWindow{-2, 2, 5}, ProbeSpec{0, 1.0, 0});
  EXPECT_FALSE(full.pass());
  EXPECT_FALSE(full.all_ac3());
}

TEST(Advanced, EmoJDivergentEverywhere) {
  for (double c : {1e-3, 1e-2, 0.1})
    for (double lambda : {0.1, 1.0}) {
      const auto sys = emo(c, lambda);
      for (long n = -5; n <= 5; ++n) {
        const auto first = check_advanced_first(sys, n, 50);
        EXPECT_EQ(first.j_series.verdict, Verdict::divergent) << c << ' ' << lambda << ' ' << n;
        EXPECT_FALSE(first.j_series.witness.empty());
        EXPECT_FALSE(first.ac3);
        // each J term is at least c e^{-lambda}
        EXPECT_GE(first.j_series.partial_sum, 50 * c * std::exp(-lambda) * (1 - 1e-12));
      }
    }
}

TEST(Advanced, Ex2ChainBound) {
  const auto sys = example(Variant::ex2, 1.0);
  const double T = 2.0, M = ex2_M();
  double sum_gamma = 0.0;
  for (long k = -400; k <= 400; ++k) sum_gamma += sys.f.gamma(k);
  ASSERT_LT(T * M * sum_gamma, 1.0);
  for (long n = -10; n <= 10; ++n) {
    const auto first = check_advanced_first(sys, n, 40);
    ASSERT_TRUE(first.ac3) << n;
    EXPECT_LE(first.k_series.partial_sum + first.j_series.partial_sum + first.diagonal, T * M * sum_gamma) << n;
    EXPECT_LE(first.contraction_upper(), T * M * sum_gamma * (1 + 1e-9)) << n;
  }
}

TEST(Advanced, RemmFailsAc3AwayFromOrigin) {
  const auto sys = example(Variant::remm);
  EXPECT_TRUE(check_advanced_first(sys, 0, 40).ac3);
  const auto far = check_advanced_first(sys, 6, 40);
  EXPECT_FALSE(far.ac3);
  EXPECT_GT(far.k_series.partial_sum, 1.0);
}

TEST(Advanced, NestedWindowTailsDominate) {
  for (auto v : {Variant::ex1, Variant::ex2, Variant::end_cfg, Variant::remm}) {
    const auto sys = example(v);
    for (long n : {-4L, 0L, 3L}) {
      const auto small = check_advanced_first(sys, n, 10);
      const auto big = check_advanced_first(sys, n, 40);
      ASSERT_TRUE(small.k_series.converged() && small.j_series.converged()) << to_string(v);
      EXPECT_LE(big.k_series.partial_sum - small.k_series.partial_sum, *small.k_series.tail_bound * (1 + 1e-9) + 1e-300);
      EXPECT_LE(big.j_series.partial_sum - small.j_series.partial_sum, *small.j_series.tail_bound * (1 + 1e-9) + 1e-300);
      const auto s9 = check_advanced_second(sys, n, 10);
      const auto b9 = check_advanced_second(sys, n, 40);
      ASSERT_TRUE(s9.converged());
      EXPECT_LE(b9.partial_sum - s9.partial_sum, *s9.tail_bound * (1 + 1e-9) + 1e-300);
    }
    const auto bs = basic_sums(sys, CheckWindow{-3, 3, 10});
    const auto bb = basic_sums(sys, CheckWindow{-3, 3, 40});
    ASSERT_TRUE(bs.q_estimate.converged());
    EXPECT_LE(bb.q_estimate.partial_sum - bs.q_estimate.partial_sum, *bs.q_estimate.tail_bound * (1 + 1e-9) + 1e-300);
    EXPECT_LE(bb.n_estimate.partial_sum - bs.n_estimate.partial_sum, *bs.n_estimate.tail_bound * (1 + 1e-9) + 1e-300);
  }
}

TEST(Advanced, WindowMonotonicity) {
  const auto sys = emo(1e-2, 0.5);
  double prev = -1.0;
  for (long w = 15; w <= 60; w += 15) {
    const auto first = check_advanced_first(sys, 0, w);
    EXPECT_GE(first.j_series.partial_sum, prev);
    EXPECT_EQ(first.j_series.verdict, Verdict::divergent);
    prev = first.j_series.partial_sum;
  }
  const auto ex = example(Variant::ex1);
  prev = -1.0;
  for (long w = 5; w <= 40; w += 5) {
    const auto s = check_advanced_second(ex, 2, w);
    EXPECT_GE(s.partial_sum, prev);
    EXPECT_TRUE(s.converged());
    prev = s.partial_sum;
  }
}

TEST(Ac9, ZeroCouplingIsZero) {
  ExampleParams p;
  p.variant = Variant::end_cfg;
  const auto sys = make_uncoupled(make_end(p));
  const auto est = check_advanced_second(sys, 0, 20);
  EXPECT_TRUE(est.converged());
  EXPECT_EQ(est.partial_sum, 0.0);
}

TEST(Ac9, EndConfigurationConverges) {
  const auto sys = example(Variant::end_cfg, 1.0);
  for (long n = -5; n <= 5; ++n) {
    const auto est = check_advanced_second(sys, n, 40);
    EXPECT_TRUE(est.converged()) << n;
    EXPECT_TRUE(std::isfinite(est.upper()));
  }
  const auto rep = certify(sys, CheckWindow{-5, 5, 40}, ProbeSpec{200, 2.0, 9});
  EXPECT_TRUE(rep.pass());
  EXPECT_TRUE(rep.sampled.ac4_ok);
  EXPECT_TRUE(rep.sampled.ac5_ok);
}

TEST(Ac9, DoublingDriverDiverges) {
  const auto sys = doubling_driver(0.01);
  const auto est = check_advanced_second(sys, 0, 40);
  EXPECT_EQ(est.verdict, Verdict::divergent);
  // by hand: the k = n + 10 term is rho 2^{10}
  EXPECT_GE(est.partial_sum, 0.01 * std::ldexp(1.0, 10));
}

TEST(Ac6, DetectsViolation) {
  auto sys = doubling_driver(1.0);
  EXPECT_TRUE(check_ac6(sys, -5, 5).ok);
  sys.f.rho = [](long j) { return j == 2 ? 3.0 : 1.0; };
  const auto chk = check_ac6(sys, -5, 5);
  EXPECT_FALSE(chk.ok);
  EXPECT_EQ(chk.worst_index, 2);
  EXPECT_DOUBLE_EQ(chk.worst_value, 1.5);
}

TEST(Certify, BuiltinVerdicts) {
  const CheckWindow w{-10, 10, 40};
  for (auto v : {Variant::ex1, Variant::ex2, Variant::end_cfg}) {
    const auto rep = certify(example(v), w, ProbeSpec{200, 2.0, 4});
    EXPECT_TRUE(rep.pass()) << to_string(v);
    EXPECT_EQ(rep.ac2.size(), 21u);
  }
  EXPECT_FALSE(certify(example(Variant::remm), w, ProbeSpec{200, 2.0, 4}).pass());
  const auto e = certify(example(Variant::emo), w, ProbeSpec{200, 2.0, 4});
  EXPECT_FALSE(e.pass());
  for (const auto& [n, first] : e.ac2) EXPECT_EQ(first.j_series.verdict, Verdict::divergent) << n;
}
