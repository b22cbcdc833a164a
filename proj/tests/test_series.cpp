#include "smoothlin/series.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

using namespace smoothlin;

namespace {

std::vector<double> window_terms(long lo, long hi, auto&& term) {
  std::vector<double> out;
  for (long k = lo; k <= hi; ++k) out.push_back(term(k));
  return out;
}

}  // namespace

TEST(Envelope, TailsMatchBruteForce) {
  const GeometricEnvelope env{0.7, 0.6, 3};
  for (long hi : {-5L, 0L, 2L, 3L, 8L}) {
    double brute = 0.0;
    for (long k = hi + 1; k < hi + 400; ++k) brute += env.at(k);
    EXPECT_NEAR(env.tail_above(hi), brute, 1e-12) << hi;
  }
  for (long lo : {-4L, 3L, 4L, 10L}) {
    double brute = 0.0;
    for (long k = lo - 1; k > lo - 400; --k) brute += env.at(k);
    EXPECT_NEAR(env.tail_below(lo), brute, 1e-12) << lo;
  }
  EXPECT_EQ(GeometricEnvelope{}.tail_above(0), 0.0);
  EXPECT_TRUE(std::isinf(GeometricEnvelope{1.0, 1.0, 0}.tail_below(0)));
}

TEST(Series, ZeroSeriesConverges) {
  const std::vector<double> zeros(41, 0.0);
  const auto est = summarize_series(-20, zeros, 0, {}, EnvelopeSet{});
  EXPECT_EQ(est.verdict, Verdict::converged);
  EXPECT_EQ(est.partial_sum, 0.0);
  ASSERT_TRUE(est.tail_bound);
  EXPECT_EQ(*est.tail_bound, 0.0);
  EXPECT_EQ(est.k_min, -20);
  EXPECT_EQ(est.k_max, 20);
  EXPECT_EQ(est.terms_inspected, 41);
}

TEST(Series, AnalyticEnvelopeTail) {
  auto term = [](long k) { return 0.3 * std::pow(0.5, std::abs(k)); };
  const auto terms = window_terms(-10, 10, term);
  const auto est = summarize_series(-10, terms, 0, {}, EnvelopeSet{{0.3, 0.5, 0}});
  ASSERT_TRUE(est.converged());
  // oracle: 2 * 0.3 * 0.5^11 / (1 - 0.5)
  EXPECT_NEAR(*est.tail_bound, 2 * 0.3 * std::pow(0.5, 11) / 0.5, 1e-15);
  EXPECT_NEAR(est.upper(), 0.3 * 3.0, 1e-12);
}

TEST(Series, SmallestEnvelopeWins) {
  auto term = [](long k) { return std::pow(0.5, std::abs(k)); };
  const auto terms = window_terms(-10, 10, term);
  const auto est = summarize_series(-10, terms, 0, {}, EnvelopeSet{{10.0, 0.9, 0}, {1.0, 0.5, 0}});
  ASSERT_TRUE(est.converged());
  EXPECT_NEAR(*est.tail_bound, 2 * std::pow(0.5, 11) / 0.5, 1e-15);
}

TEST(Series, RatioExtrapolationDominatesTrueTail) {
  // ratios shrink outward, so the last observed ratio bounds every later one
  auto term = [](long k) {
    const double a = static_cast<double>(std::abs(k));
    return std::pow(0.8, a) * std::exp(-0.001 * a * a);
  };
  const auto terms = window_terms(-30, 30, term);
  const auto est = summarize_series(-30, terms, 0, {}, EnvelopeSet{});
  ASSERT_TRUE(est.converged());
  double true_tail = 0.0;
  for (long k = 31; k < 2000; ++k) true_tail += 2 * term(k);
  EXPECT_GE(*est.tail_bound, true_tail);
  EXPECT_LT(*est.tail_bound, 3 * true_tail);
}

TEST(Series, RatioExtrapolationIsCloseForGrowingRatios) {
  auto term = [](long k) { return std::pow(0.8, std::abs(k)) * (1.0 + 0.1 / (1.0 + std::abs(k))); };
  const auto terms = window_terms(-30, 30, term);
  const auto est = summarize_series(-30, terms, 0, {}, EnvelopeSet{});
  ASSERT_TRUE(est.converged());
  double true_tail = 0.0;
  for (long k = 31; k < 2000; ++k) true_tail += 2 * term(k);
  EXPECT_NEAR(*est.tail_bound / true_tail, 1.0, 1e-3);
}

TEST(Series, ConstantTermsAreDivergent) {
  const std::vector<double> terms(51, 0.01);
  const auto est = summarize_series(-25, terms, 0, {}, EnvelopeSet{});
  EXPECT_EQ(est.verdict, Verdict::divergent);
  EXPECT_FALSE(est.tail_bound);
  EXPECT_FALSE(est.witness.empty());
  EXPECT_TRUE(std::isinf(est.upper()));
}

TEST(Series, WitnessBeatsEnvelope) {
  // a wrong envelope must not hide growing terms
  const auto terms = window_terms(0, 30, [](long k) { return 1.0 + 0.01 * static_cast<double>(k); });
  const auto est = summarize_series(0, terms, 0, {false, true}, EnvelopeSet{{1.0, 0.5, 0}});
  EXPECT_EQ(est.verdict, Verdict::divergent);
}

TEST(Series, ExplosionCap) {
  std::vector<double> terms(21, 0.0);
  terms[10] = 2e6;
  const auto est = summarize_series(-10, terms, 0, {}, EnvelopeSet{});
  EXPECT_EQ(est.verdict, Verdict::divergent);
  EXPECT_NE(est.witness.find("explosion"), std::string::npos);
}

TEST(Series, SlowDecayIsInconclusive) {
  const auto terms = window_terms(-40, 40, [](long k) { return std::pow(0.9995, std::abs(k)); });
  const auto est = summarize_series(-40, terms, 0, {}, EnvelopeSet{});
  EXPECT_EQ(est.verdict, Verdict::inconclusive);
  EXPECT_FALSE(est.tail_bound);
}

TEST(Series, ClosedSideIsIgnored) {
  // growth below the center does not matter when the series stops there
  const auto terms = window_terms(-20, 20, [](long k) { return k < 0 ? 1.0 : std::pow(0.5, k); });
  const auto est = summarize_series(-20, terms, 0, {false, true}, EnvelopeSet{});
  EXPECT_TRUE(est.converged());
  const auto both = summarize_series(-20, terms, 0, {}, EnvelopeSet{});
  EXPECT_EQ(both.verdict, Verdict::divergent);
}

TEST(Series, PerSideEnvelopes) {
  const auto terms = window_terms(-10, 10, [](long k) { return k < 0 ? std::pow(0.5, -k) : std::pow(0.25, k); });
  const auto est = summarize_series(-10, terms, 0, {}, EnvelopeSet{{1.0, 0.5, 0}}, EnvelopeSet{{1.0, 0.25, 0}});
  ASSERT_TRUE(est.converged());
  const double expected = std::pow(0.5, 11) / 0.5 + std::pow(0.25, 11) / 0.75;
  EXPECT_NEAR(*est.tail_bound, expected, 1e-15);
}

TEST(Series, EnlargingWindowIsMonotone) {
  auto term = [](long k) { return std::pow(0.7, std::abs(k - 2)); };
  double prev_sum = -1.0;
  for (long w = 5; w <= 40; w += 5) {
    const auto terms = window_terms(2 - w, 2 + w, term);
    const auto est = summarize_series(2 - w, terms, 2, {}, EnvelopeSet{{1.0, 0.7, 2}});
    EXPECT_GE(est.partial_sum, prev_sum);
    ASSERT_TRUE(est.converged());
    // the tail bound of a smaller window covers what the bigger one adds
    const auto bigger = window_terms(2 - w - 5, 2 + w + 5, term);
    const auto est2 = summarize_series(2 - w - 5, bigger, 2, {}, EnvelopeSet{{1.0, 0.7, 2}});
    EXPECT_LE(est2.partial_sum - est.partial_sum, *est.tail_bound * (1 + 1e-12));
    prev_sum = est.partial_sum;
  }
}
