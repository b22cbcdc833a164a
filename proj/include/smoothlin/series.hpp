#pragma once

// Truncated bi-infinite sums of nonnegative terms with a tail bound and a
// three-valued convergence verdict.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace smoothlin {

enum class Verdict { converged, divergent, inconclusive };

inline const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::converged: return "converged";
    case Verdict::divergent: return "divergent";
    default: return "inconclusive";
  }
}

/// term(k) <= scale * ratio^|k - center| for every integer k.
struct GeometricEnvelope {
  double scale = 0.0;
  double ratio = 0.0;
  long center = 0;

  double at(long k) const { return scale * std::pow(ratio, std::abs(k - center)); }

  /// Upper bound on sum_{k > hi} term(k).
  double tail_above(long hi) const {
    if (scale == 0.0) return 0.0;
    if (ratio >= 1.0) return std::numeric_limits<double>::infinity();
    double out = 0.0;
    long k = hi + 1;
    for (; k < center; ++k) out += at(k);
    return out + scale * std::pow(ratio, k - center) / (1.0 - ratio);
  }

  /// Upper bound on sum_{k < lo} term(k).
  double tail_below(long lo) const {
    if (scale == 0.0) return 0.0;
    if (ratio >= 1.0) return std::numeric_limits<double>::infinity();
    double out = 0.0;
    long k = lo - 1;
    for (; k > center; --k) out += at(k);
    return out + scale * std::pow(ratio, center - k) / (1.0 - ratio);
  }
};

/// Several valid envelopes for the same terms; tails take the smallest bound.
using EnvelopeSet = std::vector<GeometricEnvelope>;

struct SeriesOptions {
  double explosion_cap = 1e6;
  int witness_run = 10;       // outermost terms inspected for divergence / ratio fitting
  double ratio_limit = 0.999;
};

struct SeriesEstimate {
  double partial_sum = 0.0;
  std::optional<double> tail_bound;
  Verdict verdict = Verdict::inconclusive;
  long k_min = 0;
  long k_max = 0;
  long terms_inspected = 0;
  std::string witness;

  bool converged() const { return verdict == Verdict::converged; }
  /// partial_sum + tail_bound, or +inf when there is no bound.
  double upper() const {
    return tail_bound ? partial_sum + *tail_bound : std::numeric_limits<double>::infinity();
  }
};

/// Which ends of the index range the full series extends past.
struct OpenSides {
  bool below = true;
  bool above = true;
};

namespace detail {

struct SideTail {
  std::optional<double> bound;
  Verdict verdict = Verdict::converged;
  std::string witness;
};

// outward: terms ordered from the inside of the window towards its edge.
inline SideTail tail_of_side(std::span<const double> outward, std::optional<double> analytic,
                             const SeriesOptions& opts, const char* side) {
  SideTail out;
  const std::size_t run = static_cast<std::size_t>(std::max(opts.witness_run, 2));
  if (outward.size() >= run) {
    auto last = outward.subspan(outward.size() - run);
    bool nondecreasing = last.back() > 0.0;
    for (std::size_t i = 1; i < last.size() && nondecreasing; ++i)
      nondecreasing = last[i] >= last[i - 1];
    if (nondecreasing) {
      out.verdict = Verdict::divergent;
      out.witness = std::string(side) + " side: last " + std::to_string(run) +
                    " terms non-decreasing, final term " + std::to_string(last.back());
      return out;
    }
  }
  if (analytic) {
    out.bound = *analytic;
    if (!std::isfinite(*analytic)) {
      out.bound.reset();
      out.verdict = Verdict::inconclusive;
    }
    return out;
  }
  if (outward.empty()) {
    out.verdict = Verdict::inconclusive;
    return out;
  }
  const std::size_t n = std::min(run, outward.size());
  auto last = outward.subspan(outward.size() - n);
  if (std::all_of(last.begin(), last.end(), [](double t) { return t == 0.0; })) {
    out.bound = 0.0;
    return out;
  }
  if (n < 2) {
    out.verdict = Verdict::inconclusive;
    return out;
  }
  double ratio = 0.0;
  for (std::size_t i = 1; i < n; ++i) {
    if (last[i - 1] == 0.0) {
      if (last[i] > 0.0) ratio = std::numeric_limits<double>::infinity();
      continue;
    }
    ratio = std::max(ratio, last[i] / last[i - 1]);
  }
  if (!(ratio < opts.ratio_limit)) {
    out.verdict = Verdict::inconclusive;
    out.witness = std::string(side) + " side: ratio " + std::to_string(ratio) + " too close to 1";
    return out;
  }
  out.bound = last.back() * ratio / (1.0 - ratio);
  return out;
}

}  // namespace detail

/// Summarise sum_{k=k_min}^{k_max} terms[k - k_min] as an estimate of the full
/// series, which extends past the window on the open sides.
///
/// Tails come from the smallest analytic envelope bound when any is supplied,
/// ratio extrapolation over the outermost terms otherwise.  A side whose
/// outermost witness_run terms are non-decreasing and positive, or a partial sum
/// above the explosion cap, gives a divergent verdict.
inline SeriesEstimate summarize_series(long k_min, std::span<const double> terms, long center,
                                       OpenSides open, const EnvelopeSet& lower_envelopes,
                                       const EnvelopeSet& upper_envelopes, const SeriesOptions& opts = {}) {
  SeriesEstimate est;
  est.k_min = k_min;
  est.k_max = k_min + static_cast<long>(terms.size()) - 1;
  est.terms_inspected = static_cast<long>(terms.size());
  for (double t : terms) est.partial_sum += t;

  if (!(est.partial_sum <= opts.explosion_cap)) {
    est.verdict = Verdict::divergent;
    est.witness = "partial sum " + std::to_string(est.partial_sum) + " exceeds explosion cap";
    return est;
  }

  double tail = 0.0;
  Verdict verdict = Verdict::converged;
  auto take = [&](const detail::SideTail& side) {
    if (side.verdict == Verdict::divergent) {
      verdict = Verdict::divergent;
      if (est.witness.empty()) est.witness = side.witness;
    } else if (side.verdict == Verdict::inconclusive && verdict != Verdict::divergent) {
      verdict = Verdict::inconclusive;
      if (est.witness.empty()) est.witness = side.witness;
    }
    if (side.bound) tail += *side.bound;
  };

  auto analytic = [&](bool above) -> std::optional<double> {
    const EnvelopeSet& envelopes = above ? upper_envelopes : lower_envelopes;
    if (envelopes.empty()) return std::nullopt;
    double best = std::numeric_limits<double>::infinity();
    for (const auto& env : envelopes)
      best = std::min(best, above ? env.tail_above(est.k_max) : env.tail_below(est.k_min));
    return best;
  };

  if (open.above) {
    std::vector<double> outward;
    for (long k = std::max(center + 1, est.k_min); k <= est.k_max; ++k)
      outward.push_back(terms[static_cast<std::size_t>(k - k_min)]);
    take(detail::tail_of_side(outward, analytic(true), opts, "upper"));
  }
  if (open.below) {
    std::vector<double> outward;
    for (long k = std::min(center - 1, est.k_max); k >= est.k_min; --k)
      outward.push_back(terms[static_cast<std::size_t>(k - k_min)]);
    take(detail::tail_of_side(outward, analytic(false), opts, "lower"));
  }

  est.verdict = verdict;
  if (verdict == Verdict::converged) est.tail_bound = tail;
  return est;
}

/// Same envelopes on both sides.
inline SeriesEstimate summarize_series(long k_min, std::span<const double> terms, long center,
                                       OpenSides open, const EnvelopeSet& envelopes,
                                       const SeriesOptions& opts = {}) {
  return summarize_series(k_min, terms, center, open, envelopes, envelopes, opts);
}

}  // namespace smoothlin
