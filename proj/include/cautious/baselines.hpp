#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "cautious/lower_bound_map.hpp"

namespace cautious {

// Weighted isotonic (monotone non-decreasing) least-squares fit.
struct IsotonicFit {
  struct Bin {
    std::size_t begin = 0;  // [begin, end)
    std::size_t end = 0;
    double value = 0.0;     // pooled weighted mean
    double weight = 0.0;
  };
  std::vector<Bin> bins;       // values strictly increasing across bins
  std::vector<double> fitted;  // per-position pooled value
};

// Pool-adjacent-violators. Unit weights when weights is empty; otherwise
// weights must match values in length and be strictly positive.
IsotonicFit pava_isotonic(std::span<const double> values,
                          std::span<const double> weights = {});

// Logistic curve fitted to (score, target) pairs by maximum likelihood.
// Targets may be soft labels in [0, 1]. Damped Newton with step halving;
// throws if the gradient has not dropped to 1e-8 within 500 iterations.
struct SigmoidParams {
  double slope = 0.0;
  double intercept = 0.0;
};
SigmoidParams platt_fit(std::span<const double> scores,
                        std::span<const double> targets);
double platt_predict(const SigmoidParams& p, double score);

// Beta calibration map mu(z) = sigmoid(a*ln z - b*ln(1-z) + c), monotone
// when a, b >= 0. Fitted by logistic maximum likelihood on the features
// (ln z, -ln(1-z)); a negative coefficient triggers a re-fit with that
// feature dropped (coefficient pinned to 0). Scores are clamped into
// [1e-9, 1 - 1e-9] with a warning before taking logs.
struct BetaCalParams {
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;
};
BetaCalParams betacal_fit(std::span<const double> scores,
                          std::span<const std::uint8_t> labels);
double betacal_predict(const BetaCalParams& p, double score);

// y -> y*(1 - eps) + eps/2: shrinks hard labels off the {0, 1} endpoints.
std::vector<double> label_smooth(std::span<const std::uint8_t> labels,
                                 double eps = 0.001);

// Pessimistic single-addition estimate: for each position k, insert one
// extra 0-label at score_k (after all ties), re-run the isotonic fit on the
// augmented sequence, and report the fitted value at the inserted element.
// Quadratic in n. Scores must be ascending and match labels in length.
LowerBoundMap sva_lower(std::span<const std::uint8_t> labels,
                        std::span<const double> scores);

// Isotonic bins, each replaced by the exact-binomial lower bound of its own
// label counts at confidence q.
LowerBoundMap isobins_cp(std::span<const std::uint8_t> labels, double q);

// Isotonic bins merged until every bin's 95% central credible interval
// (Beta(1 + ones, 1 + zeros) posterior) is narrower than width_threshold:
// the widest offending bin merges with whichever neighbor yields the
// narrower merged interval, monotonicity of bin means is re-enforced by
// pooling, and the final bins get exact-binomial lower bounds at q.
LowerBoundMap rcir_cp(std::span<const std::uint8_t> labels, double q,
                      double width_threshold = 0.05);

}  // namespace cautious
