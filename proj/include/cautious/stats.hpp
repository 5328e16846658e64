#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "cautious/probability.hpp"
#include "cautious/rng.hpp"

namespace cautious {

// Null model of m independent coin flips sharing one success probability.
struct HomogeneousNull {
  int m = 1;
  Probability p;
};

// Regularized incomplete beta I_x(a, b), a > 0, b > 0, x in [0, 1].
// Continued-fraction evaluation with log-domain prefactors; absolute error
// stays within ~1e-12 across shape parameters up to the thousands.
double reg_inc_beta(double x, double a, double b);

// Inverse of reg_inc_beta in x: returns x with |I_x(a, b) - prob| <= 1e-10.
// Bracketing bisection refined by Newton steps off the beta density.
double beta_quantile(double prob, double a, double b);

// Same inversion restricted to a known bracket lo <= x* <= hi, starting at
// x0 inside (lo, hi); used to warm-start sweeps of related quantiles.
double beta_quantile(double prob, double a, double b, double lo, double hi,
                     double x0);

// P(Binomial(m, p) <= k), evaluated through the incomplete beta identity
// P(X <= k) = I_{1-p}(m - k, k + 1). k < 0 gives 0, k >= m gives 1.
double binomial_cdf(int k, int m, double p);

// One-sided exact lower confidence bound for a binomial proportion at
// confidence q: the largest p such that seeing `ones` or more successes in m
// draws is still plausible, i.e. P(Bin(m, p) <= ones - 1) >= q. Zero
// successes carry no evidence, so the bound is 0.
Probability cp_lower_bound(int ones, int m, double q);

// Independent Bernoulli draws, one per entry of probs.
std::vector<std::uint8_t> sample_hbernoulli(std::span<const double> probs,
                                            SeededRng& rng);
// m draws at the shared probability of the null model.
std::vector<std::uint8_t> sample_hbernoulli(const HomogeneousNull& null,
                                            SeededRng& rng);

}  // namespace cautious
