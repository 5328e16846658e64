#include "cautious/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace cautious {

namespace {

constexpr int kMaxCfIterations = 500;
constexpr double kCfEpsilon = 1e-16;
constexpr double kCfTiny = 1e-300;

// Continued fraction for the incomplete beta (modified Lentz). Converges
// fast when x sits below the switch point (a+1)/(a+b+2); the caller flips
// to the symmetric form otherwise.
double beta_cf(double a, double b, double x) {
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kCfTiny) d = kCfTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxCfIterations; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kCfTiny) d = kCfTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kCfTiny) c = kCfTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kCfTiny) d = kCfTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kCfTiny) c = kCfTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) <= kCfEpsilon) return h;
  }
  throw std::runtime_error(
      "incomplete beta continued fraction did not converge");
}

double log_beta(double a, double b) {
  return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
}

}  // namespace

double reg_inc_beta(double x, double a, double b) {
  if (!(a > 0.0) || !(b > 0.0))
    throw std::domain_error("beta shape parameters must be positive");
  if (!(x >= 0.0 && x <= 1.0))
    throw std::domain_error("incomplete beta argument outside [0, 1]");
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  // Log-domain prefactor keeps shape parameters in the thousands finite.
  const double log_pref =
      a * std::log(x) + b * std::log1p(-x) - log_beta(a, b);
  const double pref = std::exp(log_pref);
  if (x < (a + 1.0) / (a + b + 2.0)) return pref * beta_cf(a, b, x) / a;
  return 1.0 - pref * beta_cf(b, a, 1.0 - x) / b;
}

double beta_quantile(double prob, double a, double b) {
  return beta_quantile(prob, a, b, 0.0, 1.0, a / (a + b));
}

double beta_quantile(double prob, double a, double b, double lo, double hi,
                     double x0) {
  if (!(a > 0.0) || !(b > 0.0))
    throw std::domain_error("beta shape parameters must be positive");
  if (!(prob >= 0.0 && prob <= 1.0))
    throw std::domain_error("quantile level outside [0, 1]");
  if (prob == 0.0) return 0.0;
  if (prob == 1.0) return 1.0;
  if (!(0.0 <= lo && lo < hi && hi <= 1.0) || !(x0 > 0.0 && x0 < 1.0))
    throw std::invalid_argument("quantile bracket must satisfy 0 <= lo < hi <= 1 with x0 interior");

  // Boundary shapes invert exactly: I_x(a, 1) = x^a and I_x(1, b) =
  // 1 - (1 - x)^b. These carry the all-successes/all-failures binomial
  // bounds, so keep them at full precision instead of iterating.
  if (b == 1.0) return std::pow(prob, 1.0 / a);
  if (a == 1.0) return -std::expm1(std::log1p(-prob) / b);

  const double lbeta = log_beta(a, b);
  double x = std::min(std::max(x0, lo), hi);
  if (x <= 0.0) x = 0.5 * hi;
  if (x >= 1.0) x = 0.5 * (lo + 1.0);
  double f = reg_inc_beta(x, a, b) - prob;
  for (int it = 0; it < 200; ++it) {
    if (std::fabs(f) <= 1e-12) return x;
    if (f > 0.0) {
      hi = x;
    } else {
      lo = x;
    }
    // Newton step off the beta density, falling back to bisection whenever
    // the step leaves the bracket (or the density underflows).
    double next = 0.0;
    const double log_pdf =
        (a - 1.0) * std::log(x) + (b - 1.0) * std::log1p(-x) - lbeta;
    const double pdf = std::exp(log_pdf);
    if (pdf > 0.0 && std::isfinite(pdf)) next = x - f / pdf;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (next == x) next = 0.5 * (lo + hi);
    if (next == x) break;  // bracket exhausted at double resolution
    x = next;
    f = reg_inc_beta(x, a, b) - prob;
  }
  if (std::fabs(f) > 1e-10)
    throw std::runtime_error("beta quantile iteration did not converge");
  return x;
}

double binomial_cdf(int k, int m, double p) {
  if (m < 1) throw std::domain_error("binomial draw count must be >= 1");
  if (!(p >= 0.0 && p <= 1.0))
    throw std::domain_error("binomial success probability outside [0, 1]");
  if (k < 0) return 0.0;
  if (k >= m) return 1.0;
  if (p == 0.0) return 1.0;
  if (p == 1.0) return 0.0;
  // P(X <= k) = I_{1-p}(m - k, k + 1)
  return reg_inc_beta(1.0 - p, double(m - k), double(k + 1));
}

Probability cp_lower_bound(int ones, int m, double q) {
  if (m < 1) throw std::domain_error("window length must be >= 1");
  if (ones < 0 || ones > m)
    throw std::domain_error("ones count outside [0, window length]");
  if (!(q > 0.0 && q < 1.0))
    throw std::domain_error("confidence level must lie strictly in (0, 1)");
  if (ones == 0) return Probability(0.0);
  // Largest p with P(Bin(m, p) <= ones - 1) >= q, i.e. the (1 - q) quantile
  // of Beta(ones, m - ones + 1).
  return Probability(beta_quantile(1.0 - q, double(ones), double(m - ones + 1)));
}

std::vector<std::uint8_t> sample_hbernoulli(std::span<const double> probs,
                                            SeededRng& rng) {
  std::vector<std::uint8_t> out(probs.size());
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const double p = probs[i];
    if (!(p >= 0.0 && p <= 1.0))
      throw std::domain_error("bernoulli probability outside [0, 1]");
    out[i] = rng.bernoulli(p) ? 1 : 0;
  }
  return out;
}

std::vector<std::uint8_t> sample_hbernoulli(const HomogeneousNull& null,
                                            SeededRng& rng) {
  if (null.m < 1) throw std::domain_error("null model needs at least 1 draw");
  std::vector<std::uint8_t> out(std::size_t(null.m));
  const double p = null.p;
  for (auto& v : out) v = rng.bernoulli(p) ? 1 : 0;
  return out;
}

}  // namespace cautious
