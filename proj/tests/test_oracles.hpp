#pragma once

// Independent reference implementations used only by the test suite. Each
// oracle recomputes a quantity through a different algorithm than the
// library (quadrature instead of continued fractions, Pascal's triangle
// instead of beta identities, exhaustive search instead of PAVA, ...) so
// agreement is evidence of correctness rather than of shared bugs.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <utility>
#include <vector>

#include "cautious/stats.hpp"

namespace oracle {

// ---------------------------------------------------------------------------
// Adaptive-Simpson quadrature for the regularized incomplete beta function.
// Requires a >= 1 and b >= 1 so the integrand is bounded.
// ---------------------------------------------------------------------------

namespace detail {

inline double simpson_rec(const std::function<double(double)>& f, double lo,
                          double hi, double flo, double fmid, double fhi,
                          double whole, double eps, int depth) {
  const double mid = 0.5 * (lo + hi);
  const double lm = 0.5 * (lo + mid), rm = 0.5 * (mid + hi);
  const double flm = f(lm), frm = f(rm);
  const double left = (mid - lo) / 6.0 * (flo + 4.0 * flm + fmid);
  const double right = (hi - mid) / 6.0 * (fmid + 4.0 * frm + fhi);
  const double delta = left + right - whole;
  if (depth <= 0 || std::fabs(delta) < 15.0 * eps)
    return left + right + delta / 15.0;
  return simpson_rec(f, lo, mid, flo, flm, fmid, left, 0.5 * eps, depth - 1) +
         simpson_rec(f, mid, hi, fmid, frm, fhi, right, 0.5 * eps, depth - 1);
}

inline double integrate(const std::function<double(double)>& f, double lo,
                        double hi, double eps) {
  if (hi <= lo) return 0.0;
  const double flo = f(lo), fhi = f(hi), fmid = f(0.5 * (lo + hi));
  const double whole = (hi - lo) / 6.0 * (flo + 4.0 * fmid + fhi);
  return simpson_rec(f, lo, hi, flo, fmid, fhi, whole, eps, 48);
}

}  // namespace detail

inline double inc_beta_quad(double x, double a, double b) {
  if (!(a >= 1.0 && b >= 1.0))
    throw std::invalid_argument("quadrature oracle needs a, b >= 1");
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double log_norm =
      std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b);
  auto density = [=](double t) {
    if (t <= 0.0) return a > 1.0 ? 0.0 : std::exp(log_norm);
    if (t >= 1.0) return b > 1.0 ? 0.0 : std::exp(log_norm);
    return std::exp(log_norm + (a - 1.0) * std::log(t) +
                    (b - 1.0) * std::log1p(-t));
  };
  // Integrate the shorter side of the mode for accuracy near 0 or 1.
  if (x > a / (a + b))
    return 1.0 - detail::integrate(density, x, 1.0, 1e-14);
  return detail::integrate(density, 0.0, x, 1e-14);
}

// ---------------------------------------------------------------------------
// Exact binomial CDF via Pascal's triangle (long double, exact for m <= 60).
// ---------------------------------------------------------------------------

inline std::vector<long double> pascal_row(int m) {
  std::vector<long double> row(std::size_t(m) + 1, 1.0L);
  for (int i = 1; i <= m; ++i)
    for (int j = i - 1; j >= 1; --j) row[j] += row[j - 1];
  return row;
}

inline double binom_cdf_oracle(int k, int m, double p) {
  if (k < 0) return 0.0;
  if (k >= m) return 1.0;
  const auto C = pascal_row(m);
  const long double lp = p, lq = 1.0L - (long double)p;
  long double sum = 0.0L;
  for (int j = 0; j <= k; ++j)
    sum += C[std::size_t(j)] * powl(lp, j) * powl(lq, m - j);
  return double(sum);
}

inline double binom_pmf_oracle(int k, int m, double p) {
  if (k < 0 || k > m) return 0.0;
  const auto C = pascal_row(m);
  return double(C[std::size_t(k)] * powl((long double)p, k) *
                powl(1.0L - (long double)p, m - k));
}

// ---------------------------------------------------------------------------
// Isotonic regression oracles.
// ---------------------------------------------------------------------------

// Repeated-scan PAVA: find the first adjacent mean inversion, merge, repeat.
// O(n^2) worst case, structurally unlike the stack implementation.
inline std::vector<double> naive_pava(const std::vector<double>& y,
                                      std::vector<double> w = {}) {
  const std::size_t n = y.size();
  if (w.empty()) w.assign(n, 1.0);
  std::vector<double> sum(n), wt(n);
  std::vector<std::size_t> len(n);
  for (std::size_t i = 0; i < n; ++i) {
    sum[i] = y[i] * w[i];
    wt[i] = w[i];
    len[i] = 1;
  }
  bool merged = true;
  while (merged) {
    merged = false;
    for (std::size_t b = 0; b + 1 < sum.size(); ++b) {
      if (sum[b] / wt[b] > sum[b + 1] / wt[b + 1]) {
        sum[b] += sum[b + 1];
        wt[b] += wt[b + 1];
        len[b] += len[b + 1];
        sum.erase(sum.begin() + std::ptrdiff_t(b) + 1);
        wt.erase(wt.begin() + std::ptrdiff_t(b) + 1);
        len.erase(len.begin() + std::ptrdiff_t(b) + 1);
        merged = true;
        break;
      }
    }
  }
  std::vector<double> fitted;
  fitted.reserve(n);
  for (std::size_t b = 0; b < sum.size(); ++b)
    fitted.insert(fitted.end(), len[b], sum[b] / wt[b]);
  return fitted;
}

// Exhaustive monotone least squares: enumerate every contiguous partition
// (2^(n-1) boundary masks), keep the feasible fit with the smallest SSE.
struct BruteIso {
  std::vector<double> fitted;
  double sse = std::numeric_limits<double>::infinity();
};

inline BruteIso brute_isotonic(const std::vector<double>& y) {
  const int n = int(y.size());
  if (n == 0 || n > 20)
    throw std::invalid_argument("brute_isotonic needs 1 <= n <= 20");
  BruteIso best;
  std::vector<double> fit(std::size_t(n), 0.0);
  for (std::uint32_t mask = 0; mask < (1u << (n - 1)); ++mask) {
    double sse = 0.0, prev = -std::numeric_limits<double>::infinity();
    bool feasible = true;
    int start = 0;
    for (int i = 0; i < n && feasible; ++i) {
      if (i == n - 1 || ((mask >> i) & 1u)) {
        double s = 0.0;
        for (int j = start; j <= i; ++j) s += y[std::size_t(j)];
        const double mean = s / double(i - start + 1);
        if (mean < prev - 1e-15) {
          feasible = false;
          break;
        }
        for (int j = start; j <= i; ++j) {
          fit[std::size_t(j)] = mean;
          const double d = y[std::size_t(j)] - mean;
          sse += d * d;
        }
        prev = mean;
        start = i + 1;
      }
    }
    if (feasible && sse < best.sse) {
      best.sse = sse;
      best.fitted = fit;
    }
  }
  return best;
}

// Position-by-position simplified Venn-Abers: rebuild each augmented
// sequence from scratch and run the naive PAVA on it.
inline std::vector<double> sva_naive(const std::vector<std::uint8_t>& labels,
                                     const std::vector<double>& scores) {
  const std::size_t n = labels.size();
  std::vector<double> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t ins = std::size_t(
        std::upper_bound(scores.begin(), scores.end(), scores[k]) -
        scores.begin());
    std::vector<double> aug;
    aug.reserve(n + 1);
    for (std::size_t i = 0; i < ins; ++i) aug.push_back(double(labels[i]));
    aug.push_back(0.0);
    for (std::size_t i = ins; i < n; ++i) aug.push_back(double(labels[i]));
    out[k] = naive_pava(aug)[ins];
  }
  return out;
}

// ---------------------------------------------------------------------------
// Poisson-binomial tail P(T >= t) for independent Bernoulli(probs_i).
// ---------------------------------------------------------------------------

inline double poisson_binomial_tail(const std::vector<double>& probs, int t) {
  std::vector<double> dp(probs.size() + 1, 0.0);
  dp[0] = 1.0;
  int cnt = 0;
  for (double p : probs) {
    ++cnt;
    for (int j = cnt; j >= 1; --j)
      dp[std::size_t(j)] = dp[std::size_t(j)] * (1.0 - p) +
                           dp[std::size_t(j) - 1] * p;
    dp[0] *= (1.0 - p);
  }
  double tail = 0.0;
  for (int j = std::max(t, 0); j <= int(probs.size()); ++j)
    tail += dp[std::size_t(j)];
  return tail;
}

// ---------------------------------------------------------------------------
// Suffix-by-suffix max-cp statistic (no incremental sums, no memo).
// ---------------------------------------------------------------------------

inline double maxcp_brute(const std::vector<std::uint8_t>& v, int m1,
                          double q) {
  double best = 0.0;
  const int n = int(v.size());
  for (int j = m1; j <= n; ++j) {
    int t = 0;
    for (int i = n - j; i < n; ++i) t += v[std::size_t(i)];
    best = std::max(best, double(cautious::cp_lower_bound(t, j, q)));
  }
  return best;
}

// ---------------------------------------------------------------------------
// Logistic likelihood helpers and grid-search fits.
// ---------------------------------------------------------------------------

inline double softplus(double u) {
  return u > 0.0 ? u + std::log1p(std::exp(-u)) : std::log1p(std::exp(u));
}

inline double sigmoid(double u) { return 1.0 / (1.0 + std::exp(-u)); }

// Negative log-likelihood of soft targets under u_i = slope*z_i + intercept.
inline double logistic_nll(const std::vector<double>& z,
                           const std::vector<double>& y, double slope,
                           double intercept) {
  double nll = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double u = slope * z[i] + intercept;
    nll += softplus(u) - y[i] * u;
  }
  return nll;
}

// Two-parameter iterated grid search over (slope, intercept).
inline std::pair<double, double> platt_grid_oracle(
    const std::vector<double>& z, const std::vector<double>& y,
    double span = 25.0) {
  double bs = 0.0, bi = 0.0;
  double half_s = span, half_i = span;
  const int kPts = 33;
  for (int round = 0; round < 30; ++round) {
    double best = std::numeric_limits<double>::infinity();
    double ns = bs, ni = bi;
    for (int a = 0; a < kPts; ++a) {
      const double s = bs - half_s + 2.0 * half_s * a / (kPts - 1);
      for (int b = 0; b < kPts; ++b) {
        const double ic = bi - half_i + 2.0 * half_i * b / (kPts - 1);
        const double nll = logistic_nll(z, y, s, ic);
        if (nll < best) {
          best = nll;
          ns = s;
          ni = ic;
        }
      }
    }
    bs = ns;
    bi = ni;
    half_s = 4.0 * half_s / (kPts - 1);
    half_i = 4.0 * half_i / (kPts - 1);
  }
  return {bs, bi};
}

// NLL of a beta-calibration parameter triple on (score, binary label) data.
inline double betacal_nll(const std::vector<double>& z,
                          const std::vector<std::uint8_t>& y, double a,
                          double b, double c) {
  double nll = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double u = a * std::log(z[i]) - b * std::log1p(-z[i]) + c;
    nll += softplus(u) - double(y[i]) * u;
  }
  return nll;
}

// Three-parameter iterated grid search with a, b constrained non-negative.
struct BetaGridFit {
  double a = 0.0, b = 0.0, c = 0.0;
};

inline BetaGridFit betacal_grid_oracle(const std::vector<double>& z,
                                       const std::vector<std::uint8_t>& y) {
  BetaGridFit fit;
  fit.a = 2.0;
  fit.b = 2.0;
  double half_a = 6.0, half_b = 6.0, half_c = 12.0;
  const int kPts = 17;
  for (int round = 0; round < 28; ++round) {
    double best = std::numeric_limits<double>::infinity();
    BetaGridFit next = fit;
    for (int ia = 0; ia < kPts; ++ia) {
      const double a = std::max(0.0, fit.a - half_a +
                                         2.0 * half_a * ia / (kPts - 1));
      for (int ib = 0; ib < kPts; ++ib) {
        const double b = std::max(0.0, fit.b - half_b +
                                           2.0 * half_b * ib / (kPts - 1));
        for (int ic = 0; ic < kPts; ++ic) {
          const double c = fit.c - half_c + 2.0 * half_c * ic / (kPts - 1);
          const double nll = betacal_nll(z, y, a, b, c);
          if (nll < best) {
            best = nll;
            next = {a, b, c};
          }
        }
      }
    }
    fit = next;
    half_a = 4.0 * half_a / (kPts - 1);
    half_b = 4.0 * half_b / (kPts - 1);
    half_c = 4.0 * half_c / (kPts - 1);
  }
  return fit;
}

// ---------------------------------------------------------------------------
// Misc small helpers.
// ---------------------------------------------------------------------------

// Linear-interpolation percentile over a copy of the data.
inline double quantile_linear(std::vector<double> v, double pct) {
  if (v.empty()) throw std::invalid_argument("empty sample");
  std::sort(v.begin(), v.end());
  const double rank = pct / 100.0 * double(v.size() - 1);
  const std::size_t lo = std::size_t(std::floor(rank));
  if (lo + 1 >= v.size()) return v.back();
  const double frac = rank - double(lo);
  return v[lo] + frac * (v[lo + 1] - v[lo]);
}

// All probability-weighted values of `stat` over every binary vector of
// length m under a homogeneous Bernoulli(p) model, reduced to a CDF:
// sorted unique statistic values with P(stat <= value).
template <typename StatFn>
inline std::vector<std::pair<double, double>> exhaustive_stat_cdf(
    int m, double p, StatFn&& stat) {
  if (m < 1 || m > 20) throw std::invalid_argument("m out of range");
  std::vector<std::pair<double, double>> mass;  // (value, probability)
  std::vector<std::uint8_t> v(std::size_t(m), 0);
  for (std::uint32_t bits = 0; bits < (1u << m); ++bits) {
    int ones = 0;
    for (int i = 0; i < m; ++i) {
      v[std::size_t(i)] = std::uint8_t((bits >> i) & 1u);
      ones += v[std::size_t(i)];
    }
    const double prob =
        std::pow(p, double(ones)) * std::pow(1.0 - p, double(m - ones));
    mass.emplace_back(stat(v), prob);
  }
  std::sort(mass.begin(), mass.end());
  std::vector<std::pair<double, double>> cdf;
  double acc = 0.0;
  for (std::size_t i = 0; i < mass.size(); ++i) {
    acc += mass[i].second;
    if (i + 1 == mass.size() || mass[i + 1].first > mass[i].first + 1e-15)
      cdf.emplace_back(mass[i].first, acc);
  }
  return cdf;
}

}  // namespace oracle
