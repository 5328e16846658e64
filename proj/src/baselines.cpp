#include "cautious/baselines.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <iostream>
#include <limits>
#include <stdexcept>
#include <vector>

#include "cautious/stats.hpp"

namespace cautious {

namespace {

void check_binary(std::span<const std::uint8_t> labels) {
  for (auto b : labels)
    if (b > 1) throw std::domain_error("labels must be 0 or 1");
}

// ---------------------------------------------------------------------------
// Shared logistic maximum-likelihood engine, at most 2 features + intercept.
// Parameters: beta[0..d-1] on the features, beta[d] the intercept.

struct GlmFit {
  std::array<double, 2> coef{0.0, 0.0};
  double intercept = 0.0;
};

double softplus(double u) {
  return u > 0.0 ? u + std::log1p(std::exp(-u)) : std::log1p(std::exp(u));
}

GlmFit fit_logistic(std::size_t n, int d, const double* const* feat,
                    const double* targets) {
  if (d < 0 || d > 2) throw std::invalid_argument("at most two features");
  if (n == 0) throw std::invalid_argument("cannot fit on an empty sample");
  const int k = d + 1;
  std::array<double, 3> beta{0.0, 0.0, 0.0};

  auto eval = [&](const std::array<double, 3>& b, std::array<double, 3>* grad,
                  std::array<double, 9>* hess) {
    double nll = 0.0;
    if (grad) grad->fill(0.0);
    if (hess) hess->fill(0.0);
    for (std::size_t i = 0; i < n; ++i) {
      double x[3] = {1.0, 1.0, 1.0};
      for (int j = 0; j < d; ++j) x[j] = feat[j][i];
      x[d] = 1.0;
      double u = 0.0;
      for (int j = 0; j < k; ++j) u += b[std::size_t(j)] * x[j];
      nll += softplus(u) - targets[i] * u;
      if (!grad && !hess) continue;
      const double mu = 1.0 / (1.0 + std::exp(-u));
      if (grad) {
        const double r = mu - targets[i];
        for (int j = 0; j < k; ++j) (*grad)[std::size_t(j)] += r * x[j];
      }
      if (hess) {
        const double w = mu * (1.0 - mu);
        for (int a = 0; a < k; ++a)
          for (int c = 0; c < k; ++c)
            (*hess)[std::size_t(a * 3 + c)] += w * x[a] * x[c];
      }
    }
    return nll;
  };

  std::array<double, 3> grad{};
  std::array<double, 9> hess{};
  double nll = eval(beta, &grad, &hess);
  for (int iter = 0; iter < 500; ++iter) {
    double gmax = 0.0;
    for (int j = 0; j < k; ++j) gmax = std::max(gmax, std::abs(grad[std::size_t(j)]));
    if (gmax <= 1e-8) {
      GlmFit fit;
      for (int j = 0; j < d; ++j) fit.coef[std::size_t(j)] = beta[std::size_t(j)];
      fit.intercept = beta[std::size_t(d)];
      return fit;
    }

    // Newton direction from the (ridge-stabilised) Hessian, by Gaussian
    // elimination with partial pivoting on the k x k system.
    double m[3][4] = {};
    double trace = 0.0;
    for (int j = 0; j < k; ++j) trace += hess[std::size_t(j * 3 + j)];
    const double ridge = 1e-12 * (trace / k + 1.0);
    for (int r = 0; r < k; ++r) {
      for (int c = 0; c < k; ++c) m[r][c] = hess[std::size_t(r * 3 + c)];
      m[r][r] += ridge;
      m[r][k] = grad[std::size_t(r)];
    }
    for (int col = 0; col < k; ++col) {
      int pivot = col;
      for (int r = col + 1; r < k; ++r)
        if (std::abs(m[r][col]) > std::abs(m[pivot][col])) pivot = r;
      if (pivot != col)
        for (int c = 0; c <= k; ++c) std::swap(m[col][c], m[pivot][c]);
      for (int r = col + 1; r < k; ++r) {
        const double f = m[r][col] / m[col][col];
        for (int c = col; c <= k; ++c) m[r][c] -= f * m[col][c];
      }
    }
    std::array<double, 3> step{};
    for (int r = k - 1; r >= 0; --r) {
      double s = m[r][k];
      for (int c = r + 1; c < k; ++c) s -= m[r][c] * step[std::size_t(c)];
      step[std::size_t(r)] = s / m[r][r];
    }

    // Step halving until the objective stops increasing.
    double t = 1.0;
    std::array<double, 3> cand = beta;
    double cand_nll = nll;
    bool moved = false;
    while (t >= 0x1.0p-40) {
      for (int j = 0; j < k; ++j)
        cand[std::size_t(j)] = beta[std::size_t(j)] - t * step[std::size_t(j)];
      cand_nll = eval(cand, nullptr, nullptr);
      if (cand_nll <= nll + 1e-15 * (1.0 + std::abs(nll))) {
        moved = true;
        break;
      }
      t *= 0.5;
    }
    if (!moved) break;
    beta = cand;
    nll = eval(beta, &grad, &hess);
  }
  throw std::runtime_error("logistic fit did not converge in 500 iterations");
}

double logit(double p) { return std::log(p / (1.0 - p)); }

constexpr double kScoreClamp = 1e-9;

// 95% central interval width of the Beta(1 + ones, 1 + zeros) posterior.
double credible_width(std::int64_t ones, std::int64_t size) {
  const double a = 1.0 + double(ones);
  const double b = 1.0 + double(size - ones);
  return beta_quantile(0.975, a, b) - beta_quantile(0.025, a, b);
}

}  // namespace

IsotonicFit pava_isotonic(std::span<const double> values,
                          std::span<const double> weights) {
  const std::size_t n = values.size();
  if (!weights.empty()) {
    if (weights.size() != n)
      throw std::invalid_argument("weights must match values in length");
    for (double w : weights)
      if (!(w > 0.0)) throw std::domain_error("weights must be positive");
  }

  std::vector<std::size_t> start(n);
  std::vector<double> wsum(n), ysum(n);
  std::size_t top = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double w = weights.empty() ? 1.0 : weights[i];
    start[top] = i;
    wsum[top] = w;
    ysum[top] = w * values[i];
    ++top;
    // Merge on equality too, so surviving bin values increase strictly.
    while (top >= 2 &&
           ysum[top - 2] * wsum[top - 1] >= ysum[top - 1] * wsum[top - 2]) {
      ysum[top - 2] += ysum[top - 1];
      wsum[top - 2] += wsum[top - 1];
      --top;
    }
  }

  IsotonicFit fit;
  fit.bins.reserve(top);
  fit.fitted.resize(n);
  for (std::size_t b = 0; b < top; ++b) {
    IsotonicFit::Bin bin;
    bin.begin = start[b];
    bin.end = b + 1 < top ? start[b + 1] : n;
    bin.weight = wsum[b];
    bin.value = ysum[b] / wsum[b];
    std::fill(fit.fitted.begin() + std::ptrdiff_t(bin.begin),
              fit.fitted.begin() + std::ptrdiff_t(bin.end), bin.value);
    fit.bins.push_back(bin);
  }
  return fit;
}

SigmoidParams platt_fit(std::span<const double> scores,
                        std::span<const double> targets) {
  if (scores.size() != targets.size())
    throw std::invalid_argument("scores and targets must match in length");
  for (double y : targets)
    if (!(y >= 0.0 && y <= 1.0))
      throw std::domain_error("targets must lie in [0, 1]");
  const double* feat[1] = {scores.data()};
  const GlmFit fit = fit_logistic(scores.size(), 1, feat, targets.data());
  return SigmoidParams{fit.coef[0], fit.intercept};
}

double platt_predict(const SigmoidParams& p, double score) {
  return 1.0 / (1.0 + std::exp(-(p.slope * score + p.intercept)));
}

BetaCalParams betacal_fit(std::span<const double> scores,
                          std::span<const std::uint8_t> labels) {
  const std::size_t n = scores.size();
  if (labels.size() != n)
    throw std::invalid_argument("scores and labels must match in length");
  if (n == 0) throw std::invalid_argument("cannot fit on an empty sample");
  check_binary(labels);

  std::vector<double> f1(n), f2(n), y(n);
  std::size_t clamped = 0;
  for (std::size_t i = 0; i < n; ++i) {
    double z = scores[i];
    if (!(z >= 0.0 && z <= 1.0))
      throw std::domain_error("scores must lie in [0, 1]");
    if (z < kScoreClamp || z > 1.0 - kScoreClamp) {
      z = std::clamp(z, kScoreClamp, 1.0 - kScoreClamp);
      ++clamped;
    }
    f1[i] = std::log(z);
    f2[i] = -std::log1p(-z);
    y[i] = double(labels[i]);
  }
  if (clamped > 0)
    std::cerr << "betacal: clamped " << clamped << " score(s) into ["
              << kScoreClamp << ", 1 - " << kScoreClamp
              << "] before taking logs\n";

  const double* both[2] = {f1.data(), f2.data()};
  GlmFit fit = fit_logistic(n, 2, both, y.data());
  BetaCalParams params{fit.coef[0], fit.coef[1], fit.intercept};

  // A negative coefficient would make the map non-monotone; drop that
  // feature and re-fit.
  if (params.a < 0.0) {
    const double* only2[1] = {f2.data()};
    fit = fit_logistic(n, 1, only2, y.data());
    params = BetaCalParams{0.0, fit.coef[0], fit.intercept};
  } else if (params.b < 0.0) {
    const double* only1[1] = {f1.data()};
    fit = fit_logistic(n, 1, only1, y.data());
    params = BetaCalParams{fit.coef[0], 0.0, fit.intercept};
  }
  if (params.a < 0.0 || params.b < 0.0) {
    double mean = 0.0;
    for (double v : y) mean += v;
    mean = std::clamp(mean / double(n), kScoreClamp, 1.0 - kScoreClamp);
    params = BetaCalParams{0.0, 0.0, logit(mean)};
  }
  return params;
}

double betacal_predict(const BetaCalParams& p, double score) {
  const double z = std::clamp(score, kScoreClamp, 1.0 - kScoreClamp);
  const double u = p.a * std::log(z) - p.b * std::log1p(-z) + p.c;
  return 1.0 / (1.0 + std::exp(-u));
}

std::vector<double> label_smooth(std::span<const std::uint8_t> labels,
                                 double eps) {
  if (!(eps >= 0.0 && eps <= 1.0))
    throw std::domain_error("smoothing amount must lie in [0, 1]");
  check_binary(labels);
  std::vector<double> out(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i)
    out[i] = double(labels[i]) * (1.0 - eps) + eps / 2.0;
  return out;
}

LowerBoundMap sva_lower(std::span<const std::uint8_t> labels,
                        std::span<const double> scores) {
  const std::size_t n = labels.size();
  if (scores.size() != n)
    throw std::invalid_argument("scores and labels must match in length");
  check_binary(labels);
  for (std::size_t i = 1; i < n; ++i)
    if (scores[i] < scores[i - 1])
      throw std::invalid_argument("scores must be ascending");

  LowerBoundMap map = LowerBoundMap::with_prefix(n, 0, "sva", "insert=after-ties");

  // One isotonic pass per position over the sequence with a 0-label
  // inserted after all score ties; stacks are reused across positions.
  std::vector<std::size_t> start(n + 1);
  std::vector<std::int64_t> cnt(n + 1), ones(n + 1);
  std::size_t top = 0;
  std::size_t pos = 0;
  auto push = [&](std::int64_t y) {
    start[top] = pos++;
    cnt[top] = 1;
    ones[top] = y;
    ++top;
    while (top >= 2 &&
           ones[top - 2] * cnt[top - 1] >= ones[top - 1] * cnt[top - 2]) {
      ones[top - 2] += ones[top - 1];
      cnt[top - 2] += cnt[top - 1];
      --top;
    }
  };

  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t ins = std::size_t(
        std::upper_bound(scores.begin(), scores.end(), scores[k]) -
        scores.begin());
    top = 0;
    pos = 0;
    for (std::size_t i = 0; i < ins; ++i) push(labels[i]);
    push(0);
    for (std::size_t i = ins; i < n; ++i) push(labels[i]);
    // Pooled value of the block holding the inserted element (index ins).
    const std::size_t block = std::size_t(
        std::upper_bound(start.begin(), start.begin() + std::ptrdiff_t(top),
                         ins) -
        start.begin()) - 1;
    map.bounds[k] = double(ones[block]) / double(cnt[block]);
  }
  return map;
}

LowerBoundMap isobins_cp(std::span<const std::uint8_t> labels, double q) {
  check_binary(labels);
  if (!(q > 0.0 && q < 1.0))
    throw std::domain_error("confidence level must lie strictly in (0, 1)");
  const std::size_t n = labels.size();
  char cfg[64];
  std::snprintf(cfg, sizeof cfg, "q=%.17g", q);
  LowerBoundMap map = LowerBoundMap::with_prefix(n, 0, "isobins_cp", cfg);

  std::vector<double> vals(labels.begin(), labels.end());
  const IsotonicFit fit = pava_isotonic(vals);
  for (const auto& bin : fit.bins) {
    int t = 0;
    for (std::size_t i = bin.begin; i < bin.end; ++i) t += labels[i];
    const double bound = cp_lower_bound(t, int(bin.end - bin.begin), q);
    std::fill(map.bounds.begin() + std::ptrdiff_t(bin.begin),
              map.bounds.begin() + std::ptrdiff_t(bin.end), bound);
  }
  return map;
}

LowerBoundMap rcir_cp(std::span<const std::uint8_t> labels, double q,
                      double width_threshold) {
  check_binary(labels);
  if (!(q > 0.0 && q < 1.0))
    throw std::domain_error("confidence level must lie strictly in (0, 1)");
  if (!(width_threshold > 0.0))
    throw std::domain_error("width threshold must be positive");
  const std::size_t n = labels.size();
  char cfg[96];
  std::snprintf(cfg, sizeof cfg, "q=%.17g;width_threshold=%.17g", q,
                width_threshold);
  LowerBoundMap map = LowerBoundMap::with_prefix(n, 0, "rcir_cp", cfg);

  struct RBin {
    std::size_t begin = 0;
    std::size_t end = 0;
    std::int64_t ones = 0;
    std::int64_t size() const { return std::int64_t(end - begin); }
  };
  std::vector<double> vals(labels.begin(), labels.end());
  const IsotonicFit fit = pava_isotonic(vals);
  std::vector<RBin> bins;
  bins.reserve(fit.bins.size());
  for (const auto& bin : fit.bins) {
    RBin rb{bin.begin, bin.end, 0};
    for (std::size_t i = bin.begin; i < bin.end; ++i) rb.ones += labels[i];
    bins.push_back(rb);
  }

  std::vector<double> widths(bins.size());
  for (std::size_t i = 0; i < bins.size(); ++i)
    widths[i] = credible_width(bins[i].ones, bins[i].size());

  auto merge_into = [&](std::size_t a) {
    // bins[a] absorbs bins[a + 1].
    bins[a].end = bins[a + 1].end;
    bins[a].ones += bins[a + 1].ones;
    bins.erase(bins.begin() + std::ptrdiff_t(a) + 1);
    widths.erase(widths.begin() + std::ptrdiff_t(a) + 1);
    widths[a] = credible_width(bins[a].ones, bins[a].size());
  };
  auto violates = [&](std::size_t a) {
    // Pooling condition mean(a) >= mean(a + 1), exact in integers.
    return bins[a].ones * bins[a + 1].size() >=
           bins[a + 1].ones * bins[a].size();
  };

  while (bins.size() > 1) {
    std::size_t widest = 0;
    for (std::size_t i = 1; i < bins.size(); ++i)
      if (widths[i] > widths[widest]) widest = i;
    if (widths[widest] <= width_threshold) break;

    // Merge toward whichever neighbor leaves the narrower interval
    // (ties toward the left neighbor).
    const double inf = std::numeric_limits<double>::infinity();
    double with_left = inf, with_right = inf;
    if (widest > 0)
      with_left = credible_width(bins[widest - 1].ones + bins[widest].ones,
                                 bins[widest - 1].size() + bins[widest].size());
    if (widest + 1 < bins.size())
      with_right = credible_width(bins[widest].ones + bins[widest + 1].ones,
                                  bins[widest].size() + bins[widest + 1].size());
    std::size_t a = with_left <= with_right ? widest - 1 : widest;
    merge_into(a);

    // Restore increasing bin means around the merged bin by pooling.
    for (bool changed = true; changed;) {
      changed = false;
      if (a > 0 && violates(a - 1)) {
        --a;
        merge_into(a);
        changed = true;
      } else if (a + 1 < bins.size() && violates(a)) {
        merge_into(a);
        changed = true;
      }
    }
  }

  for (const auto& bin : bins) {
    const double bound = cp_lower_bound(int(bin.ones), int(bin.size()), q);
    std::fill(map.bounds.begin() + std::ptrdiff_t(bin.begin),
              map.bounds.begin() + std::ptrdiff_t(bin.end), bound);
  }
  return map;
}

}  // namespace cautious
