#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "cautious/baselines.hpp"
#include "cautious/rng.hpp"
#include "cautious/stats.hpp"
#include "test_oracles.hpp"

using cautious::SeededRng;

namespace {

std::vector<std::uint8_t> bits(std::initializer_list<int> v) {
  std::vector<std::uint8_t> out;
  for (int x : v) out.push_back(std::uint8_t(x));
  return out;
}

std::vector<double> ladder(std::size_t n) {
  std::vector<double> s(n);
  for (std::size_t i = 0; i < n; ++i) s[i] = double(i + 1) / double(n + 1);
  return s;
}

}  // namespace

// ---------------------------------------------------------------------------
// PAVA
// ---------------------------------------------------------------------------

TEST_CASE("pava_isotonic hand examples") {
  const auto already = cautious::pava_isotonic(std::vector<double>{0, 0, 1, 1});
  CHECK(already.fitted == std::vector<double>{0, 0, 1, 1});
  REQUIRE(already.bins.size() == 2);
  CHECK(already.bins[0].begin == 0);
  CHECK(already.bins[0].end == 2);
  CHECK(already.bins[1].begin == 2);
  CHECK(already.bins[1].end == 4);

  const auto pooled = cautious::pava_isotonic(std::vector<double>{1, 0});
  CHECK(pooled.fitted == std::vector<double>{0.5, 0.5});
  REQUIRE(pooled.bins.size() == 1);
  CHECK(pooled.bins[0].value == 0.5);

  const auto five =
      cautious::pava_isotonic(std::vector<double>{0, 1, 0, 1, 1});
  CHECK(five.fitted == std::vector<double>{0, 0.5, 0.5, 1, 1});
}

TEST_CASE("pava_isotonic weighted pooling and argument checks") {
  const std::vector<double> values{1, 0};
  const std::vector<double> weights{3, 1};
  const auto fit = cautious::pava_isotonic(values, weights);
  CHECK(fit.fitted[0] == doctest::Approx(0.75).epsilon(1e-15));
  CHECK(fit.fitted[1] == doctest::Approx(0.75).epsilon(1e-15));

  CHECK_THROWS_AS(
      cautious::pava_isotonic(values, std::vector<double>{1.0}),
      std::invalid_argument);
  CHECK_THROWS_AS(
      cautious::pava_isotonic(values, std::vector<double>{1.0, 0.0}),
      std::domain_error);
}

TEST_CASE("pava_isotonic invariants: monotone, bounded, strict bin values") {
  SeededRng rng(31, 0);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + rng.next_below(40);
    std::vector<double> y(n);
    for (auto& v : y) v = rng.next_double();
    const auto fit = cautious::pava_isotonic(y);
    REQUIRE(fit.fitted.size() == n);
    double lo = y[0], hi = y[0];
    for (double v : y) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    for (std::size_t i = 0; i < n; ++i) {
      CHECK(fit.fitted[i] >= lo - 1e-12);
      CHECK(fit.fitted[i] <= hi + 1e-12);
      if (i) CHECK(fit.fitted[i] >= fit.fitted[i - 1] - 1e-15);
    }
    // Bins partition 1..n with strictly increasing pooled values.
    std::size_t cursor = 0;
    double prev = -1.0;
    for (const auto& bin : fit.bins) {
      CHECK(bin.begin == cursor);
      CHECK(bin.end > bin.begin);
      CHECK(bin.value > prev);
      for (std::size_t i = bin.begin; i < bin.end; ++i)
        CHECK(fit.fitted[i] == bin.value);
      prev = bin.value;
      cursor = bin.end;
    }
    CHECK(cursor == n);
  }
}

TEST_CASE("pava_isotonic equals the repeated-scan oracle on random input") {
  SeededRng rng(32, 0);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 1 + rng.next_below(40);
    std::vector<double> y(n), w(n);
    for (auto& v : y) v = rng.next_double();
    for (auto& v : w) v = 0.25 + 2.0 * rng.next_double();
    const auto plain = cautious::pava_isotonic(y);
    const auto naive = oracle::naive_pava(y);
    for (std::size_t i = 0; i < n; ++i)
      CHECK(std::fabs(plain.fitted[i] - naive[i]) < 1e-12);
    const auto weighted = cautious::pava_isotonic(y, w);
    const auto wnaive = oracle::naive_pava(y, w);
    for (std::size_t i = 0; i < n; ++i)
      CHECK(std::fabs(weighted.fitted[i] - wnaive[i]) < 1e-12);
  }
}

TEST_CASE("pava_isotonic matches the exhaustive partition oracle") {
  // Exhaustive over binary vectors up to length 8 here (the acceptance
  // suite pushes to 12) plus random real-valued inputs.
  for (int n = 1; n <= 8; ++n) {
    for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
      std::vector<double> y(std::size_t(n), 0.0);
      for (int i = 0; i < n; ++i) y[std::size_t(i)] = (mask >> i) & 1u;
      const auto fit = cautious::pava_isotonic(y);
      const auto best = oracle::brute_isotonic(y);
      double sse = 0.0;
      for (std::size_t i = 0; i < y.size(); ++i) {
        const double d = y[i] - fit.fitted[i];
        sse += d * d;
        CHECK(std::fabs(fit.fitted[i] - best.fitted[i]) < 1e-9);
      }
      CHECK(sse <= best.sse + 1e-12);
    }
  }
  SeededRng rng(33, 0);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng.next_below(10);
    std::vector<double> y(n);
    for (auto& v : y) v = rng.next_double();
    const auto fit = cautious::pava_isotonic(y);
    const auto best = oracle::brute_isotonic(y);
    for (std::size_t i = 0; i < n; ++i)
      CHECK(std::fabs(fit.fitted[i] - best.fitted[i]) < 1e-9);
  }
}

// ---------------------------------------------------------------------------
// Logistic (Platt) calibration
// ---------------------------------------------------------------------------

TEST_CASE("platt_fit: antisymmetric two-point set pins the midpoint") {
  const std::vector<double> z{-1.0, 1.0};
  const auto targets = cautious::label_smooth(bits({0, 1}), 0.02);
  CHECK(targets == std::vector<double>{0.01, 0.99});
  const auto params = cautious::platt_fit(z, targets);
  CHECK(std::fabs(params.intercept) < 1e-6);
  CHECK(params.slope > 0.0);
  CHECK(std::fabs(cautious::platt_predict(params, 0.0) - 0.5) < 1e-9);
}

TEST_CASE("platt_fit recovers realizable parameters exactly") {
  std::vector<double> z(50), targets(50);
  for (int i = 0; i < 50; ++i) {
    z[std::size_t(i)] = -2.0 + 4.0 * i / 49.0;
    targets[std::size_t(i)] = oracle::sigmoid(3.0 * z[std::size_t(i)] - 1.0);
  }
  const auto params = cautious::platt_fit(z, targets);
  CHECK(std::fabs(params.slope - 3.0) < 1e-6);
  CHECK(std::fabs(params.intercept + 1.0) < 1e-6);
}

TEST_CASE("platt_fit: constant 0.5 targets flatten the curve") {
  const std::vector<double> z{-2.0, -0.5, 0.3, 1.7};
  const std::vector<double> targets(4, 0.5);
  const auto params = cautious::platt_fit(z, targets);
  CHECK(std::fabs(params.slope) < 1e-6);
  for (double s : z)
    CHECK(std::fabs(cautious::platt_predict(params, s) - 0.5) < 1e-8);
}

TEST_CASE("platt_fit matches a grid-search likelihood oracle") {
  const std::vector<double> z{-1.0, -0.5, 0.5, 1.0};
  const auto targets = cautious::label_smooth(bits({0, 1, 0, 1}), 0.02);
  const auto params = cautious::platt_fit(z, targets);
  const auto [gs, gi] = oracle::platt_grid_oracle(z, targets);
  for (double s : z) {
    const double mine = cautious::platt_predict(params, s);
    const double ref = oracle::sigmoid(gs * s + gi);
    CHECK(std::fabs(mine - ref) < 1e-3);
  }
  // The Newton fit should score at least as well as the grid point.
  CHECK(oracle::logistic_nll(z, targets, params.slope, params.intercept) <=
        oracle::logistic_nll(z, targets, gs, gi) + 1e-9);
}

TEST_CASE("platt_fit lands on a local optimum of the likelihood") {
  SeededRng rng(41, 0);
  std::vector<double> z(30), targets(30);
  for (std::size_t i = 0; i < 30; ++i) {
    z[i] = -1.5 + 3.0 * rng.next_double();
    targets[i] = 0.05 + 0.9 * rng.next_double();
  }
  const auto params = cautious::platt_fit(z, targets);
  const double base =
      oracle::logistic_nll(z, targets, params.slope, params.intercept);
  for (double ds : {-0.01, -0.001, 0.001, 0.01}) {
    for (double di : {-0.01, -0.001, 0.001, 0.01}) {
      CHECK(base <= oracle::logistic_nll(z, targets, params.slope + ds,
                                         params.intercept + di) +
                        1e-12);
    }
  }
  CHECK_THROWS_AS(
      cautious::platt_fit(std::vector<double>{1.0, 2.0},
                          std::vector<double>{0.5}),
      std::invalid_argument);
  CHECK_THROWS_AS(
      cautious::platt_fit(std::vector<double>{1.0, 2.0},
                          std::vector<double>{0.5, 1.5}),
      std::domain_error);
}

// ---------------------------------------------------------------------------
// Beta calibration
// ---------------------------------------------------------------------------

TEST_CASE("betacal_predict: identity parameters give the identity map") {
  const cautious::BetaCalParams id{1.0, 1.0, 0.0};
  for (double z = 0.05; z < 1.0; z += 0.05)
    CHECK(std::fabs(cautious::betacal_predict(id, z) - z) < 1e-12);
}

TEST_CASE("betacal_fit: symmetric data pins the midpoint") {
  // Invariant under (z, y) -> (1 - z, 1 - y), which swaps the two features
  // and negates the intercept, so the fit must satisfy a = b, c = 0.
  const std::vector<double> z{0.2, 0.4, 0.6, 0.8};
  const auto labels = bits({0, 1, 0, 1});
  const auto p = cautious::betacal_fit(z, labels);
  CHECK(p.a >= 0.0);
  CHECK(p.b >= 0.0);
  CHECK(std::fabs(p.a - p.b) < 1e-6);
  CHECK(std::fabs(cautious::betacal_predict(p, 0.5) - 0.5) < 1e-9);
}

TEST_CASE("betacal_fit matches a constrained grid-search oracle") {
  const std::vector<double> z{0.1, 0.3, 0.35, 0.6, 0.7, 0.9};
  const auto labels = bits({0, 1, 0, 1, 0, 1});
  const auto p = cautious::betacal_fit(z, labels);
  CHECK(p.a >= 0.0);
  CHECK(p.b >= 0.0);
  const auto ref = oracle::betacal_grid_oracle(z, labels);
  for (double s : z) {
    const double mine = cautious::betacal_predict(p, s);
    const double theirs =
        oracle::sigmoid(ref.a * std::log(s) - ref.b * std::log1p(-s) + ref.c);
    CHECK(std::fabs(mine - theirs) < 1e-2);
  }
  CHECK(oracle::betacal_nll(z, labels, p.a, p.b, p.c) <=
        oracle::betacal_nll(z, labels, ref.a, ref.b, ref.c) + 1e-6);
}

TEST_CASE("betacal_fit repairs negative coefficients down to the intercept") {
  // Anti-monotone data: 99 ones then a zero. Every slope coefficient wants
  // to be negative, so the repair chain ends at the intercept-only model
  // with c = logit(mean) = ln(99).
  std::vector<double> z = ladder(100);
  std::vector<std::uint8_t> labels(100, 1);
  labels[99] = 0;
  const auto p = cautious::betacal_fit(z, labels);
  CHECK(p.a == 0.0);
  CHECK(p.b == 0.0);
  CHECK(std::fabs(p.c - 4.59511985013459) < 1e-9);
  for (double s : {0.1, 0.5, 0.9})
    CHECK(std::fabs(cautious::betacal_predict(p, s) - 0.99) < 1e-10);
}

TEST_CASE("betacal_fit stays monotone on steeply decreasing data") {
  const std::vector<double> z = ladder(10);
  const auto labels = bits({1, 1, 1, 1, 1, 0, 0, 0, 0, 0});
  const auto p = cautious::betacal_fit(z, labels);
  CHECK(p.a >= 0.0);
  CHECK(p.b >= 0.0);
  double prev = -1.0;
  for (double s = 0.02; s < 1.0; s += 0.02) {
    const double cur = cautious::betacal_predict(p, s);
    CHECK(cur >= prev - 1e-12);
    prev = cur;
  }
}

TEST_CASE("betacal_predict is monotone whenever a, b >= 0") {
  SeededRng rng(55, 0);
  for (int trial = 0; trial < 50; ++trial) {
    const cautious::BetaCalParams p{5.0 * rng.next_double(),
                                    5.0 * rng.next_double(),
                                    -3.0 + 6.0 * rng.next_double()};
    double prev = -1.0;
    for (double z = 0.01; z < 1.0; z += 0.01) {
      const double cur = cautious::betacal_predict(p, z);
      CHECK(cur >= prev - 1e-12);
      prev = cur;
    }
  }
}

TEST_CASE("betacal_fit clamps boundary scores instead of failing") {
  const std::vector<double> z{0.0, 0.3, 0.7, 1.0, 0.5, 0.6};
  const auto labels = bits({0, 1, 0, 1, 1, 0});
  const auto p = cautious::betacal_fit(z, labels);  // warns, must not throw
  CHECK(std::isfinite(p.a));
  CHECK(std::isfinite(p.b));
  CHECK(std::isfinite(p.c));
}

// ---------------------------------------------------------------------------
// Label smoothing
// ---------------------------------------------------------------------------

TEST_CASE("label_smooth formula") {
  CHECK(cautious::label_smooth(bits({0, 1}), 0.0) ==
        std::vector<double>{0.0, 1.0});
  CHECK(cautious::label_smooth(bits({0, 1}), 0.02) ==
        std::vector<double>{0.01, 0.99});
  // 0.9 + 0.05 lands one ulp above the 0.95 literal, so compare with slack.
  for (const double v : cautious::label_smooth(bits({1, 1, 1}), 0.1))
    CHECK(std::fabs(v - 0.95) < 1e-15);
  CHECK_THROWS_AS(cautious::label_smooth(bits({0, 1}), -0.1),
                  std::domain_error);
  CHECK_THROWS_AS(cautious::label_smooth(bits({0, 2}), 0.1),
                  std::domain_error);
}

// ---------------------------------------------------------------------------
// SVA
// ---------------------------------------------------------------------------

TEST_CASE("sva_lower hand examples") {
  const auto scores3 = ladder(3);
  const auto all_ones = cautious::sva_lower(bits({1, 1, 1}), scores3);
  all_ones.check();
  CHECK(all_ones.defined_from == 0);
  CHECK(all_ones.method == "sva");
  CHECK(std::fabs(all_ones.value(0) - 0.5) < 1e-12);
  CHECK(std::fabs(all_ones.value(1) - 2.0 / 3.0) < 1e-12);
  CHECK(std::fabs(all_ones.value(2) - 0.75) < 1e-12);

  const auto all_zeros = cautious::sva_lower(bits({0, 0, 0, 0}), ladder(4));
  for (std::size_t i = 0; i < 4; ++i) CHECK(all_zeros.value(i) == 0.0);
}

TEST_CASE("sva_lower equals the naive per-position oracle") {
  SeededRng rng(60, 0);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t n = 1 + rng.next_below(50);
    std::vector<std::uint8_t> labels(n);
    for (auto& l : labels) l = rng.bernoulli(0.6) ? 1 : 0;
    const auto scores = ladder(n);
    const auto map = cautious::sva_lower(labels, scores);
    const auto want = oracle::sva_naive(
        std::vector<std::uint8_t>(labels.begin(), labels.end()), scores);
    for (std::size_t i = 0; i < n; ++i)
      CHECK(std::fabs(map.value(i) - want[i]) < 1e-12);
  }
}

TEST_CASE("sva_lower places the inserted zero after score ties") {
  const std::vector<double> scores{0.1, 0.2, 0.2, 0.3};
  const auto labels = bits({1, 1, 0, 1});
  const auto map = cautious::sva_lower(labels, scores);
  const auto want = oracle::sva_naive(
      std::vector<std::uint8_t>(labels.begin(), labels.end()), scores);
  for (std::size_t i = 0; i < 4; ++i)
    CHECK(std::fabs(map.value(i) - want[i]) < 1e-12);
  CHECK_THROWS_AS(
      cautious::sva_lower(labels, std::vector<double>{0.3, 0.2, 0.2, 0.1}),
      std::invalid_argument);
}

TEST_CASE("sva_lower never exceeds the plain isotonic fit") {
  SeededRng rng(61, 0);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 2 + rng.next_below(60);
    std::vector<std::uint8_t> labels(n);
    for (auto& l : labels) l = rng.bernoulli(0.7) ? 1 : 0;
    std::vector<double> as_doubles(labels.begin(), labels.end());
    const auto iso = cautious::pava_isotonic(as_doubles);
    const auto map = cautious::sva_lower(labels, ladder(n));
    for (std::size_t i = 0; i < n; ++i)
      CHECK(map.value(i) <= iso.fitted[i] + 1e-12);
  }
}

// ---------------------------------------------------------------------------
// isobins + CP
// ---------------------------------------------------------------------------

TEST_CASE("isobins_cp hand examples") {
  const auto pooled = cautious::isobins_cp(bits({1, 0}), 0.99);
  pooled.check();
  CHECK(pooled.defined_from == 0);
  const double want = cautious::cp_lower_bound(1, 2, 0.99);
  CHECK(pooled.value(0) == want);
  CHECK(pooled.value(1) == want);

  const auto zeros = cautious::isobins_cp(bits({0, 0, 0}), 0.9);
  for (std::size_t i = 0; i < 3; ++i) CHECK(zeros.value(i) == 0.0);

  const auto steps = cautious::isobins_cp(bits({0, 0, 1, 1}), 0.99);
  CHECK(steps.value(0) == 0.0);
  CHECK(steps.value(1) == 0.0);
  CHECK(std::fabs(steps.value(2) - 0.1) < 1e-12);
  CHECK(std::fabs(steps.value(3) - 0.1) < 1e-12);
}

TEST_CASE("isobins_cp is strictly below occupied bins, zero on empty ones") {
  SeededRng rng(62, 0);
  for (int trial = 0; trial < 25; ++trial) {
    const std::size_t n = 2 + rng.next_below(80);
    std::vector<std::uint8_t> labels(n);
    for (auto& l : labels) l = rng.bernoulli(0.5) ? 1 : 0;
    std::vector<double> as_doubles(labels.begin(), labels.end());
    const auto iso = cautious::pava_isotonic(as_doubles);
    const auto map = cautious::isobins_cp(labels, 0.9);
    for (const auto& bin : iso.bins) {
      for (std::size_t i = bin.begin; i < bin.end; ++i) {
        if (bin.value > 0.0)
          CHECK(map.value(i) < bin.value);
        else
          CHECK(map.value(i) == 0.0);
      }
    }
  }
}

// ---------------------------------------------------------------------------
// RCIR + CP
// ---------------------------------------------------------------------------

TEST_CASE("rcir_cp merges wide bins and stops at narrow ones") {
  // (0, 1) makes two singleton bins whose posterior width is
  // sqrt(0.975) - sqrt(0.025) ~ 0.8293. A threshold above that keeps the
  // isotonic bins; below it, the bins merge into one.
  const auto kept = cautious::rcir_cp(bits({0, 1}), 0.99, 0.83);
  CHECK(kept.value(0) == 0.0);
  CHECK(std::fabs(kept.value(1) - 0.01) < 1e-12);

  const auto merged = cautious::rcir_cp(bits({0, 1}), 0.99, 0.82);
  const double pooled = cautious::cp_lower_bound(1, 2, 0.99);
  CHECK(merged.value(0) == pooled);
  CHECK(merged.value(1) == pooled);

  // Spec example: threshold 0.5 also forces the merge.
  const auto spec_case = cautious::rcir_cp(bits({0, 1}), 0.99, 0.5);
  CHECK(spec_case.value(0) == pooled);
  CHECK(spec_case.value(1) == pooled);
}

TEST_CASE("rcir_cp leaves tight bins alone") {
  // One huge all-ones bin: posterior width is tiny, nothing merges.
  const std::vector<std::uint8_t> ones(10000, 1);
  const auto map = cautious::rcir_cp(ones, 0.99, 0.05);
  const auto iso = cautious::isobins_cp(ones, 0.99);
  const double want = std::pow(0.01, 1.0 / 10000.0);
  for (std::size_t i : {std::size_t(0), std::size_t(5000), std::size_t(9999)}) {
    CHECK(std::fabs(map.value(i) - want) < 1e-10);
    CHECK(map.value(i) == iso.value(i));
  }
}

TEST_CASE("rcir_cp with threshold 1.0 equals isobins_cp") {
  SeededRng rng(63, 0);
  for (int trial = 0; trial < 25; ++trial) {
    const std::size_t n = 1 + rng.next_below(60);
    std::vector<std::uint8_t> labels(n);
    for (auto& l : labels) l = rng.bernoulli(0.5) ? 1 : 0;
    const auto rcir = cautious::rcir_cp(labels, 0.9, 1.0);
    const auto iso = cautious::isobins_cp(labels, 0.9);
    for (std::size_t i = 0; i < n; ++i)
      CHECK(rcir.value(i) == iso.value(i));
  }
}

TEST_CASE("rcir_cp argument checks and method tags") {
  CHECK_THROWS_AS(cautious::rcir_cp(bits({0, 1}), 0.99, 0.0),
                  std::domain_error);
  CHECK_THROWS_AS(cautious::rcir_cp(bits({0, 1}), 1.0, 0.5),
                  std::domain_error);
  CHECK_THROWS_AS(cautious::isobins_cp(bits({0, 1}), 0.0),
                  std::domain_error);
  const auto map = cautious::rcir_cp(bits({0, 1, 1}), 0.9, 0.5);
  CHECK(map.method == "rcir_cp");
  CHECK(map.config.find("width_threshold") != std::string::npos);
  const auto iso = cautious::isobins_cp(bits({0, 1, 1}), 0.9);
  CHECK(iso.method == "isobins_cp");
}
