#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace cautious {

// Risk stakes grow polynomially with exponent l (> 1): committing to risk
// xi pays xi on success and costs xi^l on failure. The cap keeps -xi^l
// finite in floating point as the success probability approaches 1.
inline constexpr double kDefaultRiskCap = 1e6;

// Realized payoff for a single outcome y in {0, 1}.
inline double outcome(int y, double xi, double l) {
  return y ? xi : -std::pow(xi, l);
}

// Risk that maximizes expected payoff when the success probability is c:
// (c / (l*(1-c)))^(1/(l-1)), clamped to cap. Degenerate edges are errors:
// the optimum diverges at c = 1 and the payoff has no interior maximum for
// l <= 1.
inline double optimal_risk(double c, double l, double cap = kDefaultRiskCap) {
  if (!(l > 1.0)) throw std::domain_error("risk exponent l must exceed 1");
  if (c == 1.0) throw std::domain_error("optimal risk diverges at c = 1");
  if (!(c >= 0.0 && c < 1.0))
    throw std::domain_error("success probability must lie in [0, 1)");
  if (c == 0.0) return 0.0;
  return std::min(std::pow(c / (l * (1.0 - c)), 1.0 / (l - 1.0)), cap);
}

// Expected payoff of committing to risk xi when the true success
// probability is c_true.
inline double expected_outcome(double c_true, double xi, double l) {
  return xi * c_true - std::pow(xi, l) * (1.0 - c_true);
}

}  // namespace cautious
