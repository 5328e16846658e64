#pragma once

#include <cmath>
#include <stdexcept>

namespace cautious {

// Checked probability value. Construction tolerates floating-point overshoot
// within kTolerance of [0, 1] and clamps it back onto the interval; anything
// further out (or NaN) is a domain error, so invalid values fail loudly at
// the boundary instead of propagating through downstream arithmetic.
class Probability {
 public:
  static constexpr double kTolerance = 1e-12;

  Probability() = default;
  Probability(double v) : v_(checked(v)) {}

  operator double() const { return v_; }
  double value() const { return v_; }

 private:
  static double checked(double v) {
    if (std::isnan(v)) throw std::domain_error("probability is NaN");
    if (v < 0.0) {
      if (v < -kTolerance) throw std::domain_error("probability below 0");
      return 0.0;
    }
    if (v > 1.0) {
      if (v > 1.0 + kTolerance) throw std::domain_error("probability above 1");
      return 1.0;
    }
    return v;
  }

  double v_ = 0.0;
};

}  // namespace cautious
