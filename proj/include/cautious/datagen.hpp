#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "cautious/rng.hpp"

namespace cautious {

// Monotone ground-truth calibration map over n score positions.
struct TrueCalibrationMap {
  std::vector<double> probs;  // non-decreasing, each inside [lo, hi]
  double lo = 0.9;
  double hi = 1.0;

  std::size_t size() const { return probs.size(); }
  void check() const;  // validates bounds and monotonicity
};

// One sampled data set: fixed scores plus labels drawn from a truth map.
struct CalibrationSet {
  std::vector<double> scores;        // i/(n+1), strictly increasing
  std::vector<std::uint8_t> labels;  // label_i ~ Bernoulli(probs_i)

  std::size_t size() const { return labels.size(); }
};

// Recursive pivot construction: pick an index uniformly, draw its value
// uniformly inside the current [lo, hi], then fill the right half within
// [value, hi] and the left half within [lo, value]. Monotone by
// construction; the draw order (pivot index, pivot value, right half before
// left half) is fixed so a (seed, stream) pair pins the exact map.
TrueCalibrationMap gen_true_map(std::size_t n, double lo, double hi,
                                SeededRng& rng);

// Labels drawn independently per position from the truth map.
CalibrationSet sample_calibration_set(const TrueCalibrationMap& map,
                                      SeededRng& rng);

// The fixed score ladder i/(n+1) for i = 1..n.
std::vector<double> position_scores(std::size_t n);

}  // namespace cautious
