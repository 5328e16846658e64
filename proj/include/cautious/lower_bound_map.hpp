#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace cautious {

// Per-position lower bounds on the true calibration map. Window-based
// estimators cannot see a full window near the start of the sequence, so
// positions before defined_from carry an explicit sentinel (NaN), never a
// zero, and value() refuses to read them — downstream metrics cannot
// silently count unestimated positions.
struct LowerBoundMap {
  std::vector<double> bounds;    // NaN below defined_from, estimates after
  std::size_t defined_from = 0;  // first index (0-based) with an estimate
  std::string method;            // estimator tag, e.g. "htlb_cp"
  std::string config;            // key=value snapshot of the knobs used
  bool cut = false;              // clamped to a ceiling after estimation
  bool mono = false;             // non-increasing-to-the-right repaired

  // n entries, the first defined_from of them set to the sentinel.
  static LowerBoundMap with_prefix(std::size_t n, std::size_t defined_from,
                                   std::string method, std::string config);

  std::size_t size() const { return bounds.size(); }

  bool is_defined(std::size_t i) const {
    return i >= defined_from && i < bounds.size();
  }

  // Bound at index i; throws std::out_of_range on undefined positions.
  double value(std::size_t i) const;

  // Validates the sentinel layout and that defined entries lie in [0, 1].
  void check() const;
};

}  // namespace cautious
