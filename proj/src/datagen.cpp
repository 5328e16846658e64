#include "cautious/datagen.hpp"

#include <algorithm>
#include <stdexcept>

namespace cautious {

void TrueCalibrationMap::check() const {
  if (probs.empty()) throw std::domain_error("truth map is empty");
  if (!(0.0 <= lo && lo <= hi && hi <= 1.0))
    throw std::domain_error("truth map bounds must satisfy 0 <= lo <= hi <= 1");
  double prev = lo;
  for (double p : probs) {
    if (!(p >= prev && p <= hi))
      throw std::domain_error("truth map is not monotone within its bounds");
    prev = p;
  }
}

TrueCalibrationMap gen_true_map(std::size_t n, double lo, double hi,
                                SeededRng& rng) {
  if (n == 0) throw std::invalid_argument("map length must be positive");
  if (!(0.0 <= lo && lo <= hi && hi <= 1.0))
    throw std::domain_error("map bounds must satisfy 0 <= lo <= hi <= 1");

  TrueCalibrationMap map;
  map.lo = lo;
  map.hi = hi;
  map.probs.assign(n, 0.0);

  // Depth-first with an explicit stack; the right half of each range is
  // pushed last so it is processed first, pinning the draw order (and with
  // it the exact map for a given rng stream).
  struct Range {
    std::size_t beg, end;
    double lo, hi;
  };
  std::vector<Range> stack;
  stack.push_back({0, n, lo, hi});
  while (!stack.empty()) {
    const Range r = stack.back();
    stack.pop_back();
    if (r.beg >= r.end) continue;
    if (r.lo == r.hi) {
      std::fill(map.probs.begin() + std::ptrdiff_t(r.beg),
                map.probs.begin() + std::ptrdiff_t(r.end), r.lo);
      continue;
    }
    const std::size_t k = r.beg + rng.next_below(r.end - r.beg);
    const double v = rng.next_double_in(r.lo, r.hi);
    map.probs[k] = v;
    stack.push_back({r.beg, k, r.lo, v});
    stack.push_back({k + 1, r.end, v, r.hi});
  }
  return map;
}

CalibrationSet sample_calibration_set(const TrueCalibrationMap& map,
                                      SeededRng& rng) {
  map.check();
  const std::size_t n = map.size();
  CalibrationSet set;
  set.scores = position_scores(n);
  set.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    set.labels[i] = rng.bernoulli(map.probs[i]) ? 1 : 0;
  return set;
}

std::vector<double> position_scores(std::size_t n) {
  std::vector<double> scores(n);
  for (std::size_t i = 0; i < n; ++i)
    scores[i] = double(i + 1) / double(n + 1);
  return scores;
}

}  // namespace cautious
