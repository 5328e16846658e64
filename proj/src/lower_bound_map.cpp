#include "cautious/lower_bound_map.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace cautious {

LowerBoundMap LowerBoundMap::with_prefix(std::size_t n,
                                         std::size_t defined_from,
                                         std::string method,
                                         std::string config) {
  if (defined_from > n)
    throw std::invalid_argument("defined_from past the end of the map");
  LowerBoundMap map;
  map.bounds.assign(n, std::numeric_limits<double>::quiet_NaN());
  map.defined_from = defined_from;
  map.method = std::move(method);
  map.config = std::move(config);
  return map;
}

double LowerBoundMap::value(std::size_t i) const {
  if (!is_defined(i))
    throw std::out_of_range("lower bound undefined at index " +
                            std::to_string(i));
  return bounds[i];
}

void LowerBoundMap::check() const {
  if (defined_from > bounds.size())
    throw std::logic_error("defined_from past the end of the map");
  for (std::size_t i = 0; i < defined_from; ++i)
    if (!std::isnan(bounds[i]))
      throw std::logic_error("undefined prefix holds a value at index " +
                             std::to_string(i));
  for (std::size_t i = defined_from; i < bounds.size(); ++i) {
    const double v = bounds[i];
    if (!(v >= 0.0 && v <= 1.0))
      throw std::logic_error("bound outside [0, 1] at index " +
                             std::to_string(i));
  }
}

}  // namespace cautious
