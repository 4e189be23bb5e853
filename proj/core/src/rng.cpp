#include "knowsite/rng.hpp"

#include <cmath>

namespace knowsite {

size_t zipf_index(Rng& rng, size_t n, double exponent) {
  double total = 0.0;
  for (size_t i = 0; i < n; ++i) {
    total += 1.0 / std::pow(static_cast<double>(i + 1), exponent);
  }
  double u = rng.uniform() * total;
  for (size_t i = 0; i < n; ++i) {
    u -= 1.0 / std::pow(static_cast<double>(i + 1), exponent);
    if (u <= 0.0) return i;
  }
  return n - 1;
}

}  // namespace knowsite
