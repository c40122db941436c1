#include "ualp/rng.hpp"

#include <cmath>

namespace ualp::rng {

std::uint32_t Stream::poisson(double mean) noexcept {
  const double u = uniform();
  if (!(mean > 0.0)) return 0;
  double p = std::exp(-mean);
  double cdf = p;
  std::uint32_t k = 0;
  // Cap keeps a pathological mean from looping; far beyond any configured rate.
  while (u >= cdf && k < 10000) {
    ++k;
    p *= mean / static_cast<double>(k);
    cdf += p;
    if (p == 0.0 && static_cast<double>(k) > mean) break;
  }
  return k;
}

double Stream::kumaraswamy(double a, double b) noexcept {
  const double u = uniform();
  const double x = std::pow(1.0 - std::pow(1.0 - u, 1.0 / b), 1.0 / a);
  return std::fmin(std::fmax(x, 0.0), 1.0);
}

}  // namespace ualp::rng
