// Double factorials and central moments of the normal distribution.
#pragma once

#include <cmath>
#include <cstdint>

#include "errlab/errors.hpp"

namespace errlab {

// m!! for m >= -1, with (-1)!! = 0!! = 1. Overflows past m = 33.
inline std::uint64_t double_factorial(int m) {
  if (m < -1) throw DomainError("double_factorial: m must be >= -1");
  if (m > 33) throw DomainError("double_factorial: result exceeds 64 bits");
  std::uint64_t r = 1;
  for (int i = m; i > 1; i -= 2) r *= static_cast<std::uint64_t>(i);
  return r;
}

// E[(X - mu)^order] for X ~ N(mu, sigma^2): zero for odd order, and
// sigma^order (order-1)!! for even order. Computed in floating point so high
// orders do not overflow.
inline double normal_central_moment(int order, double sigma) {
  if (order < 0) throw DomainError("normal_central_moment: order must be >= 0");
  if (sigma < 0) throw DomainError("normal_central_moment: sigma must be >= 0");
  if (order == 0) return 1.0;
  if (order % 2 == 1) return 0.0;
  double r = 1.0;
  for (int i = order - 1; i > 1; i -= 2) r *= static_cast<double>(i);
  return r * std::pow(sigma, order);
}

}  // namespace errlab
