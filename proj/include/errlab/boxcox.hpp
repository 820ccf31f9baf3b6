// The Box-Cox power transform and its inverse.
#pragma once

#include <cmath>
#include <limits>

#include "errlab/errors.hpp"

namespace errlab {

// (x^lambda - 1) / lambda, or ln(x) at lambda = 0. Requires x > 0.
inline double box_cox(double x, double lambda) {
  if (!(x > 0.0)) throw DomainError("box_cox: x must be positive");
  if (lambda == 0.0) return std::log(x);
  return (std::pow(x, lambda) - 1.0) / lambda;
}

// (lambda w + 1)^{1/lambda}, or e^w at lambda = 0. Requires lambda w + 1 > 0.
inline double inverse_box_cox(double w, double lambda) {
  if (lambda == 0.0) return std::exp(w);
  const double base = lambda * w + 1.0;
  if (!(base > 0.0))
    throw DomainError("inverse_box_cox: lambda * w + 1 must be positive");
  return std::pow(base, 1.0 / lambda);
}

// Inverse Box-Cox extended by its one-sided limit at the domain boundary:
// for lambda > 0 the value tends to 0 as lambda w + 1 -> 0+, so expectations
// over unbounded Gaussian support stay well defined. For lambda < 0 the limit
// diverges and the out-of-domain value is +infinity, which integration
// routines reject as non-finite.
inline double inverse_box_cox_clamped(double w, double lambda) {
  if (lambda == 0.0) return std::exp(w);
  const double base = lambda * w + 1.0;
  if (base > 0.0) return std::pow(base, 1.0 / lambda);
  return lambda > 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
}

}  // namespace errlab
