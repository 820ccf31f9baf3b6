// Gauss-Hermite quadrature for expectations over a normal distribution.
#pragma once

#include <cmath>
#include <cstddef>
#include <utility>
#include <vector>

#include "errlab/errors.hpp"

namespace errlab {

struct QuadratureRule {
  std::vector<double> nodes;    // physicists' convention: weight e^{-t^2}
  std::vector<double> weights;
};

// Nodes and weights for n-point Gauss-Hermite quadrature, found by Newton
// iteration on the Hermite recurrence. Exact for polynomials of degree
// 2n - 1. Stable well past the n = 40 default used here.
inline QuadratureRule gauss_hermite(std::size_t n) {
  if (n == 0) throw DomainError("gauss_hermite: need at least one node");
  QuadratureRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);

  const double pim4 = 0.7511255444649425;  // pi^{-1/4}
  const std::size_t m = (n + 1) / 2;
  double z = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    // Initial guesses follow the classical recipe for the largest roots and
    // step inward from there.
    if (i == 0) {
      z = std::sqrt(2.0 * n + 1.0) - 1.85575 * std::pow(2.0 * n + 1.0, -1.0 / 6.0);
    } else if (i == 1) {
      z -= 1.14 * std::pow(static_cast<double>(n), 0.426) / z;
    } else if (i == 2) {
      z = 1.86 * z - 0.86 * rule.nodes[0];
    } else if (i == 3) {
      z = 1.91 * z - 0.91 * rule.nodes[1];
    } else {
      z = 2.0 * z - rule.nodes[i - 2];
    }
    double pp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      // Orthonormal Hermite functions keep the recurrence in range.
      double p1 = pim4;
      double p2 = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        const double p3 = p2;
        p2 = p1;
        p1 = z * std::sqrt(2.0 / (j + 1.0)) * p2 -
             std::sqrt(static_cast<double>(j) / (j + 1.0)) * p3;
      }
      pp = std::sqrt(2.0 * n) * p2;
      const double dz = p1 / pp;
      z -= dz;
      if (std::abs(dz) < 1e-15) break;
    }
    rule.nodes[i] = z;
    rule.nodes[n - 1 - i] = -z;
    rule.weights[i] = 2.0 / (pp * pp);
    rule.weights[n - 1 - i] = rule.weights[i];
  }
  return rule;
}

// E[g(W)] for W ~ N(mu, sigma2) against a prebuilt rule. Throws
// NonFiniteIntegrand if g returns a non-finite value at any abscissa.
template <typename G>
double gauss_hermite_expectation(G&& g, double mu, double sigma2,
                                 const QuadratureRule& rule) {
  if (sigma2 < 0) throw DomainError("gauss_hermite_expectation: sigma2 must be >= 0");
  const double sd = std::sqrt(sigma2);
  const double inv_sqrt_pi = 0.5641895835477563;
  double acc = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    const double w = mu + std::sqrt(2.0) * sd * rule.nodes[i];
    const double gv = g(w);
    if (!std::isfinite(gv))
      throw NonFiniteIntegrand("gauss_hermite_expectation: integrand not finite");
    acc += rule.weights[i] * gv;
  }
  return acc * inv_sqrt_pi;
}

template <typename G>
double gauss_hermite_expectation(G&& g, double mu, double sigma2,
                                 std::size_t nodes = 40) {
  // Rules are pure functions of the node count; cache the common ones.
  thread_local std::size_t cached_n = 0;
  thread_local QuadratureRule cached;
  if (cached_n != nodes) {
    cached = gauss_hermite(nodes);
    cached_n = nodes;
  }
  return gauss_hermite_expectation(g, mu, sigma2, cached);
}

}  // namespace errlab
