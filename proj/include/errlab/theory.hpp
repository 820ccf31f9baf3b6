// Closed-form variance results for replicate averaging and transformed
// measurement error, with Monte Carlo checks.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "errlab/errors.hpp"
#include "errlab/moments.hpp"
#include "errlab/rng.hpp"

namespace errlab {

// Variance of the mean of k iid errors with variance sigma2.
inline double averaged_error_variance(double sigma2, std::size_t k) {
  if (k == 0) throw DomainError("averaged_error_variance: k must be positive");
  if (sigma2 < 0) throw DomainError("averaged_error_variance: sigma2 must be >= 0");
  return sigma2 / static_cast<double>(k);
}

// The log-scale variance s of a single multiplicative lognormal error whose
// natural-scale variance matches the mean of k lognormal(0, sigma2) errors:
// solve (e^s - 1) e^s = (e^{sigma2} - 1) e^{sigma2} / k for s, the positive
// root of a quadratic in e^s.
inline double equivalent_lognormal_variance(double sigma2, std::size_t k) {
  if (k == 0) throw DomainError("equivalent_lognormal_variance: k must be positive");
  if (sigma2 < 0) throw DomainError("equivalent_lognormal_variance: sigma2 must be >= 0");
  const double c = (std::exp(sigma2) - 1.0) * std::exp(sigma2) / static_cast<double>(k);
  return std::log(0.5 * (1.0 + std::sqrt(1.0 + 4.0 * c)));
}

// An alternative closed form that circulates for the same quantity, differing
// by a constant shift inside the logarithm. It does not satisfy the k = 1
// identity (it gives log(e^{sigma2} + 1/2) there), so it is reported for
// comparison only, never used in computations.
inline double equivalent_lognormal_variance_alt_form(double sigma2, std::size_t k) {
  if (k == 0) throw DomainError("equivalent_lognormal_variance_alt_form: k must be positive");
  const double kk = static_cast<double>(k);
  const double inner = (kk - 4.0 * std::exp(sigma2) + 4.0 * std::exp(2.0 * sigma2)) / kk;
  return std::log(0.5 * std::sqrt(inner) + 1.0);
}

// var(X | mean of k surrogates) under jointly Gaussian X and additive error:
// sigma_V2 sigma_X2 / (sigma_V2 + k sigma_X2).
inline double conditional_truth_variance(double sigma_V2, double sigma_X2, std::size_t k) {
  if (k == 0) throw DomainError("conditional_truth_variance: k must be positive");
  if (sigma_V2 < 0 || sigma_X2 < 0)
    throw DomainError("conditional_truth_variance: variances must be >= 0");
  const double denom = sigma_V2 + static_cast<double>(k) * sigma_X2;
  if (denom == 0.0) return 0.0;
  return sigma_V2 * sigma_X2 / denom;
}

// Irreducible prediction error floor: sigma_Y2 + C1/k + C2/n^{1-delta}.
inline double prediction_floor(double sigma_Y2, double c1, double c2, double delta,
                               std::size_t n, std::size_t k) {
  if (n == 0 || k == 0) throw DomainError("prediction_floor: n and k must be positive");
  if (delta < 0.0 || delta >= 1.0) throw DomainError("prediction_floor: delta must lie in [0, 1)");
  return sigma_Y2 + c1 / static_cast<double>(k) +
         c2 / std::pow(static_cast<double>(n), 1.0 - delta);
}

enum class TaylorMode { transform_of_average, average_of_transform };

// Series approximation to the conditional variance of either f(Omega + mean
// of errors) or the mean of f(Omega + error_i), built from the Taylor
// expansion of f at Omega. f_derivatives[r-1] holds f^{(r)}(Omega). The
// cross-moment bracket uses the standard normal central moments (odd orders
// vanish, even order m contributes (m-1)!! sigma^m).
inline double taylor_variance(const std::vector<double>& f_derivatives, double sigma,
                              std::size_t k, TaylorMode mode, int truncation) {
  if (k == 0) throw DomainError("taylor_variance: k must be positive");
  if (sigma < 0) throw DomainError("taylor_variance: sigma must be >= 0");
  if (truncation < 1) throw DomainError("taylor_variance: truncation must be >= 1");
  const int r_max = std::min<int>(truncation, static_cast<int>(f_derivatives.size()));
  const double kk = static_cast<double>(k);
  const double sig_eff = mode == TaylorMode::transform_of_average ? sigma / std::sqrt(kk) : sigma;

  // Precompute f^{(r)}(Omega) / r!.
  std::vector<double> coef(r_max + 1, 0.0);
  double fact = 1.0;
  for (int r = 1; r <= r_max; ++r) {
    fact *= r;
    coef[r] = f_derivatives[r - 1] / fact;
  }

  double acc = 0.0;
  for (int r = 1; r <= r_max; ++r) {
    for (int rp = 1; rp <= r_max; ++rp) {
      const double joint = normal_central_moment(r + rp, sig_eff);
      const double sep =
          normal_central_moment(r, sig_eff) * normal_central_moment(rp, sig_eff);
      acc += coef[r] * coef[rp] * (joint - sep);
    }
  }
  if (mode == TaylorMode::average_of_transform) acc /= kk;
  return acc;
}

// Monte Carlo variance estimate with a moment-based standard error.
struct VarianceReport {
  double analytic = 0.0;
  double monte_carlo = 0.0;
  double mc_standard_error = 0.0;
  std::size_t draws = 0;
};

namespace detail {

// Sample variance plus its standard error sqrt((m4 - v^2)/N).
inline std::pair<double, double> variance_with_se(const std::vector<double>& xs) {
  const std::size_t n = xs.size();
  double mean = 0.0;
  for (double v : xs) mean += v;
  mean /= static_cast<double>(n);
  double m2 = 0.0, m4 = 0.0;
  for (double v : xs) {
    const double d = v - mean;
    m2 += d * d;
    m4 += d * d * d * d;
  }
  m2 /= static_cast<double>(n);
  m4 /= static_cast<double>(n);
  const double se = std::sqrt(std::max(0.0, m4 - m2 * m2) / static_cast<double>(n));
  return {m2 * static_cast<double>(n) / static_cast<double>(n - 1), se};
}

}  // namespace detail

enum class LemmaFn { identity, exp_fn, square, cube };

inline std::string lemma_fn_name(LemmaFn f) {
  switch (f) {
    case LemmaFn::identity: return "identity";
    case LemmaFn::exp_fn: return "exp";
    case LemmaFn::square: return "square";
    case LemmaFn::cube: return "cube";
  }
  throw DomainError("lemma_fn_name: bad enum");
}

inline LemmaFn lemma_fn_from(const std::string& s) {
  if (s == "identity") return LemmaFn::identity;
  if (s == "exp") return LemmaFn::exp_fn;
  if (s == "square") return LemmaFn::square;
  if (s == "cube") return LemmaFn::cube;
  throw DomainError("unknown lemma function: " + s);
}

inline double lemma_fn_eval(LemmaFn f, double x) {
  switch (f) {
    case LemmaFn::identity: return x;
    case LemmaFn::exp_fn: return std::exp(x);
    case LemmaFn::square: return x * x;
    case LemmaFn::cube: return x * x * x;
  }
  return x;
}

// Exact conditional variance of f(Omega + e) for e ~ N(0, sigma2), by moment
// algebra (lognormal moments for exp, normal moment expansion for the
// polynomials).
inline double lemma_fn_variance(LemmaFn f, double omega, double sigma2) {
  switch (f) {
    case LemmaFn::identity:
      return sigma2;
    case LemmaFn::exp_fn:
      return std::exp(2.0 * omega) * (std::exp(sigma2) - 1.0) * std::exp(sigma2);
    case LemmaFn::square:
      return 4.0 * omega * omega * sigma2 + 2.0 * sigma2 * sigma2;
    case LemmaFn::cube: {
      const double o2 = omega * omega;
      return 9.0 * o2 * o2 * sigma2 + 36.0 * o2 * sigma2 * sigma2 +
             15.0 * sigma2 * sigma2 * sigma2;
    }
  }
  throw DomainError("lemma_fn_variance: bad enum");
}

// Simulates both sides of the replicate-averaging inequality at a fixed
// truth Omega: var[f(Omega + mean of errors)] against var[(1/k) sum of
// f(Omega + error_j)]. Returns the two variance reports and whether the
// inequality holds within 3 combined standard errors.
inline std::tuple<VarianceReport, VarianceReport, bool> lemma1_check(
    LemmaFn f, double omega, double sigma, std::size_t k, std::size_t draws,
    RngState& rng) {
  if (k == 0 || draws < 2) throw DomainError("lemma1_check: k and draws must be positive");
  if (sigma < 0) throw DomainError("lemma1_check: sigma must be >= 0");
  std::vector<double> side_a(draws), side_b(draws);
  for (std::size_t d = 0; d < draws; ++d) {
    double sum_eps = 0.0, sum_f = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      const double e = rng.normal(0.0, sigma);
      sum_eps += e;
      sum_f += lemma_fn_eval(f, omega + e);
    }
    side_a[d] = lemma_fn_eval(f, omega + sum_eps / static_cast<double>(k));
    side_b[d] = sum_f / static_cast<double>(k);
  }
  const auto [va, sea] = detail::variance_with_se(side_a);
  const auto [vb, seb] = detail::variance_with_se(side_b);
  VarianceReport ra{lemma_fn_variance(f, omega, sigma * sigma / static_cast<double>(k)),
                    va, sea, draws};
  VarianceReport rb{lemma_fn_variance(f, omega, sigma * sigma) / static_cast<double>(k),
                    vb, seb, draws};
  const bool holds = va <= vb + 3.0 * std::sqrt(sea * sea + seb * seb);
  return {ra, rb, holds};
}

// Inputs for a fixed measurement-budget comparison: with budget B and k
// replicate days per person, only n = B / k people can be measured.
struct TradeoffInputs {
  std::size_t budget = 0;
  std::vector<std::size_t> days_options;

  std::size_t n_for(std::size_t k) const {
    if (k == 0) throw DomainError("TradeoffInputs: k must be positive");
    if (budget % k != 0)
      throw IndivisibleBudget("TradeoffInputs: budget is not divisible by days");
    return budget / k;
  }
};

}  // namespace errlab
