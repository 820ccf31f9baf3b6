// Scenario specifications and synthetic data generation.
//
// The generating model: covariates Z (optional), a per-person additive-scale
// level eta_l = beta_l0 + beta_lZ' Z + u_l, replicate-day measurements
// W_lj = eta_l + eps_lj, and an optional Box-Cox measurement scale with
// parameter lambda under which the observed surrogate is the inverse image
// [lambda W + 1]^{1/lambda} and the latent usual value is the conditional
// expectation of that image given eta. With lambda absent the scale is the
// identity: X*_lj = eta_l + eps_lj and X_l = eta_l, the classical additive
// error model.
#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "errlab/boxcox.hpp"
#include "errlab/dataset.hpp"
#include "errlab/errors.hpp"
#include "errlab/linalg.hpp"
#include "errlab/quadrature.hpp"
#include "errlab/rng.hpp"

namespace errlab {

enum class OutcomeForm { linear, ratio, nonlinear7 };

inline std::string outcome_form_name(OutcomeForm f) {
  switch (f) {
    case OutcomeForm::linear: return "linear";
    case OutcomeForm::ratio: return "ratio";
    case OutcomeForm::nonlinear7: return "nonlinear7";
  }
  throw DomainError("outcome_form_name: bad enum");
}

inline OutcomeForm outcome_form_from(const std::string& s) {
  if (s == "linear") return OutcomeForm::linear;
  if (s == "ratio") return OutcomeForm::ratio;
  if (s == "nonlinear7") return OutcomeForm::nonlinear7;
  throw UnknownScenario("unknown outcome_form: " + s);
}

struct ScenarioSpec {
  std::string id = "custom";
  std::size_t n = 0;
  std::size_t k = 1;
  std::size_t p = 1;
  std::size_t q = 0;
  double sigma_Y2 = 1.0;
  // Outcome coefficients. linear: (a0, a_X[p], a_Z[q]); ratio: (a0, a1);
  // nonlinear7: (a0..a6) with the third covariate entering with coefficient 1.
  std::vector<double> alpha;
  // Surrogate-level coefficients, p rows by (1 + q) columns: intercept then
  // the covariate loadings.
  Matrix beta;
  CovarianceMatrix Sigma_u;    // between-person covariance of u (p x p)
  CovarianceMatrix Sigma_eps;  // within-person day covariance (p x p)
  std::optional<double> lambda;
  std::optional<CovarianceMatrix> Sigma_Z;  // q x q when q > 0
  OutcomeForm outcome_form = OutcomeForm::linear;
  std::string link = "identity";
  std::uint64_t seed = 0;
  std::uint64_t seed_stream = 0;

  void validate() const {
    if (n == 0 || p == 0 || k == 0) throw DomainError("ScenarioSpec: n, p, k must be positive");
    if (beta.rows != p || beta.cols != 1 + q)
      throw WidthMismatch("ScenarioSpec: beta must be p x (1+q)");
    if (Sigma_u.dim() != p || Sigma_eps.dim() != p)
      throw WidthMismatch("ScenarioSpec: covariance dimensions must equal p");
    if (q > 0 && (!Sigma_Z || Sigma_Z->dim() != q))
      throw WidthMismatch("ScenarioSpec: Sigma_Z must be q x q");
    if (sigma_Y2 < 0) throw DomainError("ScenarioSpec: sigma_Y2 must be >= 0");
    if (link != "identity") throw DomainError("ScenarioSpec: only the identity link is supported");
    switch (outcome_form) {
      case OutcomeForm::linear:
        if (alpha.size() != 1 + p + q)
          throw LengthMismatch("ScenarioSpec: linear outcome needs 1+p+q coefficients");
        break;
      case OutcomeForm::ratio:
        if (p != 2 || alpha.size() != 2)
          throw LengthMismatch("ScenarioSpec: ratio outcome needs p=2 and 2 coefficients");
        break;
      case OutcomeForm::nonlinear7:
        if (p != 2 || q < 3 || alpha.size() != 7)
          throw LengthMismatch("ScenarioSpec: nonlinear7 outcome needs p=2, q>=3, 7 coefficients");
        break;
    }
  }
};

// Latent usual value on the observed scale: E[[lambda(eta+eps)+1]^{1/lambda}]
// with eps ~ N(0, sigma_eps2), by Gauss-Hermite quadrature on the inverse
// image extended by its boundary limit.
inline double true_usual_intake(double eta, std::optional<double> lambda,
                                double sigma_eps2, std::size_t nodes = 40) {
  if (!lambda) return eta;
  const double lam = *lambda;
  return gauss_hermite_expectation(
      [lam](double w) { return inverse_box_cox_clamped(w, lam); }, eta,
      sigma_eps2, nodes);
}

namespace detail {

constexpr int kMaxRedraws = 100;

inline double outcome_mean(const ScenarioSpec& spec, const double* x,
                           const double* z) {
  const std::vector<double>& a = spec.alpha;
  switch (spec.outcome_form) {
    case OutcomeForm::linear: {
      double m = a[0];
      for (std::size_t l = 0; l < spec.p; ++l) m += a[1 + l] * x[l];
      for (std::size_t c = 0; c < spec.q; ++c) m += a[1 + spec.p + c] * z[c];
      return m;
    }
    case OutcomeForm::ratio:
      return a[0] + a[1] * x[0] / x[1];
    case OutcomeForm::nonlinear7:
      return a[0] + a[1] * x[0] + a[2] * x[1] + a[3] * x[0] / x[1] +
             a[4] * std::log(x[0]) + a[5] * std::log(x[1]) +
             a[6] * std::sqrt(x[0] * x[1]) + z[2];
  }
  throw DomainError("outcome_mean: bad outcome form");
}

// Domain requirements on one individual's draw, by outcome form. The ratio
// form needs a usable denominator; the 7-term form takes logs and roots of
// both components and its averaged-surrogate pipelines take logs, so truth
// and observed values must all be positive.
inline bool draw_ok(const ScenarioSpec& spec, const double* x,
                    const std::vector<double>& w_days, bool w_in_domain) {
  if (spec.lambda && !w_in_domain) return false;
  switch (spec.outcome_form) {
    case OutcomeForm::linear:
      return true;
    case OutcomeForm::ratio:
      return x[1] > 0.0;
    case OutcomeForm::nonlinear7: {
      if (!(x[0] > 0.0) || !(x[1] > 0.0)) return false;
      for (double w : w_days)
        if (!(w > 0.0)) return false;
      return true;
    }
  }
  return false;
}

}  // namespace detail

// Draws a complete Dataset from the scenario. Individuals violating a domain
// requirement (Box-Cox range, positive ratio denominators, positive values
// under logs) are redrawn up to 100 times keeping their covariates; a still-
// failing individual raises NonPositiveTruth for truth-positivity violations
// and DomainError otherwise.
inline Dataset generate(const ScenarioSpec& spec, RngState& rng) {
  spec.validate();
  Dataset ds = Dataset::sized(spec.n, spec.p, spec.k, spec.q);
  if (spec.lambda) ds.x_star_additive.assign(spec.n * spec.p * spec.k, 0.0);
  ds.x_true.assign(spec.n * spec.p, 0.0);

  const Matrix lu = cholesky(spec.Sigma_u);
  const Matrix le = cholesky(spec.Sigma_eps);
  const Matrix lz = spec.q > 0 ? cholesky(*spec.Sigma_Z) : Matrix();

  std::vector<double> zrow(spec.q, 0.0), u(spec.p), eta(spec.p), x(spec.p);
  std::vector<double> norms(spec.p);
  std::vector<double> w_all(spec.p * spec.k);
  const double sd_y = std::sqrt(spec.sigma_Y2);

  std::vector<double> zn(spec.q);
  for (std::size_t i = 0; i < spec.n; ++i) {
    // Z ~ N(0, Sigma_Z); kept fixed across redraws of the same individual.
    if (spec.q > 0) {
      for (std::size_t c = 0; c < spec.q; ++c) zn[c] = rng.normal();
      for (std::size_t r = 0; r < spec.q; ++r) {
        double s = 0.0;
        for (std::size_t c = 0; c <= r; ++c) s += lz(r, c) * zn[c];
        zrow[r] = s;
      }
    }

    bool ok = false;
    for (int attempt = 0; attempt < detail::kMaxRedraws && !ok; ++attempt) {
      for (std::size_t l = 0; l < spec.p; ++l) norms[l] = rng.normal();
      for (std::size_t l = 0; l < spec.p; ++l) {
        double s = 0.0;
        for (std::size_t c = 0; c <= l; ++c) s += lu(l, c) * norms[c];
        u[l] = s;
      }
      for (std::size_t l = 0; l < spec.p; ++l) {
        eta[l] = spec.beta(l, 0) + u[l];
        for (std::size_t c = 0; c < spec.q; ++c) eta[l] += spec.beta(l, 1 + c) * zrow[c];
      }
      bool w_in_domain = true;
      for (std::size_t j = 0; j < spec.k; ++j) {
        for (std::size_t l = 0; l < spec.p; ++l) norms[l] = rng.normal();
        for (std::size_t l = 0; l < spec.p; ++l) {
          double s = 0.0;
          for (std::size_t c = 0; c <= l; ++c) s += le(l, c) * norms[c];
          const double w = eta[l] + s;
          w_all[l * spec.k + j] = w;
          if (spec.lambda && !(*spec.lambda * w + 1.0 > 0.0)) w_in_domain = false;
        }
      }
      for (std::size_t l = 0; l < spec.p; ++l)
        x[l] = spec.lambda
                   ? true_usual_intake(eta[l], spec.lambda, spec.Sigma_eps(l, l))
                   : eta[l];

      std::vector<double> observed;
      if (spec.outcome_form == OutcomeForm::nonlinear7) {
        observed.reserve(spec.p * spec.k);
        for (double w : w_all)
          observed.push_back(spec.lambda && *spec.lambda * w + 1.0 > 0.0
                                 ? inverse_box_cox(w, *spec.lambda)
                                 : w);
      }
      ok = detail::draw_ok(spec, x.data(), observed, w_in_domain);
    }
    if (!ok) {
      if (spec.outcome_form == OutcomeForm::nonlinear7)
        throw NonPositiveTruth("generate: individual kept a non-positive component after redraws");
      throw DomainError("generate: individual kept an out-of-domain draw after redraws");
    }

    for (std::size_t c = 0; c < spec.q; ++c) ds.z(i, c) = zrow[c];
    for (std::size_t l = 0; l < spec.p; ++l) {
      ds.xtrue(i, l) = x[l];
      for (std::size_t j = 0; j < spec.k; ++j) {
        const double w = w_all[l * spec.k + j];
        if (spec.lambda) {
          ds.xstar_additive(i, l, j) = w;
          ds.xstar(i, l, j) = inverse_box_cox(w, *spec.lambda);
        } else {
          ds.xstar(i, l, j) = w;
        }
      }
    }
    ds.y[i] = detail::outcome_mean(spec, x.data(), zrow.data()) +
              (sd_y > 0.0 ? rng.normal(0.0, sd_y) : 0.0);
  }
  ds.validate();
  return ds;
}

// Named entry points for the two published designs.
inline Dataset generate_ratio_scenario(const ScenarioSpec& spec, RngState& rng) {
  if (spec.outcome_form != OutcomeForm::ratio)
    throw UnknownScenario("generate_ratio_scenario: spec is not a ratio scenario");
  return generate(spec, rng);
}

inline Dataset generate_sim3_scenario(const ScenarioSpec& spec, RngState& rng) {
  if (spec.outcome_form != OutcomeForm::nonlinear7)
    throw UnknownScenario("generate_sim3_scenario: spec is not a nonlinear7 scenario");
  return generate(spec, rng);
}

struct PaperOverrides {
  std::optional<std::size_t> k;
  std::optional<std::size_t> n;
  std::optional<std::size_t> budget;    // sim2: n = budget / k
  std::optional<int> scenario;          // sim3: 1 or 2
  std::optional<std::uint64_t> seed;
};

// Canonical study configurations. "sim1": two-component ratio outcome with a
// Box-Cox measurement scale (lambda 0.35). "sim2": the same design with
// lambda 0.5 and n tied to a measurement budget. "sim3": covariate-driven
// components with the 7-term nonlinear outcome in two coefficient regimes.
inline ScenarioSpec make_paper_spec(const std::string& which,
                                    const PaperOverrides& ov = {}) {
  ScenarioSpec s;
  const auto cov2 = [](double a, double b, double c) {
    CovarianceMatrix m(2);
    m.set(0, 0, a);
    m.set(1, 0, b);
    m.set(1, 1, c);
    return m;
  };
  if (which == "sim1" || which == "sim2") {
    s.id = which;
    s.p = 2;
    s.q = 0;
    s.k = ov.k.value_or(2);
    s.sigma_Y2 = 1.0;
    s.alpha = {98.5, 4.0};
    s.beta = Matrix(2, 1);
    s.beta(0, 0) = 36.0;
    s.beta(1, 0) = 27.5;
    s.Sigma_u = cov2(20.0, 15.5, 25.5);
    s.Sigma_eps = cov2(38.0, 20.5, 34.5);
    s.outcome_form = OutcomeForm::ratio;
    if (which == "sim1") {
      s.lambda = 0.35;
      s.n = ov.n.value_or(12000);
    } else {
      s.lambda = 0.5;
      const std::size_t budget = ov.budget.value_or(60000);
      if (budget % s.k != 0)
        throw IndivisibleBudget("make_paper_spec: budget not divisible by days");
      s.n = ov.n.value_or(budget / s.k);
    }
  } else if (which == "sim3") {
    const int scen = ov.scenario.value_or(1);
    if (scen != 1 && scen != 2)
      throw UnknownScenario("make_paper_spec: sim3 scenario must be 1 or 2");
    s.id = "sim3-" + std::to_string(scen);
    s.p = 2;
    s.q = 4;
    s.k = ov.k.value_or(2);
    s.n = ov.n.value_or(40000);
    s.sigma_Y2 = 1.0;
    s.outcome_form = OutcomeForm::nonlinear7;
    CovarianceMatrix sz(4);
    const double zvals[4][4] = {{1.28, 0.21, -0.07, 0.32},
                                {0.21, 1.98, 1.28, 0.34},
                                {-0.07, 1.28, 1.91, 1.22},
                                {0.32, 0.34, 1.22, 1.20}};
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j <= i; ++j) sz.set(i, j, zvals[i][j]);
    s.Sigma_Z = sz;
    s.Sigma_u = cov2(20.0, 15.5, 25.5);
    s.Sigma_eps = cov2(38.0, 20.5, 34.5);
    s.beta = Matrix(2, 5);
    if (scen == 1) {
      s.alpha = {350.0, 2.0, -1.0, 3.0, 2.0, 1.0, -4.0};
      const double b[2][5] = {{100.0, 2.0, 0.0, -1.0, 0.5},
                              {100.0, 0.0, 2.0, 1.0, -0.5}};
      for (int r = 0; r < 2; ++r)
        for (int c = 0; c < 5; ++c) s.beta(r, c) = b[r][c];
    } else {
      s.alpha = {350.0, 1.0, -1.0, 50.0, 25.0, 25.0, -1.0};
      const double b[2][5] = {{50.0, 2.0, 0.0, -1.0, 0.5},
                              {50.0, 0.0, 2.0, 1.0, -0.5}};
      for (int r = 0; r < 2; ++r)
        for (int c = 0; c < 5; ++c) s.beta(r, c) = b[r][c];
    }
  } else {
    throw UnknownScenario("make_paper_spec: unknown scenario " + which);
  }
  if (ov.seed) s.seed = *ov.seed;
  s.validate();
  return s;
}

// Marks a fraction of second days absent (values NaN behind the mask); used
// to synthesize missingness for the two-day analysis workflow.
inline Dataset inject_missing_second_day(Dataset ds, double fraction, RngState& rng) {
  if (ds.k != 2) throw DomainError("inject_missing_second_day: needs k = 2");
  if (fraction < 0.0 || fraction > 1.0)
    throw DomainError("inject_missing_second_day: fraction out of range");
  for (std::size_t i = 0; i < ds.n; ++i) {
    if (rng.uniform01() < fraction) {
      ds.set_present(i, 1, false);
      for (std::size_t l = 0; l < ds.p; ++l) {
        ds.xstar(i, l, 1) = std::numeric_limits<double>::quiet_NaN();
        if (ds.has_additive_view())
          ds.xstar_additive(i, l, 1) = std::numeric_limits<double>::quiet_NaN();
      }
    }
  }
  return ds;
}

}  // namespace errlab
