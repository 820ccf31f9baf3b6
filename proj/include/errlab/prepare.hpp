// Replicate-handling pipelines, standardization, imputation, splitting.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "errlab/boxcox.hpp"
#include "errlab/dataset.hpp"
#include "errlab/errors.hpp"
#include "errlab/rng.hpp"

namespace errlab {

struct ColumnMeta {
  std::string label;
  std::string source;   // "avg", "day", "tavg", "z", "had_second_day", ...
  int component = -1;   // 0-based component index when applicable
  int day = -1;         // 0-based replicate day for "day" columns
};

struct DesignMatrix {
  Matrix x;
  std::vector<ColumnMeta> columns;

  std::size_t rows() const { return x.rows; }
  std::size_t cols() const { return x.cols; }

  void validate() const {
    if (columns.size() != x.cols)
      throw LengthMismatch("DesignMatrix: metadata/column count mismatch");
    for (double v : x.a)
      if (!std::isfinite(v)) throw DomainError("DesignMatrix: non-finite entry");
  }

  void append_column(const std::vector<double>& col, ColumnMeta meta) {
    if (x.cols == 0 && x.rows == 0) x.rows = col.size();
    if (col.size() != x.rows) throw LengthMismatch("DesignMatrix: column length mismatch");
    Matrix nx(x.rows, x.cols + 1);
    for (std::size_t i = 0; i < x.rows; ++i) {
      for (std::size_t j = 0; j < x.cols; ++j) nx(i, j) = x(i, j);
      nx(i, x.cols) = col[i];
    }
    x = std::move(nx);
    columns.push_back(std::move(meta));
  }

  std::vector<double> column(std::size_t j) const {
    std::vector<double> c(x.rows);
    for (std::size_t i = 0; i < x.rows; ++i) c[i] = x(i, j);
    return c;
  }
};

// Per-component mean over the days actually present.
inline DesignMatrix average_replicates(const Dataset& ds) {
  DesignMatrix dm;
  dm.x = Matrix(ds.n, ds.p);
  for (std::size_t i = 0; i < ds.n; ++i) {
    std::size_t m = 0;
    for (std::size_t j = 0; j < ds.k; ++j)
      if (ds.is_present(i, j)) ++m;
    if (m == 0) throw MissingNotImputed("average_replicates: individual with no replicate days");
    for (std::size_t l = 0; l < ds.p; ++l) {
      double s = 0.0;
      for (std::size_t j = 0; j < ds.k; ++j)
        if (ds.is_present(i, j)) s += ds.xstar(i, l, j);
      dm.x(i, l) = s / static_cast<double>(m);
    }
  }
  for (std::size_t l = 0; l < ds.p; ++l)
    dm.columns.push_back({"x" + std::to_string(l + 1) + "_avg", "avg",
                          static_cast<int>(l), -1});
  return dm;
}

// One column per (component, day), component-major. All days must be present
// (impute first when the data have missing replicates).
inline DesignMatrix concatenate_replicates(const Dataset& ds) {
  if (!ds.all_present())
    throw MissingNotImputed("concatenate_replicates: absent replicate days remain");
  DesignMatrix dm;
  dm.x = Matrix(ds.n, ds.p * ds.k);
  for (std::size_t i = 0; i < ds.n; ++i)
    for (std::size_t l = 0; l < ds.p; ++l)
      for (std::size_t j = 0; j < ds.k; ++j) dm.x(i, l * ds.k + j) = ds.xstar(i, l, j);
  for (std::size_t l = 0; l < ds.p; ++l)
    for (std::size_t j = 0; j < ds.k; ++j)
      dm.columns.push_back({"x" + std::to_string(l + 1) + "_d" + std::to_string(j + 1),
                            "day", static_cast<int>(l), static_cast<int>(j)});
  return dm;
}

// Profile-likelihood estimate of the Box-Cox exponent on (-3, 3) by
// golden-section search. The Gaussian profile log-likelihood
//   -(n/2) log sigma_hat^2(lambda) + (lambda - 1) sum log x
// is unimodal in lambda for data of this shape.
inline double fit_box_cox_lambda(const std::vector<double>& values,
                                 double lo = -3.0, double hi = 3.0,
                                 double tol = 1e-5) {
  const std::size_t n = values.size();
  std::set<double> distinct;
  double sum_log = 0.0;
  for (double v : values) {
    if (!(v > 0.0)) throw DomainError("fit_box_cox_lambda: values must be positive");
    distinct.insert(v);
    sum_log += std::log(v);
  }
  if (distinct.size() < 10)
    throw Degenerate("fit_box_cox_lambda: needs at least 10 distinct values");

  std::vector<double> w(n);
  const auto loglik = [&](double lam) {
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      w[i] = box_cox(values[i], lam);
      mean += w[i];
    }
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (double v : w) ss += (v - mean) * (v - mean);
    const double var = ss / static_cast<double>(n);
    if (!(var > 0.0)) return -std::numeric_limits<double>::infinity();
    return -0.5 * static_cast<double>(n) * std::log(var) + (lam - 1.0) * sum_log;
  };

  const double phi = 0.6180339887498949;
  double a = lo, b = hi;
  double c = b - phi * (b - a), d = a + phi * (b - a);
  double fc = loglik(c), fd = loglik(d);
  while (b - a > tol) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - phi * (b - a);
      fc = loglik(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + phi * (b - a);
      fd = loglik(d);
    }
  }
  return 0.5 * (a + b);
}

// Box-Cox each present day with the component's exponent, then average.
inline DesignMatrix transformed_average(const Dataset& ds,
                                        const std::vector<double>& lambdas) {
  if (lambdas.size() != ds.p)
    throw WidthMismatch("transformed_average: one lambda per component required");
  DesignMatrix dm;
  dm.x = Matrix(ds.n, ds.p);
  for (std::size_t i = 0; i < ds.n; ++i) {
    std::size_t m = 0;
    for (std::size_t j = 0; j < ds.k; ++j)
      if (ds.is_present(i, j)) ++m;
    if (m == 0) throw MissingNotImputed("transformed_average: individual with no replicate days");
    for (std::size_t l = 0; l < ds.p; ++l) {
      double s = 0.0;
      for (std::size_t j = 0; j < ds.k; ++j)
        if (ds.is_present(i, j)) s += box_cox(ds.xstar(i, l, j), lambdas[l]);
      dm.x(i, l) = s / static_cast<double>(m);
    }
  }
  for (std::size_t l = 0; l < ds.p; ++l)
    dm.columns.push_back({"x" + std::to_string(l + 1) + "_tavg", "tavg",
                          static_cast<int>(l), -1});
  return dm;
}

enum class PipelineKind { average, concatenate, transformed_average };

inline std::string pipeline_kind_name(PipelineKind k) {
  switch (k) {
    case PipelineKind::average: return "average";
    case PipelineKind::concatenate: return "concatenate";
    case PipelineKind::transformed_average: return "transformed_average";
  }
  throw DomainError("pipeline_kind_name: bad enum");
}

inline PipelineKind pipeline_kind_from(const std::string& s) {
  if (s == "average") return PipelineKind::average;
  if (s == "concatenate") return PipelineKind::concatenate;
  if (s == "transformed_average") return PipelineKind::transformed_average;
  throw UnknownScenario("unknown pipeline kind: " + s);
}

// A replicate-handling recipe. For transformed_average the exponents either
// come fixed from configuration or are fitted on training data (fit_lambdas),
// after which `lambdas` records the values actually used.
struct Pipeline {
  PipelineKind kind = PipelineKind::average;
  bool fit_lambdas = true;
  std::vector<double> lambdas;

  std::string name() const { return pipeline_kind_name(kind); }
};

// Resolves data-dependent pipeline parameters on the training split.
inline Pipeline fit_pipeline(Pipeline pipe, const Dataset& train) {
  if (pipe.kind != PipelineKind::transformed_average) return pipe;
  if (!pipe.fit_lambdas) {
    if (pipe.lambdas.size() != train.p)
      throw WidthMismatch("fit_pipeline: fixed lambdas must match component count");
    return pipe;
  }
  pipe.lambdas.assign(train.p, 0.0);
  std::vector<double> vals;
  for (std::size_t l = 0; l < train.p; ++l) {
    vals.clear();
    for (std::size_t i = 0; i < train.n; ++i)
      for (std::size_t j = 0; j < train.k; ++j)
        if (train.is_present(i, j)) vals.push_back(train.xstar(i, l, j));
    pipe.lambdas[l] = fit_box_cox_lambda(vals);
  }
  return pipe;
}

inline DesignMatrix apply_pipeline(const Pipeline& pipe, const Dataset& ds) {
  switch (pipe.kind) {
    case PipelineKind::average: return average_replicates(ds);
    case PipelineKind::concatenate: return concatenate_replicates(ds);
    case PipelineKind::transformed_average: return transformed_average(ds, pipe.lambdas);
  }
  throw DomainError("apply_pipeline: bad pipeline kind");
}

// Column-wise standardization parameters (mean, sample sd with n-1).
struct StandardizeParams {
  std::vector<double> mean;
  std::vector<double> sd;
};

// Fits parameters when none are given, then maps every column to
// (x - mean) / sd. Constant columns standardize with sd 1 so they pass
// through centered rather than dividing by zero.
inline StandardizeParams standardize(DesignMatrix& dm,
                                     const std::optional<StandardizeParams>& given = {}) {
  const std::size_t n = dm.rows(), d = dm.cols();
  StandardizeParams p;
  if (given) {
    if (given->mean.size() != d || given->sd.size() != d)
      throw WidthMismatch("standardize: parameter width mismatch");
    p = *given;
  } else {
    p.mean.assign(d, 0.0);
    p.sd.assign(d, 1.0);
    for (std::size_t j = 0; j < d; ++j) {
      double m = 0.0;
      for (std::size_t i = 0; i < n; ++i) m += dm.x(i, j);
      m /= static_cast<double>(n);
      double ss = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double dv = dm.x(i, j) - m;
        ss += dv * dv;
      }
      const double sd = n > 1 ? std::sqrt(ss / static_cast<double>(n - 1)) : 0.0;
      p.mean[j] = m;
      p.sd[j] = sd > 0.0 ? sd : 1.0;
    }
  }
  for (std::size_t j = 0; j < d; ++j)
    for (std::size_t i = 0; i < n; ++i)
      dm.x(i, j) = (dm.x(i, j) - p.mean[j]) / p.sd[j];
  return p;
}

// Fills an absent second day with the first day's value (two-day data only).
// The pre-imputation presence is kept as the had_second_day indicator.
inline Dataset impute_missing_second_day(Dataset ds) {
  if (ds.k != 2) throw DomainError("impute_missing_second_day: needs k = 2");
  ds.had_second_day.assign(ds.n, 1);
  for (std::size_t i = 0; i < ds.n; ++i) {
    if (!ds.is_present(i, 0))
      throw MissingNotImputed("impute_missing_second_day: first day is absent");
    if (ds.is_present(i, 1)) continue;
    ds.had_second_day[i] = 0;
    for (std::size_t l = 0; l < ds.p; ++l) {
      ds.xstar(i, l, 1) = ds.xstar(i, l, 0);
      if (ds.has_additive_view()) ds.xstar_additive(i, l, 1) = ds.xstar_additive(i, l, 0);
    }
    ds.set_present(i, 1, true);
  }
  return ds;
}

// Train/test split stratified by the replicate-presence pattern so the
// proportion of partially observed individuals matches across splits (within
// one individual per stratum). Imputed data keep their pre-imputation
// pattern through had_second_day, which takes over as the stratum key when
// set. Row order within each side follows the input.
inline std::pair<Dataset, Dataset> stratified_split(const Dataset& ds,
                                                    double test_fraction,
                                                    RngState& rng) {
  if (!(test_fraction > 0.0) || !(test_fraction < 1.0))
    throw DomainError("stratified_split: test_fraction must lie in (0, 1)");
  std::map<std::string, std::vector<std::size_t>> strata;
  for (std::size_t i = 0; i < ds.n; ++i) {
    std::string key;
    if (!ds.had_second_day.empty()) {
      key = ds.had_second_day[i] ? "1" : "0";
    } else {
      key.assign(ds.k, '0');
      for (std::size_t j = 0; j < ds.k; ++j)
        if (ds.is_present(i, j)) key[j] = '1';
    }
    strata[key].push_back(i);
  }
  std::vector<std::size_t> train_idx, test_idx;
  for (auto& [key, rows] : strata) {
    if (rows.size() < 2)
      throw StratumTooSmall("stratified_split: stratum " + key + " has fewer than 2 rows");
    const std::size_t want =
        static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(rows.size())));
    std::vector<std::size_t> order = rows;
    shuffle(order, rng);
    for (std::size_t r = 0; r < order.size(); ++r)
      (r < want ? test_idx : train_idx).push_back(order[r]);
  }
  std::sort(train_idx.begin(), train_idx.end());
  std::sort(test_idx.begin(), test_idx.end());
  return {ds.take_rows(train_idx), ds.take_rows(test_idx)};
}

}  // namespace errlab
