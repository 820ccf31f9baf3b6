// Ordinary least squares, interaction expansion, cross-validated scoring,
// and backward term selection.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "errlab/errors.hpp"
#include "errlab/linalg.hpp"
#include "errlab/prepare.hpp"
#include "errlab/rng.hpp"

namespace errlab {

// Intercept plus one coefficient per design column, fitted by QR.
struct LinearModel {
  std::vector<double> coef;  // coef[0] is the intercept
  std::vector<ColumnMeta> columns;
};

inline LinearModel fit_ols(const DesignMatrix& dm, const std::vector<double>& y) {
  const std::size_t n = dm.rows(), d = dm.cols();
  if (y.size() != n) throw LengthMismatch("fit_ols: outcome length mismatch");
  if (n <= d + 1) throw RankDeficient("fit_ols: need more rows than columns", {});
  Matrix x(n, d + 1);
  for (std::size_t i = 0; i < n; ++i) {
    x(i, 0) = 1.0;
    for (std::size_t j = 0; j < d; ++j) x(i, j + 1) = dm.x(i, j);
  }
  LinearModel m;
  m.coef = householder_lsq(std::move(x), y);
  m.columns = dm.columns;
  return m;
}

inline std::vector<double> predict_linear(const LinearModel& m, const DesignMatrix& dm) {
  if (dm.cols() + 1 != m.coef.size())
    throw WidthMismatch("predict_linear: design width does not match model");
  std::vector<double> out(dm.rows());
  for (std::size_t i = 0; i < dm.rows(); ++i) {
    double s = m.coef[0];
    for (std::size_t j = 0; j < dm.cols(); ++j) s += m.coef[j + 1] * dm.x(i, j);
    out[i] = s;
  }
  return out;
}

// A selectable term: one main-effect column or one interaction column.
struct TermGroup {
  std::string label;
  std::vector<std::size_t> columns;
};

struct InteractionExpansion {
  DesignMatrix dm;
  std::vector<TermGroup> terms;
};

// Expands a main-effects design with products of distinct column pairs (and
// triples at max_order 3). Products that are identically zero (for example
// products of mutually exclusive dummies) or duplicate an existing column are
// dropped. Expansion happens on the unstandardized design so those
// identifiability checks see the raw values.
inline InteractionExpansion expand_interactions(const DesignMatrix& mains, int max_order) {
  if (max_order != 2 && max_order != 3)
    throw DomainError("expand_interactions: max_order must be 2 or 3");
  const std::size_t n = mains.rows(), d = mains.cols();
  InteractionExpansion out;

  std::vector<std::vector<double>> cols;
  std::vector<ColumnMeta> metas;
  cols.reserve(d * d);
  for (std::size_t j = 0; j < d; ++j) {
    cols.push_back(mains.column(j));
    metas.push_back(mains.columns[j]);
    out.terms.push_back({mains.columns[j].label, {out.terms.size()}});
  }

  const auto all_zero = [](const std::vector<double>& c) {
    for (double v : c)
      if (v != 0.0) return false;
    return true;
  };
  const auto duplicate_of_existing = [&](const std::vector<double>& c) {
    for (const auto& e : cols)
      if (e == c) return true;
    return false;
  };
  const auto push_product = [&](const std::vector<std::size_t>& parts) {
    std::vector<double> c(n, 1.0);
    std::string label;
    for (std::size_t p : parts) {
      for (std::size_t i = 0; i < n; ++i) c[i] *= cols[p][i];
      label += (label.empty() ? "" : ":") + metas[p].label;
    }
    if (all_zero(c) || duplicate_of_existing(c)) return;
    cols.push_back(std::move(c));
    metas.push_back({label, "interaction", -1, -1});
    out.terms.push_back({label, {cols.size() - 1}});
  };

  for (std::size_t a = 0; a < d; ++a)
    for (std::size_t b = a + 1; b < d; ++b) push_product({a, b});
  if (max_order == 3)
    for (std::size_t a = 0; a < d; ++a)
      for (std::size_t b = a + 1; b < d; ++b)
        for (std::size_t c = b + 1; c < d; ++c) push_product({a, b, c});

  out.dm.x = Matrix(n, cols.size());
  for (std::size_t j = 0; j < cols.size(); ++j)
    for (std::size_t i = 0; i < n; ++i) out.dm.x(i, j) = cols[j][i];
  out.dm.columns = std::move(metas);
  return out;
}

// Rebuilds an expanded design on new rows so the columns align with one
// produced by expand_interactions on training data (whose zero/duplicate
// drops are data dependent). Main columns match by label; interaction
// columns are re-multiplied from their labelled parts.
inline DesignMatrix expand_like(const DesignMatrix& expanded, const DesignMatrix& mains) {
  std::map<std::string, std::size_t> main_of;
  for (std::size_t j = 0; j < mains.cols(); ++j) main_of.emplace(mains.columns[j].label, j);
  const auto lookup = [&](const std::string& label) {
    auto it = main_of.find(label);
    if (it == main_of.end())
      throw WidthMismatch("expand_like: column " + label + " not in the new data");
    return it->second;
  };
  DesignMatrix out;
  out.x = Matrix(mains.rows(), expanded.cols());
  out.columns = expanded.columns;
  for (std::size_t j = 0; j < expanded.cols(); ++j) {
    const ColumnMeta& meta = expanded.columns[j];
    if (meta.source != "interaction") {
      const std::size_t src = lookup(meta.label);
      for (std::size_t i = 0; i < mains.rows(); ++i) out.x(i, j) = mains.x(i, src);
      continue;
    }
    std::vector<std::size_t> parts;
    std::string token;
    std::stringstream ss(meta.label);
    while (std::getline(ss, token, ':')) parts.push_back(lookup(token));
    for (std::size_t i = 0; i < mains.rows(); ++i) {
      double v = 1.0;
      for (std::size_t p : parts) v *= mains.x(i, p);
      out.x(i, j) = v;
    }
  }
  return out;
}

// Fold assignment for n rows, optionally stratified so each stratum spreads
// evenly across folds.
inline std::vector<int> make_folds(std::size_t n, int folds, RngState& rng,
                                   const std::vector<std::string>& strata = {}) {
  if (folds < 2) throw DomainError("make_folds: need at least 2 folds");
  if (n < static_cast<std::size_t>(folds))
    throw DomainError("make_folds: fewer rows than folds");
  std::vector<int> fold_of(n, 0);
  std::map<std::string, std::vector<std::size_t>> groups;
  if (strata.empty()) {
    groups[""] = std::vector<std::size_t>(n);
    std::iota(groups[""].begin(), groups[""].end(), 0);
  } else {
    if (strata.size() != n) throw LengthMismatch("make_folds: strata length mismatch");
    for (std::size_t i = 0; i < n; ++i) groups[strata[i]].push_back(i);
  }
  int next = 0;
  for (auto& [key, rows] : groups) {
    shuffle(rows, rng);
    for (std::size_t r = 0; r < rows.size(); ++r) {
      fold_of[rows[r]] = next;
      next = (next + 1) % folds;
    }
  }
  return fold_of;
}

namespace detail {

inline Matrix design_for_terms(const DesignMatrix& dm,
                               const std::vector<TermGroup>& terms,
                               const std::vector<std::size_t>& active,
                               const std::vector<std::size_t>& rows) {
  std::vector<std::size_t> cols;
  for (std::size_t t : active)
    for (std::size_t c : terms[t].columns) cols.push_back(c);
  Matrix x(rows.size(), cols.size() + 1);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    x(r, 0) = 1.0;
    for (std::size_t j = 0; j < cols.size(); ++j) x(r, j + 1) = dm.x(rows[r], cols[j]);
  }
  return x;
}

}  // namespace detail

// Mean held-out RMSE over the folds for the model spanned by the active
// terms (plus intercept). A rank-deficient training fold scores +infinity so
// selection simply never keeps that candidate.
inline double kfold_cv_rmse(const DesignMatrix& dm, const std::vector<double>& y,
                            const std::vector<TermGroup>& terms,
                            const std::vector<std::size_t>& active,
                            const std::vector<int>& fold_of, int folds) {
  const std::size_t n = dm.rows();
  if (y.size() != n || fold_of.size() != n)
    throw LengthMismatch("kfold_cv_rmse: length mismatch");
  double total = 0.0;
  for (int f = 0; f < folds; ++f) {
    std::vector<std::size_t> train_rows, test_rows;
    for (std::size_t i = 0; i < n; ++i)
      (fold_of[i] == f ? test_rows : train_rows).push_back(i);
    if (train_rows.empty() || test_rows.empty())
      throw DomainError("kfold_cv_rmse: empty fold");
    Matrix xt = detail::design_for_terms(dm, terms, active, train_rows);
    std::vector<double> yt(train_rows.size());
    for (std::size_t r = 0; r < train_rows.size(); ++r) yt[r] = y[train_rows[r]];
    std::vector<double> beta;
    try {
      beta = householder_lsq(std::move(xt), std::move(yt));
    } catch (const RankDeficient&) {
      return std::numeric_limits<double>::infinity();
    }
    Matrix xv = detail::design_for_terms(dm, terms, active, test_rows);
    double ss = 0.0;
    for (std::size_t r = 0; r < test_rows.size(); ++r) {
      double pred = 0.0;
      for (std::size_t j = 0; j < xv.cols; ++j) pred += xv(r, j) * beta[j];
      const double e = pred - y[test_rows[r]];
      ss += e * e;
    }
    total += std::sqrt(ss / static_cast<double>(test_rows.size()));
  }
  return total / static_cast<double>(folds);
}

struct SelectionStep {
  int term_removed = -1;  // -1 marks the full starting model
  std::size_t size = 0;   // number of terms in the model scored here
  double cv_rmse = 0.0;
};

struct SelectionPath {
  std::vector<std::string> term_labels;  // full term list, by index
  std::vector<SelectionStep> steps;      // sizes strictly decreasing

  // Active term set at a given model size, replaying the removal order.
  std::vector<std::size_t> terms_at_size(std::size_t size) const {
    std::vector<std::size_t> active(term_labels.size());
    std::iota(active.begin(), active.end(), 0);
    for (const auto& s : steps) {
      if (s.term_removed < 0) continue;
      if (active.size() <= size) break;
      active.erase(std::remove(active.begin(), active.end(),
                               static_cast<std::size_t>(s.term_removed)),
                   active.end());
    }
    if (active.size() != size)
      throw DomainError("SelectionPath: no model of the requested size");
    return active;
  }
};

struct SelectionResult {
  LinearModel model;                      // refit at the path minimum
  std::vector<std::size_t> best_terms;
  double best_cv_rmse = 0.0;
  SelectionPath path;
};

namespace detail {

inline LinearModel refit_terms(const DesignMatrix& dm, const std::vector<double>& y,
                               const std::vector<TermGroup>& terms,
                               const std::vector<std::size_t>& active) {
  DesignMatrix sub;
  std::vector<std::size_t> cols;
  for (std::size_t t : active)
    for (std::size_t c : terms[t].columns) cols.push_back(c);
  sub.x = Matrix(dm.rows(), cols.size());
  for (std::size_t j = 0; j < cols.size(); ++j)
    for (std::size_t i = 0; i < dm.rows(); ++i) sub.x(i, j) = dm.x(i, cols[j]);
  for (std::size_t c : cols) sub.columns.push_back(dm.columns[c]);
  return fit_ols(sub, y);
}

}  // namespace detail

// Backward elimination over terms scored by k-fold CV-RMSE with one fixed
// fold assignment. Each step removes the term whose removal scores best
// (ties broken toward the largest term index), continuing down to the
// intercept-only model; the returned model is the path minimum.
inline SelectionResult backward_select(const DesignMatrix& dm, const std::vector<double>& y,
                                       const std::vector<TermGroup>& terms, int folds,
                                       RngState& rng,
                                       const std::vector<std::string>& strata = {}) {
  const std::vector<int> fold_of = make_folds(dm.rows(), folds, rng, strata);
  SelectionResult res;
  for (const auto& t : terms) res.path.term_labels.push_back(t.label);

  std::vector<std::size_t> active(terms.size());
  std::iota(active.begin(), active.end(), 0);
  res.path.steps.push_back(
      {-1, active.size(), kfold_cv_rmse(dm, y, terms, active, fold_of, folds)});

  while (!active.empty()) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_term = 0;
    for (std::size_t t : active) {
      std::vector<std::size_t> trial;
      trial.reserve(active.size() - 1);
      for (std::size_t s : active)
        if (s != t) trial.push_back(s);
      const double score = kfold_cv_rmse(dm, y, terms, trial, fold_of, folds);
      if (score < best || (score == best && t > best_term)) {
        best = score;
        best_term = t;
      }
    }
    active.erase(std::remove(active.begin(), active.end(), best_term), active.end());
    res.path.steps.push_back({static_cast<int>(best_term), active.size(), best});
  }

  const SelectionStep* argmin = &res.path.steps.front();
  for (const auto& s : res.path.steps)
    if (s.cv_rmse < argmin->cv_rmse) argmin = &s;
  res.best_cv_rmse = argmin->cv_rmse;
  res.best_terms = res.path.terms_at_size(argmin->size);
  res.model = detail::refit_terms(dm, y, terms, res.best_terms);
  return res;
}

// Smallest model size whose CV-RMSE is within tolerance of the path minimum.
inline std::size_t parsimony_select(const SelectionPath& path, double tolerance) {
  if (path.steps.empty()) throw DomainError("parsimony_select: empty path");
  double best = std::numeric_limits<double>::infinity();
  for (const auto& s : path.steps) best = std::min(best, s.cv_rmse);
  std::size_t size = path.steps.front().size;
  for (const auto& s : path.steps)
    if (s.cv_rmse <= best + tolerance) size = std::min(size, s.size);
  return size;
}

}  // namespace errlab
