// OLS, interaction expansion, cross-validated scoring, and backward
// selection.
#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "errlab/errors.hpp"
#include "errlab/linreg.hpp"
#include "errlab/rng.hpp"

using namespace errlab;

namespace {

DesignMatrix from_columns(const std::vector<std::pair<std::string, std::vector<double>>>& cs) {
  DesignMatrix dm;
  for (const auto& [label, col] : cs) dm.append_column(col, {label, "raw", -1, -1});
  return dm;
}

}  // namespace

TEST(FitOls, RecoversNoiselessCoefficients) {
  RngState r(41, 0);
  const std::size_t n = 50;
  std::vector<double> a(n), b(n), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    a[i] = r.normal();
    b[i] = r.normal();
    y[i] = 3.0 + 2.0 * a[i] - 1.0 * b[i];
  }
  const DesignMatrix dm = from_columns({{"a", a}, {"b", b}});
  const LinearModel m = fit_ols(dm, y);
  ASSERT_EQ(m.coef.size(), 3u);
  EXPECT_NEAR(m.coef[0], 3.0, 1e-10);
  EXPECT_NEAR(m.coef[1], 2.0, 1e-10);
  EXPECT_NEAR(m.coef[2], -1.0, 1e-10);
  EXPECT_EQ(m.columns[0].label, "a");

  EXPECT_THROW(fit_ols(dm, std::vector<double>(n - 1, 0.0)), LengthMismatch);
  const DesignMatrix tiny = from_columns({{"a", {1.0, 2.0, 3.0}}, {"b", {0.0, 1.0, 0.0}}});
  EXPECT_THROW(fit_ols(tiny, {1.0, 2.0, 3.0}), RankDeficient);  // n <= d + 1
}

TEST(FitOls, ReportsCollinearColumns) {
  RngState r(42, 0);
  const std::size_t n = 30;
  std::vector<double> a(n), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    a[i] = r.normal();
    y[i] = a[i];
  }
  const DesignMatrix dm = from_columns({{"a", a}, {"a_copy", a}});
  try {
    fit_ols(dm, y);
    FAIL() << "expected RankDeficient";
  } catch (const RankDeficient& e) {
    ASSERT_FALSE(e.columns.empty());
    EXPECT_EQ(e.columns.back(), 2u);  // intercept is 0, duplicate design column is 2
  }
}

TEST(PredictLinear, AppliesInterceptAndGuardsWidth) {
  LinearModel m;
  m.coef = {1.0, 2.0, -0.5};
  const DesignMatrix dm = from_columns({{"a", {1.0, 0.0}}, {"b", {2.0, 4.0}}});
  const std::vector<double> pred = predict_linear(m, dm);
  EXPECT_DOUBLE_EQ(pred[0], 1.0 + 2.0 - 1.0);
  EXPECT_DOUBLE_EQ(pred[1], 1.0 - 2.0);
  const DesignMatrix narrow = from_columns({{"a", {1.0, 0.0}}});
  EXPECT_THROW(predict_linear(m, narrow), WidthMismatch);
}

TEST(ExpandInteractions, PairsAndTriples) {
  const DesignMatrix mains = from_columns(
      {{"a", {1.0, 2.0, 3.0}}, {"b", {4.0, 5.0, 6.0}}, {"c", {7.0, 8.0, 9.0}}});
  const InteractionExpansion pairs = expand_interactions(mains, 2);
  ASSERT_EQ(pairs.terms.size(), 6u);
  EXPECT_EQ(pairs.terms[3].label, "a:b");
  EXPECT_EQ(pairs.terms[5].label, "b:c");
  EXPECT_DOUBLE_EQ(pairs.dm.x(1, 3), 10.0);  // 2 * 5
  EXPECT_DOUBLE_EQ(pairs.dm.x(2, 5), 54.0);  // 6 * 9

  const InteractionExpansion triples = expand_interactions(mains, 3);
  ASSERT_EQ(triples.terms.size(), 7u);
  EXPECT_EQ(triples.terms[6].label, "a:b:c");
  EXPECT_DOUBLE_EQ(triples.dm.x(0, 6), 28.0);  // 1 * 4 * 7
  EXPECT_EQ(triples.dm.columns[6].source, "interaction");

  EXPECT_THROW(expand_interactions(mains, 4), DomainError);
}

TEST(ExpandInteractions, DropsZeroAndDuplicateProducts) {
  // d1 and d2 are mutually exclusive dummies, so d1*d2 is identically zero.
  // ab equals a*b exactly, so the a:b product duplicates an existing column.
  const DesignMatrix mains = from_columns({{"a", {1.0, 2.0, 3.0, 4.0}},
                                           {"b", {2.0, 2.0, 1.0, 0.5}},
                                           {"ab", {2.0, 4.0, 3.0, 2.0}},
                                           {"d1", {1.0, 0.0, 1.0, 0.0}},
                                           {"d2", {0.0, 1.0, 0.0, 1.0}}});
  const InteractionExpansion out = expand_interactions(mains, 2);
  for (const auto& t : out.terms) {
    EXPECT_NE(t.label, "d1:d2");
    EXPECT_NE(t.label, "a:b");
  }
  // the 5 mains survive, and a:d1 is still there
  ASSERT_GE(out.terms.size(), 6u);
  bool saw = false;
  for (const auto& t : out.terms) saw = saw || t.label == "a:d1";
  EXPECT_TRUE(saw);
}

TEST(ExpandLike, RebuildsTrainColumnsOnNewRows) {
  const DesignMatrix train = from_columns({{"a", {1.0, 2.0, 3.0, 4.0}},
                                           {"b", {2.0, 2.0, 1.0, 0.5}},
                                           {"d1", {1.0, 0.0, 1.0, 0.0}},
                                           {"d2", {0.0, 1.0, 0.0, 1.0}}});
  const InteractionExpansion exp = expand_interactions(train, 2);
  // test mains arrive in a different column order; matching is by label
  const DesignMatrix fresh = from_columns(
      {{"d2", {1.0, 1.0}}, {"a", {10.0, 20.0}}, {"b", {3.0, 0.1}}, {"d1", {1.0, 0.0}}});
  const DesignMatrix rebuilt = expand_like(exp.dm, fresh);
  ASSERT_EQ(rebuilt.cols(), exp.dm.cols());
  for (std::size_t j = 0; j < rebuilt.cols(); ++j)
    EXPECT_EQ(rebuilt.columns[j].label, exp.dm.columns[j].label);
  // spot-check: the a:b product on the new rows, wherever it landed
  for (std::size_t j = 0; j < rebuilt.cols(); ++j) {
    if (rebuilt.columns[j].label == "a:b") {
      EXPECT_DOUBLE_EQ(rebuilt.x(0, j), 30.0);
      EXPECT_DOUBLE_EQ(rebuilt.x(1, j), 2.0);
    }
    if (rebuilt.columns[j].label == "a") {
      EXPECT_DOUBLE_EQ(rebuilt.x(0, j), 10.0);
    }
  }
  const DesignMatrix missing = from_columns({{"a", {1.0, 2.0}}});
  EXPECT_THROW(expand_like(exp.dm, missing), WidthMismatch);
}

TEST(MakeFolds, BalancedWithinOne) {
  RngState r(43, 0);
  const std::vector<int> fold_of = make_folds(23, 5, r);
  std::vector<int> count(5, 0);
  for (int f : fold_of) {
    ASSERT_GE(f, 0);
    ASSERT_LT(f, 5);
    ++count[f];
  }
  int lo = count[0], hi = count[0];
  for (int c : count) {
    lo = std::min(lo, c);
    hi = std::max(hi, c);
  }
  EXPECT_LE(hi - lo, 1);
  EXPECT_EQ(lo + hi, 23 / 5 + (23 + 4) / 5);  // 4 and 5
}

TEST(MakeFolds, StratifiedSpreadsEachStratum) {
  RngState r(44, 0);
  std::vector<std::string> strata;
  for (int i = 0; i < 10; ++i) strata.push_back("x");
  for (int i = 0; i < 5; ++i) strata.push_back("y");
  const std::vector<int> fold_of = make_folds(15, 5, r, strata);
  std::vector<int> in_x(5, 0), in_y(5, 0);
  for (std::size_t i = 0; i < 15; ++i) (i < 10 ? in_x : in_y)[fold_of[i]]++;
  for (int f = 0; f < 5; ++f) {
    EXPECT_EQ(in_x[f], 2);
    EXPECT_EQ(in_y[f], 1);
  }
}

TEST(MakeFolds, Guards) {
  RngState r(45, 0);
  EXPECT_THROW(make_folds(10, 1, r), DomainError);
  EXPECT_THROW(make_folds(3, 5, r), DomainError);
  EXPECT_THROW(make_folds(4, 2, r, {"a", "b"}), LengthMismatch);
}

TEST(KfoldCvRmse, NearZeroOnNoiselessLinearData) {
  RngState r(46, 0);
  const std::size_t n = 60;
  std::vector<double> a(n), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    a[i] = r.normal();
    y[i] = 1.0 + 2.0 * a[i];
  }
  const DesignMatrix dm = from_columns({{"a", a}});
  const std::vector<TermGroup> terms = {{"a", {0}}};
  const std::vector<int> fold_of = make_folds(n, 5, r);
  EXPECT_NEAR(kfold_cv_rmse(dm, y, terms, {0}, fold_of, 5), 0.0, 1e-8);
}

TEST(KfoldCvRmse, RankDeficientFoldScoresInfinity) {
  RngState r(47, 0);
  const std::size_t n = 40;
  std::vector<double> a(n), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    a[i] = r.normal();
    y[i] = a[i];
  }
  const DesignMatrix dm = from_columns({{"a", a}, {"a_copy", a}});
  const std::vector<TermGroup> terms = {{"a", {0}}, {"a_copy", {1}}};
  const std::vector<int> fold_of = make_folds(n, 4, r);
  const double score = kfold_cv_rmse(dm, y, terms, {0, 1}, fold_of, 4);
  EXPECT_TRUE(std::isinf(score));
}

TEST(BackwardSelect, FindsSignalAmongNoiseTerms) {
  RngState r(48, 0);
  const std::size_t n = 400;
  std::vector<double> x0(n), x1(n), x2(n), x3(n), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    x0[i] = r.normal();
    x1[i] = r.normal();
    x2[i] = r.normal();
    x3[i] = r.normal();
    y[i] = 2.0 * x0[i] - 1.0 * x1[i] + 0.1 * r.normal();
  }
  const DesignMatrix dm =
      from_columns({{"x0", x0}, {"x1", x1}, {"x2", x2}, {"x3", x3}});
  std::vector<TermGroup> terms;
  for (std::size_t t = 0; t < 4; ++t) terms.push_back({dm.columns[t].label, {t}});

  RngState sel(49, 0);
  const SelectionResult res = backward_select(dm, y, terms, 5, sel);

  ASSERT_FALSE(res.path.steps.empty());
  EXPECT_EQ(res.path.steps.front().term_removed, -1);
  EXPECT_EQ(res.path.steps.front().size, 4u);
  for (std::size_t s = 1; s < res.path.steps.size(); ++s)
    EXPECT_EQ(res.path.steps[s].size + 1, res.path.steps[s - 1].size);
  EXPECT_EQ(res.path.steps.back().size, 0u);

  // the signal terms survive and the chosen model beats the full one
  EXPECT_NE(std::find(res.best_terms.begin(), res.best_terms.end(), 0u),
            res.best_terms.end());
  EXPECT_NE(std::find(res.best_terms.begin(), res.best_terms.end(), 1u),
            res.best_terms.end());
  EXPECT_LE(res.best_cv_rmse, res.path.steps.front().cv_rmse);
  EXPECT_NEAR(res.best_cv_rmse, 0.1, 0.05);

  // the refit model predicts the truth closely
  DesignMatrix sub;
  for (std::size_t t : res.best_terms) sub.append_column(dm.column(t), dm.columns[t]);
  const std::vector<double> pred = predict_linear(res.model, sub);
  double mse = 0.0;
  for (std::size_t i = 0; i < n; ++i) mse += (pred[i] - y[i]) * (pred[i] - y[i]);
  mse /= static_cast<double>(n);
  EXPECT_LT(mse, 0.02);
}

TEST(SelectionPath, TermsAtSizeReplaysRemovals) {
  SelectionPath path;
  path.term_labels = {"a", "b", "c"};
  path.steps = {{-1, 3, 1.0}, {1, 2, 0.9}, {2, 1, 0.95}, {0, 0, 2.0}};
  const std::vector<std::size_t> two = path.terms_at_size(2);
  ASSERT_EQ(two.size(), 2u);
  EXPECT_EQ(two[0], 0u);
  EXPECT_EQ(two[1], 2u);
  const std::vector<std::size_t> one = path.terms_at_size(1);
  ASSERT_EQ(one.size(), 1u);
  EXPECT_EQ(one[0], 0u);
  EXPECT_THROW(path.terms_at_size(5), DomainError);
}

TEST(ParsimonySelect, SmallestSizeWithinTolerance) {
  SelectionPath path;
  path.term_labels = {"a", "b", "c"};
  path.steps = {{-1, 3, 1.0}, {2, 2, 1.005}, {1, 1, 1.02}, {0, 0, 2.0}};
  EXPECT_EQ(parsimony_select(path, 0.01), 2u);
  EXPECT_EQ(parsimony_select(path, 0.0), 3u);
  EXPECT_EQ(parsimony_select(path, 10.0), 0u);
  EXPECT_THROW(parsimony_select(SelectionPath{}, 0.01), DomainError);
}
