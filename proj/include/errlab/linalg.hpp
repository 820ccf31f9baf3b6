// Small dense matrices, covariance handling, Cholesky, MVN sampling, and a
// Householder least-squares path. Everything here is sized for designs of a
// few thousand rows by a few hundred columns at most.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "errlab/errors.hpp"
#include "errlab/rng.hpp"

namespace errlab {

struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> a;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0)
      : rows(r), cols(c), a(r * c, fill) {}

  double& operator()(std::size_t i, std::size_t j) { return a[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const {
    return a[i * cols + j];
  }
  const double* row(std::size_t i) const { return a.data() + i * cols; }
  double* row(std::size_t i) { return a.data() + i * cols; }
};

inline std::vector<double> matvec(const Matrix& m, const std::vector<double>& x) {
  if (x.size() != m.cols) throw WidthMismatch("matvec: width mismatch");
  std::vector<double> out(m.rows, 0.0);
  for (std::size_t i = 0; i < m.rows; ++i) {
    const double* r = m.row(i);
    double s = 0.0;
    for (std::size_t j = 0; j < m.cols; ++j) s += r[j] * x[j];
    out[i] = s;
  }
  return out;
}

// Symmetric covariance matrix stored as its lower triangle.
class CovarianceMatrix {
 public:
  CovarianceMatrix() = default;
  explicit CovarianceMatrix(std::size_t dim) : dim_(dim), tri_(dim * (dim + 1) / 2, 0.0) {}

  // Builds from a full square matrix; only the lower triangle is read, so the
  // stored object is symmetric by construction.
  static CovarianceMatrix from_full(const Matrix& m) {
    if (m.rows != m.cols) throw DomainError("CovarianceMatrix: matrix not square");
    CovarianceMatrix c(m.rows);
    for (std::size_t i = 0; i < m.rows; ++i)
      for (std::size_t j = 0; j <= i; ++j) c.set(i, j, m(i, j));
    return c;
  }

  static CovarianceMatrix diagonal(const std::vector<double>& d) {
    CovarianceMatrix c(d.size());
    for (std::size_t i = 0; i < d.size(); ++i) c.set(i, i, d[i]);
    return c;
  }

  std::size_t dim() const { return dim_; }

  double operator()(std::size_t i, std::size_t j) const {
    return tri_[index(std::max(i, j), std::min(i, j))];
  }
  void set(std::size_t i, std::size_t j, double v) {
    tri_[index(std::max(i, j), std::min(i, j))] = v;
  }

  Matrix full() const {
    Matrix m(dim_, dim_);
    for (std::size_t i = 0; i < dim_; ++i)
      for (std::size_t j = 0; j < dim_; ++j) m(i, j) = (*this)(i, j);
    return m;
  }

 private:
  static std::size_t index(std::size_t i, std::size_t j) {
    return i * (i + 1) / 2 + j;
  }
  std::size_t dim_ = 0;
  std::vector<double> tri_;
};

// Lower Cholesky factor of a positive semi-definite matrix. A pivot below
// -1e-10 (relative to the largest diagonal entry) rejects the input; pivots
// inside the tolerance band are treated as exact zeros, which handles
// semi-definite inputs such as the zero matrix or rank-deficient covariances.
inline Matrix cholesky(const CovarianceMatrix& cov) {
  const std::size_t n = cov.dim();
  double max_diag = 0.0;
  for (std::size_t i = 0; i < n; ++i) max_diag = std::max(max_diag, std::abs(cov(i, i)));
  const double tol = 1e-10 * std::max(1.0, max_diag);

  Matrix l(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    double d = cov(j, j);
    for (std::size_t k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
    if (d < -tol)
      throw NotPositiveSemiDefinite("cholesky: matrix is not positive semi-definite");
    if (d <= tol) {
      l(j, j) = 0.0;
      continue;  // column below stays zero
    }
    l(j, j) = std::sqrt(d);
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = cov(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      l(i, j) = s / l(j, j);
    }
  }
  return l;
}

// n_rows draws from N(mean, cov), one draw per row.
inline Matrix mvn_sample(const std::vector<double>& mean, const CovarianceMatrix& cov,
                         std::size_t n_rows, RngState& rng) {
  if (mean.size() != cov.dim()) throw WidthMismatch("mvn_sample: mean/cov dimension mismatch");
  const std::size_t d = cov.dim();
  const Matrix l = cholesky(cov);
  Matrix out(n_rows, d);
  std::vector<double> z(d);
  for (std::size_t i = 0; i < n_rows; ++i) {
    for (std::size_t j = 0; j < d; ++j) z[j] = rng.normal();
    for (std::size_t r = 0; r < d; ++r) {
      double s = mean[r];
      for (std::size_t c = 0; c <= r; ++c) s += l(r, c) * z[c];
      out(i, r) = s;
    }
  }
  return out;
}

// Least squares via Householder QR on [X] (the caller includes any intercept
// column). Throws RankDeficient with the offending column indices when a
// diagonal of R falls below tolerance.
inline std::vector<double> householder_lsq(Matrix x, std::vector<double> y) {
  const std::size_t n = x.rows, d = x.cols;
  if (y.size() != n) throw LengthMismatch("householder_lsq: y length mismatch");
  if (n < d) throw RankDeficient("householder_lsq: fewer rows than columns", {});

  double scale = 0.0;
  for (double v : x.a) scale = std::max(scale, std::abs(v));
  const double tol = 1e-10 * std::max(1.0, scale) * static_cast<double>(std::max(n, d));

  std::vector<std::size_t> bad;
  for (std::size_t j = 0; j < d; ++j) {
    double norm = 0.0;
    for (std::size_t i = j; i < n; ++i) norm += x(i, j) * x(i, j);
    norm = std::sqrt(norm);
    if (norm <= tol) {
      bad.push_back(j);
      continue;
    }
    const double alpha = x(j, j) > 0 ? -norm : norm;
    // Householder vector v = x_j - alpha e_j, stored in place below row j.
    const double vjj = x(j, j) - alpha;
    x(j, j) = vjj;
    double vnorm2 = 0.0;
    for (std::size_t i = j; i < n; ++i) vnorm2 += x(i, j) * x(i, j);
    if (vnorm2 == 0.0) {
      bad.push_back(j);
      continue;
    }
    for (std::size_t c = j + 1; c < d; ++c) {
      double dot = 0.0;
      for (std::size_t i = j; i < n; ++i) dot += x(i, j) * x(i, c);
      const double f = 2.0 * dot / vnorm2;
      for (std::size_t i = j; i < n; ++i) x(i, c) -= f * x(i, j);
    }
    double doty = 0.0;
    for (std::size_t i = j; i < n; ++i) doty += x(i, j) * y[i];
    const double fy = 2.0 * doty / vnorm2;
    for (std::size_t i = j; i < n; ++i) y[i] -= fy * x(i, j);
    x(j, j) = alpha;  // diagonal of R
    for (std::size_t i = j + 1; i < n; ++i) x(i, j) = 0.0;
    if (std::abs(alpha) <= tol) bad.push_back(j);
  }
  if (!bad.empty())
    throw RankDeficient("householder_lsq: rank-deficient design", bad);

  std::vector<double> beta(d, 0.0);
  for (std::size_t jj = d; jj-- > 0;) {
    double s = y[jj];
    for (std::size_t c = jj + 1; c < d; ++c) s -= x(jj, c) * beta[c];
    beta[jj] = s / x(jj, jj);
  }
  return beta;
}

}  // namespace errlab
