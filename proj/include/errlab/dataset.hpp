// The simulated / ingested data container shared by every pipeline.
#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "errlab/errors.hpp"
#include "errlab/linalg.hpp"

namespace errlab {

// n individuals, p error-prone components measured on k replicate days, and
// q error-free covariates. x_star holds the observed surrogate values; when
// the generating model transforms the measurement scale, x_star_additive
// additionally holds the pre-transform (additive-error) view. x_true is the
// latent usual value when known (simulations only). present marks which
// replicate days exist per individual; absent entries of x_star are NaN.
struct Dataset {
  std::size_t n = 0;
  std::size_t p = 0;
  std::size_t k = 0;
  std::size_t q = 0;

  std::vector<double> y;                 // n
  Matrix z;                              // n x q
  std::vector<double> x_star;            // n*p*k, observed scale
  std::vector<double> x_star_additive;   // n*p*k or empty
  std::vector<double> x_true;            // n*p or empty
  std::vector<std::uint8_t> present;     // n*k
  std::vector<std::uint8_t> had_second_day;  // n, set by imputation

  double& xstar(std::size_t i, std::size_t l, std::size_t j) {
    return x_star[(i * p + l) * k + j];
  }
  double xstar(std::size_t i, std::size_t l, std::size_t j) const {
    return x_star[(i * p + l) * k + j];
  }
  double& xstar_additive(std::size_t i, std::size_t l, std::size_t j) {
    return x_star_additive[(i * p + l) * k + j];
  }
  double xstar_additive(std::size_t i, std::size_t l, std::size_t j) const {
    return x_star_additive[(i * p + l) * k + j];
  }
  double& xtrue(std::size_t i, std::size_t l) { return x_true[i * p + l]; }
  double xtrue(std::size_t i, std::size_t l) const { return x_true[i * p + l]; }
  bool is_present(std::size_t i, std::size_t j) const {
    return present[i * k + j] != 0;
  }
  void set_present(std::size_t i, std::size_t j, bool v) {
    present[i * k + j] = v ? 1 : 0;
  }

  bool has_truth() const { return !x_true.empty(); }
  bool has_additive_view() const { return !x_star_additive.empty(); }
  bool all_present() const {
    for (auto v : present)
      if (!v) return false;
    return true;
  }

  static Dataset sized(std::size_t n, std::size_t p, std::size_t k, std::size_t q) {
    Dataset ds;
    ds.n = n;
    ds.p = p;
    ds.k = k;
    ds.q = q;
    ds.y.assign(n, 0.0);
    ds.z = Matrix(n, q);
    ds.x_star.assign(n * p * k, 0.0);
    ds.present.assign(n * k, 1);
    return ds;
  }

  // Checks dimensional consistency and that no unmasked value is non-finite.
  void validate() const {
    if (y.size() != n || z.rows != n || z.cols != q ||
        x_star.size() != n * p * k || present.size() != n * k)
      throw LengthMismatch("Dataset: inconsistent dimensions");
    if (!x_true.empty() && x_true.size() != n * p)
      throw LengthMismatch("Dataset: x_true has wrong length");
    if (!x_star_additive.empty() && x_star_additive.size() != n * p * k)
      throw LengthMismatch("Dataset: x_star_additive has wrong length");
    for (std::size_t i = 0; i < n; ++i) {
      if (!std::isfinite(y[i])) throw DomainError("Dataset: non-finite outcome");
      for (std::size_t m = 0; m < q; ++m)
        if (!std::isfinite(z(i, m))) throw DomainError("Dataset: non-finite covariate");
      for (std::size_t j = 0; j < k; ++j) {
        if (!is_present(i, j)) continue;
        for (std::size_t l = 0; l < p; ++l)
          if (!std::isfinite(xstar(i, l, j)))
            throw DomainError("Dataset: non-finite surrogate value");
      }
    }
  }

  // Row-subset copy preserving all side fields; used by splitters.
  Dataset take_rows(const std::vector<std::size_t>& idx) const {
    Dataset out = sized(idx.size(), p, k, q);
    if (!x_true.empty()) out.x_true.assign(idx.size() * p, 0.0);
    if (!x_star_additive.empty()) out.x_star_additive.assign(idx.size() * p * k, 0.0);
    if (!had_second_day.empty()) out.had_second_day.assign(idx.size(), 0);
    for (std::size_t r = 0; r < idx.size(); ++r) {
      const std::size_t i = idx[r];
      out.y[r] = y[i];
      for (std::size_t m = 0; m < q; ++m) out.z(r, m) = z(i, m);
      for (std::size_t l = 0; l < p; ++l) {
        for (std::size_t j = 0; j < k; ++j) {
          out.xstar(r, l, j) = xstar(i, l, j);
          if (!x_star_additive.empty())
            out.xstar_additive(r, l, j) = xstar_additive(i, l, j);
        }
        if (!x_true.empty()) out.xtrue(r, l) = xtrue(i, l);
      }
      for (std::size_t j = 0; j < k; ++j) out.present[r * k + j] = present[i * k + j];
      if (!had_second_day.empty()) out.had_second_day[r] = had_second_day[i];
    }
    return out;
  }
};

}  // namespace errlab
