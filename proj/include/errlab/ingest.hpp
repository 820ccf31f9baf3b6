// Loading external tables into a Dataset: schema-driven CSV parsing,
// reference-cell encoding of categorical covariates, and the round-trip
// writer used by the simulator.
#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "errlab/dataset.hpp"
#include "errlab/errors.hpp"

namespace errlab {

enum class CovariateKind { numeric, categorical };

inline std::string covariate_kind_name(CovariateKind k) {
  return k == CovariateKind::numeric ? "numeric" : "categorical";
}

inline CovariateKind covariate_kind_from(const std::string& s) {
  if (s == "numeric") return CovariateKind::numeric;
  if (s == "categorical") return CovariateKind::categorical;
  throw SchemaMismatch("unknown covariate kind: " + s);
}

struct CovariateColumn {
  std::string name;
  CovariateKind kind = CovariateKind::numeric;
};

// Maps table columns onto the Dataset layout: one outcome column, a p x k
// grid of replicate columns (replicate_columns[l][j] is component l, day
// j+1), and any number of error-free covariates. Cells equal to
// missing_token count as absent.
struct TableSchema {
  std::string outcome_column;
  std::vector<std::vector<std::string>> replicate_columns;
  std::vector<CovariateColumn> covariate_columns;
  std::string missing_token;
  char delimiter = ',';

  void validate() const {
    if (outcome_column.empty()) throw SchemaMismatch("schema: outcome_column is empty");
    if (replicate_columns.empty())
      throw SchemaMismatch("schema: replicate_columns is empty");
    const std::size_t k = replicate_columns.front().size();
    if (k == 0) throw SchemaMismatch("schema: component with no replicate days");
    for (const auto& comp : replicate_columns)
      if (comp.size() != k)
        throw SchemaMismatch("schema: ragged replicate_columns (all components need "
                             "the same day count)");
    std::set<std::string> seen{outcome_column};
    for (const auto& comp : replicate_columns)
      for (const auto& name : comp)
        if (!seen.insert(name).second)
          throw SchemaMismatch("schema: duplicate column " + name);
    for (const auto& cov : covariate_columns)
      if (!seen.insert(cov.name).second)
        throw SchemaMismatch("schema: duplicate column " + cov.name);
  }

  std::size_t p() const { return replicate_columns.size(); }
  std::size_t k() const { return replicate_columns.front().size(); }
};

// Sorted level set of one categorical column; the first level is the
// reference cell and gets no dummy.
struct CategoricalEncoding {
  std::string name;
  std::vector<std::string> levels;
};

struct LoadReport {
  Dataset dataset;
  std::vector<std::string> z_labels;  // encoded covariate column names, in order
  std::vector<CategoricalEncoding> encodings;
  std::size_t rows_read = 0;     // data rows in the file
  std::size_t rows_dropped = 0;  // missing outcome, covariate, or first day
  std::vector<std::string> warnings;
};

inline constexpr std::size_t kMaxCategoricalLevels = 20;

// Reference-cell dummy coding: levels sort lexicographically, the smallest
// is the baseline, and each remaining level gets an indicator column named
// name=level. A constant column encodes to nothing (with a warning).
inline std::vector<std::vector<double>> encode_categoricals(
    const std::string& name, const std::vector<std::string>& raw,
    CategoricalEncoding& enc, std::vector<std::string>& labels,
    std::vector<std::string>& warnings) {
  std::set<std::string> level_set(raw.begin(), raw.end());
  if (level_set.size() > kMaxCategoricalLevels)
    throw TooManyLevels("covariate " + name + " has " + std::to_string(level_set.size()) +
                        " levels (limit " + std::to_string(kMaxCategoricalLevels) + ")");
  enc.name = name;
  enc.levels.assign(level_set.begin(), level_set.end());
  if (enc.levels.size() < 2) {
    warnings.push_back("covariate " + name + " is constant; encoded to no columns");
    return {};
  }
  std::vector<std::vector<double>> cols(enc.levels.size() - 1,
                                        std::vector<double>(raw.size(), 0.0));
  std::map<std::string, std::size_t> index;
  for (std::size_t v = 0; v < enc.levels.size(); ++v) index[enc.levels[v]] = v;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const std::size_t v = index[raw[i]];
    if (v > 0) cols[v - 1][i] = 1.0;
  }
  for (std::size_t v = 1; v < enc.levels.size(); ++v)
    labels.push_back(name + "=" + enc.levels[v]);
  return cols;
}

namespace detail {

inline std::vector<std::string> split_line(const std::string& line, char delim) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == delim) {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

inline double parse_cell(const std::string& s, const std::string& what, std::size_t lineno) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0')
    throw ParseError("line " + std::to_string(lineno) + ": cannot parse " + what + " value '" +
                     s + "'");
  return v;
}

}  // namespace detail

// Reads a delimited text file against the schema. Rows missing the outcome,
// any covariate, or the first replicate day are dropped (counted in the
// report); later missing days become absent entries in the presence mask.
// A day with some but not all components missing is treated wholly absent,
// with a warning. Columns the schema does not mention are ignored.
inline LoadReport load_table(const std::string& path, const TableSchema& schema) {
  schema.validate();
  std::ifstream in(path);
  if (!in) throw ParseError("load_table: cannot open " + path);

  std::string line;
  if (!std::getline(in, line)) throw ParseError("load_table: empty file " + path);
  const std::vector<std::string> header = detail::split_line(line, schema.delimiter);
  std::map<std::string, std::size_t> col_of;
  for (std::size_t j = 0; j < header.size(); ++j) col_of.emplace(header[j], j);

  const auto require = [&](const std::string& name) {
    auto it = col_of.find(name);
    if (it == col_of.end())
      throw SchemaMismatch("load_table: column '" + name + "' not found in " + path);
    return it->second;
  };
  const std::size_t y_col = require(schema.outcome_column);
  const std::size_t p = schema.p(), k = schema.k();
  std::vector<std::vector<std::size_t>> rep_cols(p, std::vector<std::size_t>(k));
  for (std::size_t l = 0; l < p; ++l)
    for (std::size_t j = 0; j < k; ++j) rep_cols[l][j] = require(schema.replicate_columns[l][j]);
  std::vector<std::size_t> cov_cols;
  for (const auto& cov : schema.covariate_columns) cov_cols.push_back(require(cov.name));

  LoadReport report;
  std::vector<double> y;
  std::vector<double> xs;                             // row-major (l, j) blocks per row
  std::vector<std::uint8_t> present;                  // k per row
  std::vector<std::vector<double>> num_cov(cov_cols.size());
  std::vector<std::vector<std::string>> cat_cov(cov_cols.size());
  std::size_t mixed_days = 0;

  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    ++report.rows_read;
    const std::vector<std::string> f = detail::split_line(line, schema.delimiter);
    if (f.size() != header.size())
      throw ParseError("line " + std::to_string(lineno) + ": expected " +
                       std::to_string(header.size()) + " fields, got " +
                       std::to_string(f.size()));

    const auto is_missing = [&](std::size_t col) { return f[col] == schema.missing_token; };

    bool drop = is_missing(y_col);
    for (std::size_t c = 0; c < cov_cols.size() && !drop; ++c)
      if (is_missing(cov_cols[c])) drop = true;
    for (std::size_t l = 0; l < p && !drop; ++l)
      if (is_missing(rep_cols[l][0])) drop = true;
    if (drop) {
      ++report.rows_dropped;
      continue;
    }

    y.push_back(detail::parse_cell(f[y_col], "outcome", lineno));
    for (std::size_t j = 0; j < k; ++j) {
      std::size_t n_missing = 0;
      for (std::size_t l = 0; l < p; ++l)
        if (is_missing(rep_cols[l][j])) ++n_missing;
      const bool day_present = n_missing == 0;
      if (n_missing > 0 && n_missing < p) ++mixed_days;
      present.push_back(day_present ? 1 : 0);
      if (day_present) {
        for (std::size_t l = 0; l < p; ++l)
          xs.push_back(detail::parse_cell(f[rep_cols[l][j]], "replicate", lineno));
      } else {
        for (std::size_t l = 0; l < p; ++l)
          xs.push_back(std::numeric_limits<double>::quiet_NaN());
      }
    }
    for (std::size_t c = 0; c < cov_cols.size(); ++c) {
      if (schema.covariate_columns[c].kind == CovariateKind::numeric)
        num_cov[c].push_back(detail::parse_cell(f[cov_cols[c]],
                                                schema.covariate_columns[c].name, lineno));
      else
        cat_cov[c].push_back(f[cov_cols[c]]);
    }
  }
  if (mixed_days > 0)
    report.warnings.push_back(std::to_string(mixed_days) +
                              " day entries had only some components recorded; "
                              "treated as absent days");

  const std::size_t n = y.size();
  if (n == 0) throw Degenerate("load_table: no usable rows in " + path);

  // Encode covariates into the z block.
  std::vector<std::vector<double>> z_cols;
  for (std::size_t c = 0; c < cov_cols.size(); ++c) {
    const auto& cov = schema.covariate_columns[c];
    if (cov.kind == CovariateKind::numeric) {
      z_cols.push_back(std::move(num_cov[c]));
      report.z_labels.push_back(cov.name);
    } else {
      CategoricalEncoding enc;
      auto dummies = encode_categoricals(cov.name, cat_cov[c], enc, report.z_labels,
                                         report.warnings);
      for (auto& d : dummies) z_cols.push_back(std::move(d));
      report.encodings.push_back(std::move(enc));
    }
  }

  Dataset ds = Dataset::sized(n, p, k, z_cols.size());
  ds.y = std::move(y);
  ds.present = std::move(present);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < k; ++j)
      for (std::size_t l = 0; l < p; ++l) ds.xstar(i, l, j) = xs[(i * k + j) * p + l];
  for (std::size_t c = 0; c < z_cols.size(); ++c)
    for (std::size_t i = 0; i < n; ++i) ds.z(i, c) = z_cols[c][i];
  ds.validate();
  report.dataset = std::move(ds);
  return report;
}

// Column layout used by write_dataset_csv, so simulated data round-trip.
inline TableSchema schema_for_dataset(const Dataset& ds) {
  TableSchema schema;
  schema.outcome_column = "y";
  schema.replicate_columns.resize(ds.p);
  for (std::size_t l = 0; l < ds.p; ++l)
    for (std::size_t j = 0; j < ds.k; ++j)
      schema.replicate_columns[l].push_back("x" + std::to_string(l + 1) + "_d" +
                                            std::to_string(j + 1));
  for (std::size_t c = 0; c < ds.q; ++c)
    schema.covariate_columns.push_back(
        {"z" + std::to_string(c + 1), CovariateKind::numeric});
  return schema;
}

// Writes y, the replicate grid, covariates, and optionally the latent truth
// columns (ignored by load_table since no schema mentions them). Absent days
// write as the empty missing token.
inline void write_dataset_csv(const Dataset& ds, const std::string& path,
                              bool with_truth = false) {
  if (with_truth && !ds.has_truth())
    throw DomainError("write_dataset_csv: dataset has no truth columns");
  std::ofstream out(path);
  if (!out) throw Error("write_dataset_csv: cannot open " + path);
  char buf[40];

  out << "y";
  for (std::size_t l = 0; l < ds.p; ++l)
    for (std::size_t j = 0; j < ds.k; ++j) out << ",x" << (l + 1) << "_d" << (j + 1);
  for (std::size_t c = 0; c < ds.q; ++c) out << ",z" << (c + 1);
  if (with_truth)
    for (std::size_t l = 0; l < ds.p; ++l) out << ",x" << (l + 1) << "_true";
  out << '\n';

  const auto put = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    out << buf;
  };
  for (std::size_t i = 0; i < ds.n; ++i) {
    put(ds.y[i]);
    for (std::size_t l = 0; l < ds.p; ++l)
      for (std::size_t j = 0; j < ds.k; ++j) {
        out << ',';
        if (ds.is_present(i, j)) put(ds.xstar(i, l, j));
      }
    for (std::size_t c = 0; c < ds.q; ++c) {
      out << ',';
      put(ds.z(i, c));
    }
    if (with_truth)
      for (std::size_t l = 0; l < ds.p; ++l) {
        out << ',';
        put(ds.xtrue(i, l));
      }
    out << '\n';
  }
}

}  // namespace errlab
