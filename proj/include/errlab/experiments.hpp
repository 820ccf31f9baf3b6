// The Monte Carlo experiment grid: scenario x preparation x model x
// replication, with deterministic per-task random streams, CSV persistence,
// and aggregation.
#pragma once

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "errlab/datagen.hpp"
#include "errlab/errors.hpp"
#include "errlab/linreg.hpp"
#include "errlab/neuralnet.hpp"
#include "errlab/prepare.hpp"
#include "errlab/rng.hpp"
#include "errlab/theory.hpp"

namespace errlab {

inline double mse(const std::vector<double>& predicted, const std::vector<double>& actual) {
  if (predicted.size() != actual.size() || predicted.empty())
    throw LengthMismatch("mse: length mismatch or empty input");
  double s = 0.0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const double e = predicted[i] - actual[i];
    s += e * e;
  }
  return s / static_cast<double>(predicted.size());
}

inline double overfit_gap(double train_mse, double test_mse) {
  return test_mse - train_mse;
}

enum class ModelKind { ols, mlp };
enum class FeatureSet { prepared, truth, prepared_log };

inline std::string feature_set_name(FeatureSet f) {
  switch (f) {
    case FeatureSet::prepared: return "prepared";
    case FeatureSet::truth: return "truth";
    case FeatureSet::prepared_log: return "prepared_log";
  }
  throw DomainError("feature_set_name: bad enum");
}

inline FeatureSet feature_set_from(const std::string& s) {
  if (s == "prepared") return FeatureSet::prepared;
  if (s == "truth") return FeatureSet::truth;
  if (s == "prepared_log") return FeatureSet::prepared_log;
  throw UnknownScenario("unknown feature set: " + s);
}

// What to fit in a cell. The feature set decides which columns enter the
// design: the pipeline's output, the latent truth (reference models), or the
// pipeline's output plus its elementwise log. Error-free covariates are
// always appended. MLP settings are ignored for OLS models.
struct ModelDescriptor {
  ModelKind kind = ModelKind::ols;
  FeatureSet features = FeatureSet::prepared;
  std::string name;  // defaults to kind[features] when empty
  std::vector<std::size_t> hidden = {32, 16};
  Activation hidden_activation = Activation::relu;
  TrainConfig train_config;

  std::string display_name() const {
    if (!name.empty()) return name;
    std::string base = kind == ModelKind::ols ? "ols" : "mlp";
    if (features != FeatureSet::prepared) base += "[" + feature_set_name(features) + "]";
    return base;
  }
};

struct ExperimentConfig {
  std::vector<ScenarioSpec> scenarios;
  std::vector<Pipeline> preparations;
  std::vector<ModelDescriptor> models;
  std::size_t replications = 20;
  std::optional<std::size_t> test_n;  // defaults to each scenario's n
  std::uint64_t seed = 0;
  std::string output;  // directory for results.csv / aggregates.csv; empty = no files

  void validate() const {
    if (scenarios.empty() || preparations.empty() || models.empty())
      throw DomainError("ExperimentConfig: scenarios, preparations, models must be non-empty");
    if (replications == 0) throw DomainError("ExperimentConfig: replications must be positive");
  }
};

struct ResultRow {
  std::string scenario;
  std::size_t days = 0;
  std::size_t n = 0;
  std::string preparation;
  std::string model;
  std::size_t rep = 0;
  double train_mse = 0.0;
  double test_mse = 0.0;
  std::uint64_t seed = 0;
  std::int64_t wall_ms = 0;
  bool failed = false;
};

struct AggregateRow {
  std::string scenario;
  std::size_t days = 0;
  std::size_t n = 0;
  std::string preparation;
  std::string model;
  std::size_t reps = 0;      // successful replications
  std::size_t failures = 0;
  double mean_train_mse = 0.0;
  double sd_train_mse = 0.0;
  double se_train_mse = 0.0;
  double mean_test_mse = 0.0;
  double sd_test_mse = 0.0;
  double se_test_mse = 0.0;
};

struct ResultTable {
  std::vector<ResultRow> rows;

  bool has_failures() const {
    for (const auto& r : rows)
      if (r.failed) return true;
    return false;
  }

  std::vector<std::string> failed_cells() const {
    std::vector<std::string> out;
    for (const auto& r : rows)
      if (r.failed)
        out.push_back(r.scenario + "/" + r.preparation + "/" + r.model + "/rep" +
                      std::to_string(r.rep));
    return out;
  }

  // Per-cell mean/sd/standard error over successful replications, in first-
  // appearance order of the cells.
  std::vector<AggregateRow> aggregate() const {
    std::vector<AggregateRow> out;
    std::map<std::string, std::size_t> index;
    std::vector<std::vector<const ResultRow*>> members;
    for (const auto& r : rows) {
      const std::string key = r.scenario + "\x1f" + std::to_string(r.days) + "\x1f" +
                              std::to_string(r.n) + "\x1f" + r.preparation + "\x1f" + r.model;
      auto it = index.find(key);
      if (it == index.end()) {
        index.emplace(key, out.size());
        AggregateRow a;
        a.scenario = r.scenario;
        a.days = r.days;
        a.n = r.n;
        a.preparation = r.preparation;
        a.model = r.model;
        out.push_back(a);
        members.emplace_back();
        it = index.find(key);
      }
      members[it->second].push_back(&r);
    }
    for (std::size_t c = 0; c < out.size(); ++c) {
      AggregateRow& a = out[c];
      double st = 0.0, se = 0.0;
      std::size_t m = 0;
      for (const ResultRow* r : members[c]) {
        if (r->failed) {
          ++a.failures;
          continue;
        }
        ++m;
        st += r->train_mse;
        se += r->test_mse;
      }
      a.reps = m;
      if (m == 0) continue;
      a.mean_train_mse = st / static_cast<double>(m);
      a.mean_test_mse = se / static_cast<double>(m);
      if (m > 1) {
        double vt = 0.0, ve = 0.0;
        for (const ResultRow* r : members[c]) {
          if (r->failed) continue;
          vt += (r->train_mse - a.mean_train_mse) * (r->train_mse - a.mean_train_mse);
          ve += (r->test_mse - a.mean_test_mse) * (r->test_mse - a.mean_test_mse);
        }
        a.sd_train_mse = std::sqrt(vt / static_cast<double>(m - 1));
        a.sd_test_mse = std::sqrt(ve / static_cast<double>(m - 1));
        a.se_train_mse = a.sd_train_mse / std::sqrt(static_cast<double>(m));
        a.se_test_mse = a.sd_test_mse / std::sqrt(static_cast<double>(m));
      }
    }
    return out;
  }
};

namespace detail {

// Shortest decimal that round-trips a double exactly.
inline std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  double back = std::strtod(buf, nullptr);
  if (back == v) {
    for (int prec = 1; prec <= 16; ++prec) {
      char probe[40];
      std::snprintf(probe, sizeof(probe), "%.*g", prec, v);
      if (std::strtod(probe, nullptr) == v) return probe;
    }
  }
  return buf;
}

// Stream roles for one replication's work.
enum : std::uint64_t {
  kRoleTrainData = 0,
  kRoleTestData = 1,
  kRoleModelInit = 2,
  kRoleTrainShuffle = 3,
};

constexpr std::uint64_t kNoIndex = 0xFF;

// Streams must not depend on execution order, and data streams must not
// depend on which preparation or model consumes them.
inline std::uint64_t stream_id(std::uint64_t scenario_idx, std::uint64_t prep_idx,
                               std::uint64_t model_idx, std::uint64_t rep,
                               std::uint64_t role) {
  return (scenario_idx << 48) | (prep_idx << 40) | (model_idx << 32) | (rep << 8) | role;
}

}  // namespace detail

// Identifies one cell of the grid plus the replication index.
struct CellContext {
  std::size_t scenario_idx = 0;
  std::size_t prep_idx = 0;
  std::size_t model_idx = 0;
  std::size_t rep = 0;
  std::uint64_t master_seed = 0;
  std::optional<std::size_t> test_n;
};

namespace detail {

inline DesignMatrix assemble_features(const Pipeline& pipe, FeatureSet features,
                                      const Dataset& ds) {
  DesignMatrix dm;
  if (features == FeatureSet::truth) {
    if (!ds.has_truth()) throw DomainError("assemble_features: dataset has no truth columns");
    dm.x = Matrix(ds.n, ds.p);
    for (std::size_t i = 0; i < ds.n; ++i)
      for (std::size_t l = 0; l < ds.p; ++l) dm.x(i, l) = ds.xtrue(i, l);
    for (std::size_t l = 0; l < ds.p; ++l)
      dm.columns.push_back({"x" + std::to_string(l + 1) + "_true", "truth",
                            static_cast<int>(l), -1});
  } else {
    dm = apply_pipeline(pipe, ds);
    if (features == FeatureSet::prepared_log) {
      const std::size_t base_cols = dm.cols();
      for (std::size_t j = 0; j < base_cols; ++j) {
        std::vector<double> col = dm.column(j);
        for (double& v : col) {
          if (!(v > 0.0))
            throw DomainError("assemble_features: log of a non-positive prepared value");
          v = std::log(v);
        }
        ColumnMeta meta = dm.columns[j];
        meta.label = "log_" + meta.label;
        meta.source = "log_" + meta.source;
        dm.append_column(col, meta);
      }
    }
  }
  for (std::size_t c = 0; c < ds.q; ++c) {
    std::vector<double> col(ds.n);
    for (std::size_t i = 0; i < ds.n; ++i) col[i] = ds.z(i, c);
    dm.append_column(col, {"z" + std::to_string(c + 1), "z", -1, -1});
  }
  return dm;
}

struct FittedModel {
  std::optional<LinearModel> linear;
  std::optional<MLP> net;
  double y_mean = 0.0, y_sd = 1.0;

  std::vector<double> predict(const DesignMatrix& dm) const {
    std::vector<double> out;
    if (linear) {
      out = predict_linear(*linear, dm);
    } else {
      out = predict_nn(*net, dm);
      for (double& v : out) v = v * y_sd + y_mean;
    }
    return out;
  }
};

inline FittedModel fit_model(const ModelDescriptor& md, const DesignMatrix& dm,
                             const std::vector<double>& y, std::uint64_t master_seed,
                             std::uint64_t init_stream, std::uint64_t shuffle_stream) {
  FittedModel fm;
  if (md.kind == ModelKind::ols) {
    fm.linear = fit_ols(dm, y);
    return fm;
  }
  // The network trains on a centered, unit-scale outcome; predictions are
  // mapped back before MSE is computed.
  double mean = 0.0;
  for (double v : y) mean += v;
  mean /= static_cast<double>(y.size());
  double ss = 0.0;
  for (double v : y) ss += (v - mean) * (v - mean);
  double sd = y.size() > 1 ? std::sqrt(ss / static_cast<double>(y.size() - 1)) : 1.0;
  if (!(sd > 0.0)) sd = 1.0;
  std::vector<double> ys(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) ys[i] = (y[i] - mean) / sd;

  RngState init_rng(master_seed, init_stream);
  MLP net = init_network(Architecture::mlp(dm.cols(), md.hidden, md.hidden_activation),
                         init_rng);
  TrainConfig cfg = md.train_config;
  cfg.seed = master_seed;
  cfg.seed_stream = shuffle_stream;
  auto [fitted, report] = train(std::move(net), dm, ys, cfg);
  fm.net = std::move(fitted);
  fm.y_mean = mean;
  fm.y_sd = sd;
  return fm;
}

}  // namespace detail

// Runs one replication of one grid cell: generate train/test data on
// replication-keyed streams, fit the pipeline on the training split, fit the
// model, and score both splits. A Diverged training run comes back as a
// failed row rather than an exception.
inline ResultRow run_cell(const ScenarioSpec& spec, const Pipeline& pipe,
                          const ModelDescriptor& md, const CellContext& ctx) {
  const auto t0 = std::chrono::steady_clock::now();
  ResultRow row;
  row.scenario = spec.id;
  row.days = spec.k;
  row.n = spec.n;
  row.preparation = pipe.name();
  row.model = md.display_name();
  row.rep = ctx.rep;
  row.seed = ctx.master_seed;

  try {
    RngState train_rng(ctx.master_seed,
                       detail::stream_id(ctx.scenario_idx, detail::kNoIndex, detail::kNoIndex,
                                         ctx.rep, detail::kRoleTrainData));
    RngState test_rng(ctx.master_seed,
                      detail::stream_id(ctx.scenario_idx, detail::kNoIndex, detail::kNoIndex,
                                        ctx.rep, detail::kRoleTestData));
    const Dataset train_ds = generate(spec, train_rng);
    ScenarioSpec test_spec = spec;
    test_spec.n = ctx.test_n.value_or(spec.n);
    const Dataset test_ds = generate(test_spec, test_rng);

    const Pipeline fitted_pipe = fit_pipeline(pipe, train_ds);
    DesignMatrix train_dm = detail::assemble_features(fitted_pipe, md.features, train_ds);
    DesignMatrix test_dm = detail::assemble_features(fitted_pipe, md.features, test_ds);
    const StandardizeParams sp = standardize(train_dm);
    standardize(test_dm, sp);
    train_dm.validate();
    test_dm.validate();

    const std::uint64_t init_stream = detail::stream_id(
        ctx.scenario_idx, ctx.prep_idx, ctx.model_idx, ctx.rep, detail::kRoleModelInit);
    const std::uint64_t shuffle_stream = detail::stream_id(
        ctx.scenario_idx, ctx.prep_idx, ctx.model_idx, ctx.rep, detail::kRoleTrainShuffle);
    const detail::FittedModel fm =
        detail::fit_model(md, train_dm, train_ds.y, ctx.master_seed, init_stream, shuffle_stream);

    row.train_mse = mse(fm.predict(train_dm), train_ds.y);
    row.test_mse = mse(fm.predict(test_dm), test_ds.y);
  } catch (const Diverged&) {
    row.failed = true;
    row.train_mse = std::numeric_limits<double>::quiet_NaN();
    row.test_mse = std::numeric_limits<double>::quiet_NaN();
  }
  row.wall_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                    std::chrono::steady_clock::now() - t0)
                    .count();
  return row;
}

namespace detail {

inline unsigned worker_count(std::size_t tasks) {
  unsigned hw = std::thread::hardware_concurrency();
  if (const char* env = std::getenv("ERRLAB_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v > 0) hw = static_cast<unsigned>(v);
  }
  if (hw == 0) hw = 1;
  return static_cast<unsigned>(std::min<std::size_t>(hw, tasks));
}

// Runs fn(0..tasks-1) across a small pool. Task outputs must be written to
// pre-assigned slots so scheduling cannot affect results.
template <typename Fn>
void parallel_for(std::size_t tasks, Fn&& fn) {
  const unsigned workers = worker_count(tasks);
  if (workers <= 1) {
    for (std::size_t t = 0; t < tasks; ++t) fn(t);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex err_mutex;
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t t = next.fetch_add(1);
        if (t >= tasks) return;
        try {
          fn(t);
        } catch (...) {
          std::lock_guard<std::mutex> lock(err_mutex);
          if (!first_error) first_error = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace detail

inline void write_results_csv(const ResultTable& table, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("write_results_csv: cannot open " + path);
  out << "scenario,days,n,preparation,model,rep,train_mse,test_mse,seed,wall_ms,failed\n";
  for (const auto& r : table.rows) {
    out << r.scenario << ',' << r.days << ',' << r.n << ',' << r.preparation << ','
        << r.model << ',' << r.rep << ',' << detail::fmt_double(r.train_mse) << ','
        << detail::fmt_double(r.test_mse) << ',' << r.seed << ',' << r.wall_ms << ','
        << (r.failed ? 1 : 0) << '\n';
  }
}

inline void write_aggregates_csv(const std::vector<AggregateRow>& aggs,
                                 const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("write_aggregates_csv: cannot open " + path);
  out << "scenario,days,n,preparation,model,reps,failures,mean_train_mse,sd_train_mse,"
         "se_train_mse,mean_test_mse,sd_test_mse,se_test_mse\n";
  for (const auto& a : aggs) {
    out << a.scenario << ',' << a.days << ',' << a.n << ',' << a.preparation << ','
        << a.model << ',' << a.reps << ',' << a.failures << ','
        << detail::fmt_double(a.mean_train_mse) << ',' << detail::fmt_double(a.sd_train_mse)
        << ',' << detail::fmt_double(a.se_train_mse) << ','
        << detail::fmt_double(a.mean_test_mse) << ',' << detail::fmt_double(a.sd_test_mse)
        << ',' << detail::fmt_double(a.se_test_mse) << '\n';
  }
}

inline ResultTable read_results_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw MalformedResults("read_results_csv: cannot open " + path);
  std::string line;
  if (!std::getline(in, line))
    throw MalformedResults("read_results_csv: empty file " + path);
  const std::string expect =
      "scenario,days,n,preparation,model,rep,train_mse,test_mse,seed,wall_ms,failed";
  if (line != expect) throw MalformedResults("read_results_csv: unexpected header");
  ResultTable table;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string tok;
    while (std::getline(ss, tok, ',')) f.push_back(tok);
    if (f.size() != 11)
      throw MalformedResults("read_results_csv: bad field count at line " +
                             std::to_string(lineno));
    try {
      ResultRow r;
      r.scenario = f[0];
      r.days = std::stoull(f[1]);
      r.n = std::stoull(f[2]);
      r.preparation = f[3];
      r.model = f[4];
      r.rep = std::stoull(f[5]);
      r.train_mse = std::stod(f[6]);
      r.test_mse = std::stod(f[7]);
      r.seed = std::stoull(f[8]);
      r.wall_ms = std::stoll(f[9]);
      r.failed = f[10] == "1";
      table.rows.push_back(std::move(r));
    } catch (const std::exception&) {
      throw MalformedResults("read_results_csv: unparseable line " + std::to_string(lineno));
    }
  }
  return table;
}

namespace detail {
inline void ensure_directory(const std::string& path) {
  std::error_code ec;
  std::filesystem::create_directories(path, ec);
  if (ec) throw Error("cannot create directory " + path + ": " + ec.message());
}
}  // namespace detail

// Runs the whole grid. Replications of every cell execute on order-free
// streams, so results are identical no matter the thread count or schedule.
// When config.output is set, results.csv and aggregates.csv are written
// there. Failed (diverged) replications stay in the table, flagged, and are
// excluded from aggregates; callers decide how to surface them.
inline ResultTable run_experiment(const ExperimentConfig& config) {
  config.validate();
  for (const auto& s : config.scenarios) s.validate();

  struct Task {
    std::size_t s, p, m, r;
  };
  std::vector<Task> tasks;
  for (std::size_t s = 0; s < config.scenarios.size(); ++s)
    for (std::size_t p = 0; p < config.preparations.size(); ++p)
      for (std::size_t m = 0; m < config.models.size(); ++m)
        for (std::size_t r = 0; r < config.replications; ++r) tasks.push_back({s, p, m, r});

  ResultTable table;
  table.rows.resize(tasks.size());
  detail::parallel_for(tasks.size(), [&](std::size_t t) {
    const Task& task = tasks[t];
    CellContext ctx;
    ctx.scenario_idx = task.s;
    ctx.prep_idx = task.p;
    ctx.model_idx = task.m;
    ctx.rep = task.r;
    ctx.master_seed = config.seed;
    ctx.test_n = config.test_n;
    table.rows[t] = run_cell(config.scenarios[task.s], config.preparations[task.p],
                             config.models[task.m], ctx);
  });

  if (!config.output.empty()) {
    detail::ensure_directory(config.output);
    write_results_csv(table, config.output + "/results.csv");
    write_aggregates_csv(table.aggregate(), config.output + "/aggregates.csv");
  }
  return table;
}

// Fixed measurement budget: one scenario per days option with n = budget/k.
// Throws IndivisibleBudget before any work if some option does not divide
// the budget.
inline ResultTable run_budget_tradeoff(std::size_t budget,
                                       const std::vector<std::size_t>& days_options,
                                       ExperimentConfig config) {
  if (days_options.empty())
    throw DomainError("run_budget_tradeoff: need at least one days option");
  TradeoffInputs inputs{budget, days_options};
  std::vector<ScenarioSpec> scenarios;
  for (std::size_t k : days_options) {
    const std::size_t n = inputs.n_for(k);  // throws IndivisibleBudget
    PaperOverrides ov;
    ov.k = k;
    ov.n = n;
    ov.budget = budget;
    ScenarioSpec s = make_paper_spec("sim2", ov);
    s.id = "sim2-" + std::to_string(budget);
    scenarios.push_back(std::move(s));
  }
  config.scenarios = std::move(scenarios);
  return run_experiment(config);
}

}  // namespace errlab
