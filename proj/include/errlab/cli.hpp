// Command-line front end: simulate, run, tradeoff, theory, lemma, analyze,
// report. Exit codes: 0 success, 1 usage, 2 bad data or configuration,
// 3 completed with failed cells.
#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "errlab/datagen.hpp"
#include "errlab/errors.hpp"
#include "errlab/experiments.hpp"
#include "errlab/ingest.hpp"
#include "errlab/linreg.hpp"
#include "errlab/neuralnet.hpp"
#include "errlab/prepare.hpp"
#include "errlab/serde.hpp"
#include "errlab/svg_report.hpp"
#include "errlab/theory.hpp"

namespace errlab {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;
inline constexpr int kExitPartial = 3;

inline std::optional<std::uint64_t> env_seed() {
  const char* env = std::getenv("ERRLAB_SEED");
  if (!env) return {};
  char* end = nullptr;
  const unsigned long long v = std::strtoull(env, &end, 10);
  if (end == env || *end != '\0')
    throw ParseError("ERRLAB_SEED must be an unsigned integer");
  return static_cast<std::uint64_t>(v);
}

// Seed precedence: command-line flag, then ERRLAB_SEED, then configuration.
inline std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag,
                                  std::uint64_t config_seed) {
  if (flag) return *flag;
  if (const auto e = env_seed()) return *e;
  return config_seed;
}

// ---- the analysis workflow ----

struct AnalyzeConfig {
  double test_fraction = 0.2;
  std::uint64_t seed = 0;
  std::vector<std::size_t> hidden = {32, 16};
  Activation hidden_activation = Activation::relu;
  TrainConfig train_config;
  int interaction_order = 3;
  int cv_folds = 10;
  double parsimony_tolerance = 0.01;
};

inline AnalyzeConfig analyze_config_from_json(const json& j) {
  AnalyzeConfig c;
  try {
    c.test_fraction = j.value("test_fraction", c.test_fraction);
    c.seed = j.value("seed", c.seed);
    if (j.contains("hidden")) c.hidden = j["hidden"].get<std::vector<std::size_t>>();
    if (j.contains("activation"))
      c.hidden_activation = activation_from(j["activation"].get<std::string>());
    c.train_config.learning_rate = j.value("learning_rate", c.train_config.learning_rate);
    c.train_config.batch_size = j.value("batch_size", c.train_config.batch_size);
    c.train_config.max_epochs = j.value("max_epochs", c.train_config.max_epochs);
    c.train_config.patience = j.value("patience", c.train_config.patience);
    c.train_config.validation_fraction =
        j.value("validation_fraction", c.train_config.validation_fraction);
    c.interaction_order = j.value("interaction_order", c.interaction_order);
    c.cv_folds = j.value("cv_folds", c.cv_folds);
    c.parsimony_tolerance = j.value("parsimony_tolerance", c.parsimony_tolerance);
  } catch (const json::exception& e) {
    throw SchemaMismatch(std::string("analyze config: ") + e.what());
  }
  c.train_config.validate();
  return c;
}

struct AnalyzeRow {
  std::string label;
  std::size_t terms = 0;  // predictor columns, or selected terms
  double cv_rmse = std::numeric_limits<double>::quiet_NaN();
  double train_mse = 0.0;
  double test_mse = 0.0;
};

struct AnalyzeReport {
  std::vector<AnalyzeRow> rows;
  double full_model_cv_rmse = 0.0;
  double optimal_cv_rmse = 0.0;
  std::size_t optimal_size = 0;
  double parsimonious_cv_rmse = 0.0;
  std::size_t parsimonious_size = 0;
};

namespace detail {

inline DesignMatrix with_covariates(DesignMatrix dm, const Dataset& ds) {
  for (std::size_t c = 0; c < ds.q; ++c) {
    std::vector<double> col(ds.n);
    for (std::size_t i = 0; i < ds.n; ++i) col[i] = ds.z(i, c);
    dm.append_column(col, {"z" + std::to_string(c + 1), "z", -1, -1});
  }
  return dm;
}

inline DesignMatrix subset_terms(const DesignMatrix& dm,
                                 const std::vector<TermGroup>& terms,
                                 const std::vector<std::size_t>& active) {
  DesignMatrix sub;
  for (std::size_t t : active)
    for (std::size_t c : terms[t].columns) sub.append_column(dm.column(c), dm.columns[c]);
  return sub;
}

}  // namespace detail

// Fits the six benchmark models on one two-way split of the data: network
// and linear fits on averaged and concatenated replicates, then backward
// CV selection over a three-way interaction basis, reported at the CV
// optimum and at the parsimonious size.
inline AnalyzeReport run_analysis(const Dataset& ds, const AnalyzeConfig& cfg) {
  Dataset work = ds;
  if (work.k == 2) {
    work = impute_missing_second_day(std::move(work));
  } else if (!work.all_present()) {
    throw MissingNotImputed("run_analysis: incomplete replicate days with k != 2");
  }

  RngState split_rng(cfg.seed, 1);
  auto [train, test] = stratified_split(work, cfg.test_fraction, split_rng);

  AnalyzeReport report;
  const auto add_basic_row = [&](const std::string& label, bool neural, bool averaged,
                                 std::size_t model_idx) {
    DesignMatrix train_dm = detail::with_covariates(
        averaged ? average_replicates(train) : concatenate_replicates(train), train);
    DesignMatrix test_dm = detail::with_covariates(
        averaged ? average_replicates(test) : concatenate_replicates(test), test);
    const StandardizeParams sp = standardize(train_dm);
    standardize(test_dm, sp);

    ModelDescriptor md;
    md.kind = neural ? ModelKind::mlp : ModelKind::ols;
    md.hidden = cfg.hidden;
    md.hidden_activation = cfg.hidden_activation;
    md.train_config = cfg.train_config;
    const detail::FittedModel fm = detail::fit_model(
        md, train_dm, train.y, cfg.seed, 0x10 + model_idx, 0x20 + model_idx);

    AnalyzeRow row;
    row.label = label;
    row.terms = train_dm.cols();
    row.train_mse = mse(fm.predict(train_dm), train.y);
    row.test_mse = mse(fm.predict(test_dm), test.y);
    report.rows.push_back(std::move(row));
  };

  add_basic_row("mlp/average", true, true, 0);
  add_basic_row("mlp/concatenate", true, false, 1);
  add_basic_row("ols/average", false, true, 2);
  add_basic_row("ols/concatenate", false, false, 3);

  // Backward selection over averaged mains, covariates, and their
  // interactions. Expansion runs on the raw scale; the expanded design is
  // standardized afterwards with training parameters.
  DesignMatrix train_mains = detail::with_covariates(average_replicates(train), train);
  DesignMatrix test_mains = detail::with_covariates(average_replicates(test), test);
  InteractionExpansion expansion = expand_interactions(train_mains, cfg.interaction_order);
  DesignMatrix test_expanded = expand_like(expansion.dm, test_mains);
  const StandardizeParams sp = standardize(expansion.dm);
  standardize(test_expanded, sp);

  std::vector<std::string> strata;
  if (!train.had_second_day.empty()) {
    strata.reserve(train.n);
    for (std::size_t i = 0; i < train.n; ++i)
      strata.push_back(train.had_second_day[i] ? "1" : "0");
  }
  RngState fold_rng(cfg.seed, 2);
  const SelectionResult sel = backward_select(expansion.dm, train.y, expansion.terms,
                                              cfg.cv_folds, fold_rng, strata);
  report.full_model_cv_rmse = sel.path.steps.front().cv_rmse;
  report.optimal_cv_rmse = sel.best_cv_rmse;
  report.optimal_size = sel.best_terms.size();
  report.parsimonious_size = parsimony_select(sel.path, cfg.parsimony_tolerance);
  for (const auto& s : sel.path.steps)
    if (s.size == report.parsimonious_size) report.parsimonious_cv_rmse = s.cv_rmse;

  const auto add_selection_row = [&](const std::string& label,
                                     const std::vector<std::size_t>& active,
                                     double cv_rmse) {
    const LinearModel model = detail::refit_terms(expansion.dm, train.y, expansion.terms, active);
    const DesignMatrix train_sub = detail::subset_terms(expansion.dm, expansion.terms, active);
    const DesignMatrix test_sub = detail::subset_terms(test_expanded, expansion.terms, active);
    AnalyzeRow row;
    row.label = label;
    row.terms = active.size();
    row.cv_rmse = cv_rmse;
    row.train_mse = mse(predict_linear(model, train_sub), train.y);
    row.test_mse = mse(predict_linear(model, test_sub), test.y);
    report.rows.push_back(std::move(row));
  };

  add_selection_row("ols/backward_optimal", sel.best_terms, sel.best_cv_rmse);
  add_selection_row("ols/backward_parsimonious",
                    sel.path.terms_at_size(report.parsimonious_size),
                    report.parsimonious_cv_rmse);
  return report;
}

inline void write_analysis_csv(const AnalyzeReport& report, std::ostream& out) {
  out << "model,terms,cv_rmse,train_mse,test_mse\n";
  for (const auto& r : report.rows) {
    out << r.label << ',' << r.terms << ',';
    if (std::isfinite(r.cv_rmse)) out << detail::fmt_double(r.cv_rmse);
    out << ',' << detail::fmt_double(r.train_mse) << ',' << detail::fmt_double(r.test_mse)
        << '\n';
  }
}

// ---- subcommand bodies ----

namespace detail {

inline int cmd_simulate(const std::string& spec_path, const std::string& out_dir,
                        double missing_day2, bool with_truth,
                        const std::optional<std::uint64_t>& seed_flag) {
  ScenarioSpec spec = scenario_from_json(json_from_file(spec_path));
  spec.seed = resolve_seed(seed_flag, spec.seed);
  RngState rng(spec.seed, spec.seed_stream);
  Dataset ds = generate(spec, rng);
  if (missing_day2 > 0.0) {
    RngState miss_rng(spec.seed, spec.seed_stream + 1);  // keep generation stream intact
    ds = inject_missing_second_day(std::move(ds), missing_day2, miss_rng);
  }
  ensure_directory(out_dir);
  write_dataset_csv(ds, out_dir + "/dataset.csv", with_truth);
  json_to_file(table_schema_to_json(schema_for_dataset(ds)), out_dir + "/schema.json");
  std::size_t absent = 0;
  for (auto v : ds.present)
    if (!v) ++absent;
  std::cout << "wrote " << out_dir << "/dataset.csv: " << ds.n << " rows, " << ds.p
            << " components x " << ds.k << " days, " << ds.q << " covariates, " << absent
            << " absent day entries\n";
  return kExitOk;
}

inline void print_aggregates(const ResultTable& table, std::ostream& out) {
  char buf[256];
  out << "scenario         days model                 preparation           mean_test_mse"
         "  se_test_mse  reps\n";
  for (const auto& a : table.aggregate()) {
    std::snprintf(buf, sizeof(buf), "%-16s %4zu %-21s %-21s %13.4f %12.4f %5zu\n",
                  a.scenario.c_str(), a.days, a.model.c_str(), a.preparation.c_str(),
                  a.mean_test_mse, a.se_test_mse, a.reps);
    out << buf;
  }
}

inline int finish_run(const ExperimentConfig& config, const ResultTable& table) {
  if (!config.output.empty()) {
    json j;
    j["config"] = experiment_config_to_json(config);
    j["surrogate_view"] = "observed";
    json_to_file(j, config.output + "/run.json");
  }
  print_aggregates(table, std::cout);
  if (table.has_failures()) {
    std::cerr << "failed cells:\n";
    for (const auto& c : table.failed_cells()) std::cerr << "  " << c << '\n';
    return kExitPartial;
  }
  return kExitOk;
}

inline int cmd_run(const std::string& config_path,
                   const std::optional<std::uint64_t>& seed_flag,
                   const std::string& out_flag) {
  ExperimentConfig config = experiment_config_from_json(json_from_file(config_path));
  config.seed = resolve_seed(seed_flag, config.seed);
  if (!out_flag.empty()) config.output = out_flag;
  const ResultTable table = run_experiment(config);
  return finish_run(config, table);
}

// Tradeoff configs carry no scenarios (those come from the budget), so the
// strict experiment-config parser does not apply.
inline ExperimentConfig tradeoff_config_from_json(const json& j) {
  ExperimentConfig c;
  try {
    for (const auto& p : j.at("preparations")) c.preparations.push_back(pipeline_from_json(p));
    for (const auto& m : j.at("models")) c.models.push_back(model_from_json(m));
    c.replications = j.value("replications", std::size_t{20});
    if (j.contains("test_n")) c.test_n = j["test_n"].get<std::size_t>();
    c.seed = j.value("seed", std::uint64_t{0});
    c.output = j.value("output", std::string());
  } catch (const json::exception& e) {
    throw SchemaMismatch(std::string("tradeoff config: ") + e.what());
  }
  return c;
}

inline int cmd_tradeoff(std::size_t budget, const std::vector<std::size_t>& days,
                        const std::string& config_path,
                        const std::optional<std::uint64_t>& seed_flag,
                        const std::string& out_flag) {
  ExperimentConfig config = tradeoff_config_from_json(json_from_file(config_path));
  config.seed = resolve_seed(seed_flag, config.seed);
  if (!out_flag.empty()) config.output = out_flag;
  const ResultTable table = run_budget_tradeoff(budget, days, config);
  config.scenarios.clear();
  for (std::size_t k : days) {
    PaperOverrides ov;
    ov.k = k;
    ov.budget = budget;
    ScenarioSpec s = make_paper_spec("sim2", ov);
    s.id = "sim2-" + std::to_string(budget);
    config.scenarios.push_back(std::move(s));
  }
  return finish_run(config, table);
}

inline int cmd_theory(double sigma2, std::size_t k, const std::optional<double>& sigma_x2,
                      std::size_t draws, const std::optional<std::uint64_t>& seed_flag) {
  std::cout << "quantity,value\n";
  const auto put = [](const std::string& name, double v) {
    std::cout << name << ',' << fmt_double(v) << '\n';
  };
  put("averaged_error_variance", averaged_error_variance(sigma2, k));
  put("equivalent_lognormal_variance", equivalent_lognormal_variance(sigma2, k));
  put("equivalent_lognormal_variance_alt_form",
      equivalent_lognormal_variance_alt_form(sigma2, k));
  if (sigma_x2) put("conditional_truth_variance", conditional_truth_variance(sigma2, *sigma_x2, k));
  if (draws > 0) {
    RngState rng(resolve_seed(seed_flag, 0), 0);
    std::vector<double> means(draws);
    const double sd = std::sqrt(sigma2);
    for (std::size_t d = 0; d < draws; ++d) {
      double s = 0.0;
      for (std::size_t j = 0; j < k; ++j) s += rng.normal(0.0, sd);
      means[d] = s / static_cast<double>(k);
    }
    const auto [v, se] = variance_with_se(means);
    put("averaged_error_variance_mc", v);
    put("averaged_error_variance_mc_se", se);
  }
  return kExitOk;
}

inline int cmd_lemma(const std::string& fname, double omega, double sigma, std::size_t k,
                     std::size_t draws, const std::optional<std::uint64_t>& seed_flag) {
  RngState rng(resolve_seed(seed_flag, 0), 0);
  const auto [ra, rb, holds] = lemma1_check(lemma_fn_from(fname), omega, sigma, k, draws, rng);
  std::cout << "side,analytic,monte_carlo,se,draws\n";
  std::cout << "transform_of_average," << fmt_double(ra.analytic) << ','
            << fmt_double(ra.monte_carlo) << ',' << fmt_double(ra.mc_standard_error) << ','
            << ra.draws << '\n';
  std::cout << "average_of_transform," << fmt_double(rb.analytic) << ','
            << fmt_double(rb.monte_carlo) << ',' << fmt_double(rb.mc_standard_error) << ','
            << rb.draws << '\n';
  std::cout << "inequality_holds," << (holds ? 1 : 0) << ",,,\n";
  return kExitOk;
}

inline int cmd_analyze(const std::string& data_path, const std::string& schema_path,
                       const std::string& config_path, const std::string& out_path,
                       const std::optional<std::uint64_t>& seed_flag) {
  const TableSchema schema = table_schema_from_json(json_from_file(schema_path));
  AnalyzeConfig cfg = analyze_config_from_json(json_from_file(config_path));
  cfg.seed = resolve_seed(seed_flag, cfg.seed);
  const LoadReport loaded = load_table(data_path, schema);
  for (const auto& w : loaded.warnings) std::cerr << "warning: " << w << '\n';
  if (loaded.rows_dropped > 0)
    std::cerr << "dropped " << loaded.rows_dropped << " of " << loaded.rows_read
              << " rows with missing outcome, covariate, or first day\n";
  const AnalyzeReport report = run_analysis(loaded.dataset, cfg);
  if (out_path.empty()) {
    write_analysis_csv(report, std::cout);
  } else {
    std::ofstream out(out_path);
    if (!out) throw Error("cannot open " + out_path + " for writing");
    write_analysis_csv(report, out);
    std::cout << "wrote " << out_path << '\n';
  }
  return kExitOk;
}

inline int cmd_report(const std::string& results_path, const std::string& out_path) {
  const ResultTable table = read_results_csv(results_path);
  write_report_svg(table, out_path);
  std::cout << "wrote " << out_path << '\n';
  return kExitOk;
}

}  // namespace detail

// Builds the option tree and dispatches. Never calls exit(); suitable for
// driving from tests.
inline int run_main(int argc, const char* const* argv) {
  CLI::App app{"measurement error laboratory"};
  app.require_subcommand(1);

  // Bound uint64 options need a presence check to preserve "not given".
  std::uint64_t seed_value = 0;

  auto* sim = app.add_subcommand("simulate", "generate a synthetic dataset");
  std::string sim_spec, sim_out;
  double sim_missing = 0.0;
  bool sim_truth = false;
  sim->add_option("--spec", sim_spec, "scenario JSON file")->required();
  sim->add_option("--out", sim_out, "output directory")->required();
  sim->add_option("--missing-day2", sim_missing, "fraction of absent second days")
      ->check(CLI::Range(0.0, 1.0));
  sim->add_flag("--with-truth", sim_truth, "include latent truth columns");
  auto* sim_seed = sim->add_option("--seed", seed_value, "master seed");

  auto* run = app.add_subcommand("run", "run an experiment grid");
  std::string run_config, run_out;
  run->add_option("--config", run_config, "experiment JSON file")->required();
  run->add_option("--out", run_out, "output directory (overrides config)");
  auto* run_seed = run->add_option("--seed", seed_value, "master seed");

  auto* trade = app.add_subcommand("tradeoff", "fixed-budget days comparison");
  std::string trade_config, trade_out;
  std::size_t trade_budget = 0;
  std::vector<std::size_t> trade_days = {2, 4, 6, 8, 10};
  trade->add_option("--budget", trade_budget, "total measurement budget")->required();
  trade->add_option("--config", trade_config, "models/preparations JSON file")->required();
  trade->add_option("--days", trade_days, "replicate-day options")->delimiter(',');
  trade->add_option("--out", trade_out, "output directory (overrides config)");
  auto* trade_seed = trade->add_option("--seed", seed_value, "master seed");

  auto* theory = app.add_subcommand("theory", "error-variance quantities");
  double th_sigma2 = 0.0;
  std::size_t th_k = 1, th_draws = 0;
  double th_sigma_x2 = 0.0;
  theory->add_option("--sigma2", th_sigma2, "within-person error variance")->required();
  theory->add_option("--k", th_k, "replicate days")->required();
  auto* th_x2 = theory->add_option("--sigma-x2", th_sigma_x2, "truth variance (conditional row)");
  theory->add_option("--draws", th_draws, "Monte Carlo draws for a numeric check");
  auto* th_seed = theory->add_option("--seed", seed_value, "Monte Carlo seed");

  auto* lemma = app.add_subcommand("lemma", "replicate-averaging inequality check");
  std::string lm_f = "exp";
  double lm_omega = 0.0, lm_sigma = 1.0;
  std::size_t lm_k = 2, lm_draws = 100000;
  lemma->add_option("--f", lm_f, "transform: identity, exp, square, cube");
  lemma->add_option("--omega", lm_omega, "truth value");
  lemma->add_option("--sigma", lm_sigma, "error standard deviation")->required();
  lemma->add_option("--k", lm_k, "replicate days")->required();
  lemma->add_option("--draws", lm_draws, "Monte Carlo draws")->required();
  auto* lm_seed = lemma->add_option("--seed", seed_value, "Monte Carlo seed");

  auto* analyze = app.add_subcommand("analyze", "benchmark models on a data file");
  std::string an_data, an_schema, an_config, an_out;
  analyze->add_option("--data", an_data, "delimited data file")->required();
  analyze->add_option("--schema", an_schema, "table schema JSON")->required();
  analyze->add_option("--config", an_config, "analysis JSON file")->required();
  analyze->add_option("--out", an_out, "output CSV (default stdout)");
  auto* an_seed = analyze->add_option("--seed", seed_value, "master seed");

  auto* report = app.add_subcommand("report", "render results as SVG");
  std::string rp_results, rp_out;
  report->add_option("--results", rp_results, "results CSV from a run")->required();
  report->add_option("--out", rp_out, "output SVG path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  const auto given = [&](const CLI::Option* opt) -> std::optional<std::uint64_t> {
    if (opt->count() > 0) return seed_value;
    return std::nullopt;
  };

  try {
    if (app.got_subcommand(sim))
      return detail::cmd_simulate(sim_spec, sim_out, sim_missing, sim_truth, given(sim_seed));
    if (app.got_subcommand(run))
      return detail::cmd_run(run_config, given(run_seed), run_out);
    if (app.got_subcommand(trade))
      return detail::cmd_tradeoff(trade_budget, trade_days, trade_config, given(trade_seed),
                                  trade_out);
    if (app.got_subcommand(theory))
      return detail::cmd_theory(
          th_sigma2, th_k,
          th_x2->count() > 0 ? std::optional<double>(th_sigma_x2) : std::nullopt, th_draws,
          given(th_seed));
    if (app.got_subcommand(lemma))
      return detail::cmd_lemma(lm_f, lm_omega, lm_sigma, lm_k, lm_draws, given(lm_seed));
    if (app.got_subcommand(analyze))
      return detail::cmd_analyze(an_data, an_schema, an_config, an_out, given(an_seed));
    if (app.got_subcommand(report)) return detail::cmd_report(rp_results, rp_out);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitUsage;
}

}  // namespace errlab
