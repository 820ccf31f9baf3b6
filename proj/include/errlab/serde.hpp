// JSON (de)serialization for configuration and fitted-model types, plus the
// scenario shorthand used by experiment configs ("sim1" etc. with field
// overrides).
#pragma once

#include <cstddef>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "errlab/datagen.hpp"
#include "errlab/errors.hpp"
#include "errlab/experiments.hpp"
#include "errlab/ingest.hpp"
#include "errlab/linalg.hpp"
#include "errlab/linreg.hpp"
#include "errlab/neuralnet.hpp"
#include "errlab/prepare.hpp"

namespace errlab {

using json = nlohmann::json;

inline json json_from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ParseError(path + ": " + e.what());
  }
}

inline void json_to_file(const json& j, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path + " for writing");
  out << j.dump(2) << '\n';
}

// ---- matrices ----

inline json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (std::size_t r = 0; r < m.rows; ++r) {
    json row = json::array();
    for (std::size_t c = 0; c < m.cols; ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Matrix matrix_from_json(const json& j, const std::string& what) {
  if (!j.is_array() || j.empty() || !j.front().is_array())
    throw SchemaMismatch(what + ": expected an array of rows");
  const std::size_t rows = j.size(), cols = j.front().size();
  Matrix m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    if (j[r].size() != cols) throw SchemaMismatch(what + ": ragged rows");
    for (std::size_t c = 0; c < cols; ++c) m(r, c) = j[r][c].get<double>();
  }
  return m;
}

inline json covariance_to_json(const CovarianceMatrix& m) {
  return matrix_to_json(m.full());
}

inline CovarianceMatrix covariance_from_json(const json& j, const std::string& what) {
  const Matrix full = matrix_from_json(j, what);
  if (full.rows != full.cols) throw SchemaMismatch(what + ": must be square");
  return CovarianceMatrix::from_full(full);
}

// ---- scenarios ----

inline json scenario_to_json(const ScenarioSpec& s) {
  json j;
  j["id"] = s.id;
  j["n"] = s.n;
  j["k"] = s.k;
  j["p"] = s.p;
  j["q"] = s.q;
  j["sigma_y2"] = s.sigma_Y2;
  j["alpha"] = s.alpha;
  j["beta"] = matrix_to_json(s.beta);
  j["sigma_u"] = covariance_to_json(s.Sigma_u);
  j["sigma_eps"] = covariance_to_json(s.Sigma_eps);
  if (s.lambda) j["lambda"] = *s.lambda;
  if (s.Sigma_Z) j["sigma_z"] = covariance_to_json(*s.Sigma_Z);
  j["outcome"] = outcome_form_name(s.outcome_form);
  j["link"] = s.link;
  if (s.seed != 0 || s.seed_stream != 0)
    j["seed"] = json{{"value", s.seed}, {"stream", s.seed_stream}};
  return j;
}

inline PaperOverrides paper_overrides_from_json(const json& j) {
  PaperOverrides ov;
  if (j.contains("k")) ov.k = j["k"].get<std::size_t>();
  if (j.contains("n")) ov.n = j["n"].get<std::size_t>();
  if (j.contains("budget")) ov.budget = j["budget"].get<std::size_t>();
  if (j.contains("scenario")) ov.scenario = j["scenario"].get<int>();
  if (j.contains("seed")) ov.seed = j["seed"].get<std::uint64_t>();
  return ov;
}

// Accepts three spellings: a bare string naming a canned design ("sim1"),
// an object with a "paper" tag plus overrides, or a full inline spec.
inline ScenarioSpec scenario_from_json(const json& j) {
  if (j.is_string()) return make_paper_spec(j.get<std::string>());
  if (!j.is_object()) throw SchemaMismatch("scenario: expected string or object");
  if (j.contains("paper"))
    return make_paper_spec(j["paper"].get<std::string>(), paper_overrides_from_json(j));

  ScenarioSpec s;
  try {
    s.id = j.value("id", std::string("custom"));
    s.n = j.at("n").get<std::size_t>();
    s.k = j.at("k").get<std::size_t>();
    s.p = j.at("p").get<std::size_t>();
    s.q = j.value("q", std::size_t{0});
    s.sigma_Y2 = j.value("sigma_y2", 1.0);
    s.alpha = j.at("alpha").get<std::vector<double>>();
    s.beta = matrix_from_json(j.at("beta"), "scenario.beta");
    s.Sigma_u = covariance_from_json(j.at("sigma_u"), "scenario.sigma_u");
    s.Sigma_eps = covariance_from_json(j.at("sigma_eps"), "scenario.sigma_eps");
    if (j.contains("lambda") && !j["lambda"].is_null())
      s.lambda = j["lambda"].get<double>();
    if (j.contains("sigma_z"))
      s.Sigma_Z = covariance_from_json(j["sigma_z"], "scenario.sigma_z");
    s.outcome_form = outcome_form_from(j.value("outcome", std::string("linear")));
    s.link = j.value("link", std::string("identity"));
    if (j.contains("seed")) {
      s.seed = j["seed"].value("value", std::uint64_t{0});
      s.seed_stream = j["seed"].value("stream", std::uint64_t{0});
    }
  } catch (const json::exception& e) {
    throw SchemaMismatch(std::string("scenario: ") + e.what());
  }
  s.validate();
  return s;
}

// ---- pipelines ----

inline json pipeline_to_json(const Pipeline& p) {
  json j;
  j["kind"] = pipeline_kind_name(p.kind);
  if (p.kind == PipelineKind::transformed_average) {
    if (p.fit_lambdas)
      j["lambdas"] = "fit";
    else
      j["lambdas"] = p.lambdas;
  }
  return j;
}

inline Pipeline pipeline_from_json(const json& j) {
  Pipeline p;
  if (j.is_string()) {
    p.kind = pipeline_kind_from(j.get<std::string>());
    return p;
  }
  if (!j.is_object()) throw SchemaMismatch("preparation: expected string or object");
  p.kind = pipeline_kind_from(j.at("kind").get<std::string>());
  if (j.contains("lambdas")) {
    if (j["lambdas"].is_string()) {
      if (j["lambdas"].get<std::string>() != "fit")
        throw SchemaMismatch("preparation.lambdas: expected \"fit\" or an array");
      p.fit_lambdas = true;
    } else {
      p.fit_lambdas = false;
      p.lambdas = j["lambdas"].get<std::vector<double>>();
    }
  }
  return p;
}

// ---- models ----

inline json model_to_json(const ModelDescriptor& m) {
  json j;
  j["kind"] = m.kind == ModelKind::ols ? "ols" : "mlp";
  j["features"] = feature_set_name(m.features);
  if (!m.name.empty()) j["name"] = m.name;
  if (m.kind == ModelKind::mlp) {
    j["hidden"] = m.hidden;
    j["activation"] = activation_name(m.hidden_activation);
    j["learning_rate"] = m.train_config.learning_rate;
    j["batch_size"] = m.train_config.batch_size;
    j["max_epochs"] = m.train_config.max_epochs;
    j["patience"] = m.train_config.patience;
    j["validation_fraction"] = m.train_config.validation_fraction;
  }
  return j;
}

inline ModelDescriptor model_from_json(const json& j) {
  ModelDescriptor m;
  if (j.is_string()) {
    const std::string s = j.get<std::string>();
    if (s == "ols")
      m.kind = ModelKind::ols;
    else if (s == "mlp")
      m.kind = ModelKind::mlp;
    else
      throw SchemaMismatch("model: expected \"ols\" or \"mlp\", got " + s);
    return m;
  }
  if (!j.is_object()) throw SchemaMismatch("model: expected string or object");
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "ols")
    m.kind = ModelKind::ols;
  else if (kind == "mlp")
    m.kind = ModelKind::mlp;
  else
    throw SchemaMismatch("model.kind: expected \"ols\" or \"mlp\", got " + kind);
  if (j.contains("features")) m.features = feature_set_from(j["features"].get<std::string>());
  m.name = j.value("name", std::string());
  if (j.contains("hidden")) m.hidden = j["hidden"].get<std::vector<std::size_t>>();
  if (j.contains("activation"))
    m.hidden_activation = activation_from(j["activation"].get<std::string>());
  m.train_config.learning_rate = j.value("learning_rate", m.train_config.learning_rate);
  m.train_config.batch_size = j.value("batch_size", m.train_config.batch_size);
  m.train_config.max_epochs = j.value("max_epochs", m.train_config.max_epochs);
  m.train_config.patience = j.value("patience", m.train_config.patience);
  m.train_config.validation_fraction =
      j.value("validation_fraction", m.train_config.validation_fraction);
  m.train_config.validate();
  return m;
}

// ---- experiment configs ----

inline json experiment_config_to_json(const ExperimentConfig& c) {
  json j;
  j["scenarios"] = json::array();
  for (const auto& s : c.scenarios) j["scenarios"].push_back(scenario_to_json(s));
  j["preparations"] = json::array();
  for (const auto& p : c.preparations) j["preparations"].push_back(pipeline_to_json(p));
  j["models"] = json::array();
  for (const auto& m : c.models) j["models"].push_back(model_to_json(m));
  j["replications"] = c.replications;
  if (c.test_n) j["test_n"] = *c.test_n;
  j["seed"] = c.seed;
  if (!c.output.empty()) j["output"] = c.output;
  return j;
}

inline ExperimentConfig experiment_config_from_json(const json& j) {
  ExperimentConfig c;
  try {
    for (const auto& s : j.at("scenarios")) c.scenarios.push_back(scenario_from_json(s));
    for (const auto& p : j.at("preparations")) c.preparations.push_back(pipeline_from_json(p));
    for (const auto& m : j.at("models")) c.models.push_back(model_from_json(m));
    c.replications = j.value("replications", std::size_t{20});
    if (j.contains("test_n")) c.test_n = j["test_n"].get<std::size_t>();
    c.seed = j.value("seed", std::uint64_t{0});
    c.output = j.value("output", std::string());
  } catch (const json::exception& e) {
    throw SchemaMismatch(std::string("experiment config: ") + e.what());
  }
  c.validate();
  return c;
}

// ---- table schemas ----

inline json table_schema_to_json(const TableSchema& s) {
  json j;
  j["outcome_column"] = s.outcome_column;
  j["replicate_columns"] = s.replicate_columns;
  j["covariate_columns"] = json::array();
  for (const auto& c : s.covariate_columns)
    j["covariate_columns"].push_back(
        json{{"name", c.name}, {"kind", covariate_kind_name(c.kind)}});
  j["missing_token"] = s.missing_token;
  j["delimiter"] = std::string(1, s.delimiter);
  return j;
}

inline TableSchema table_schema_from_json(const json& j) {
  TableSchema s;
  try {
    s.outcome_column = j.at("outcome_column").get<std::string>();
    s.replicate_columns = j.at("replicate_columns").get<std::vector<std::vector<std::string>>>();
    if (j.contains("covariate_columns"))
      for (const auto& c : j["covariate_columns"]) {
        CovariateColumn col;
        col.name = c.at("name").get<std::string>();
        col.kind = covariate_kind_from(c.value("kind", std::string("numeric")));
        s.covariate_columns.push_back(std::move(col));
      }
    s.missing_token = j.value("missing_token", std::string());
    const std::string delim = j.value("delimiter", std::string(","));
    if (delim.size() != 1) throw SchemaMismatch("schema.delimiter: must be one character");
    s.delimiter = delim[0];
  } catch (const json::exception& e) {
    throw SchemaMismatch(std::string("table schema: ") + e.what());
  }
  s.validate();
  return s;
}

// ---- fitted models ----

inline json linear_model_to_json(const LinearModel& m) {
  json j;
  j["coef"] = m.coef;
  json cols = json::array();
  for (const auto& c : m.columns) cols.push_back(c.label);
  j["columns"] = cols;
  return j;
}

inline json mlp_to_json(const MLP& net) {
  json j;
  j["layers"] = net.arch.layers;
  json acts = json::array();
  for (auto a : net.arch.activations) acts.push_back(activation_name(a));
  j["activations"] = acts;
  json ws = json::array();
  for (const auto& w : net.weights) ws.push_back(matrix_to_json(w));
  j["weights"] = ws;
  j["biases"] = net.biases;
  return j;
}

inline MLP mlp_from_json(const json& j) {
  MLP net;
  try {
    net.arch.layers = j.at("layers").get<std::vector<std::size_t>>();
    for (const auto& a : j.at("activations"))
      net.arch.activations.push_back(activation_from(a.get<std::string>()));
    for (std::size_t i = 0; i < j.at("weights").size(); ++i)
      net.weights.push_back(matrix_from_json(j["weights"][i], "mlp.weights"));
    net.biases = j.at("biases").get<std::vector<std::vector<double>>>();
  } catch (const json::exception& e) {
    throw SchemaMismatch(std::string("mlp: ") + e.what());
  }
  net.arch.validate();
  return net;
}

}  // namespace errlab
