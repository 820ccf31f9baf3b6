// Schema-driven table loading, categorical encoding, and the CSV writer
// round trip.
#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "errlab/datagen.hpp"
#include "errlab/ingest.hpp"

using namespace errlab;

namespace {

std::string write_temp(const std::string& tag, const std::string& content) {
  const std::string path =
      (std::filesystem::temp_directory_path() / ("errlab_ingest_" + tag + ".csv")).string();
  std::ofstream out(path);
  out << content;
  return path;
}

TableSchema two_day_schema() {
  TableSchema s;
  s.outcome_column = "y";
  s.replicate_columns = {{"x1_d1", "x1_d2"}};
  s.covariate_columns = {{"age", CovariateKind::numeric}};
  return s;
}

}  // namespace

TEST(TableSchema, ValidationCatchesShapeMistakes) {
  TableSchema s = two_day_schema();
  EXPECT_NO_THROW(s.validate());
  EXPECT_EQ(s.p(), 1u);
  EXPECT_EQ(s.k(), 2u);

  TableSchema no_outcome = s;
  no_outcome.outcome_column.clear();
  EXPECT_THROW(no_outcome.validate(), SchemaMismatch);

  TableSchema no_reps = s;
  no_reps.replicate_columns.clear();
  EXPECT_THROW(no_reps.validate(), SchemaMismatch);

  TableSchema ragged = s;
  ragged.replicate_columns.push_back({"x2_d1"});
  EXPECT_THROW(ragged.validate(), SchemaMismatch);

  TableSchema dup = s;
  dup.covariate_columns.push_back({"x1_d1", CovariateKind::numeric});
  EXPECT_THROW(dup.validate(), SchemaMismatch);

  EXPECT_EQ(covariate_kind_from("categorical"), CovariateKind::categorical);
  EXPECT_EQ(covariate_kind_name(CovariateKind::numeric), "numeric");
  EXPECT_THROW(covariate_kind_from("ordinal"), SchemaMismatch);
}

TEST(LoadTable, ValuesMasksAndDrops) {
  // row 2 misses day 2 (kept, masked); row 3 misses the outcome (dropped);
  // row 4 misses the covariate (dropped); row 5 misses day 1 (dropped).
  // An extra column the schema does not mention is ignored.
  const std::string path = write_temp(
      "basic",
      "y,x1_d1,x1_d2,age,ignored\n"
      "10.5,100,110,40,junk\n"
      "11,120,,41,junk\n"
      ",130,135,42,junk\n"
      "12,140,145,,junk\n"
      "13,,150,44,junk\n");
  const LoadReport rep = load_table(path, two_day_schema());
  EXPECT_EQ(rep.rows_read, 5u);
  EXPECT_EQ(rep.rows_dropped, 3u);
  const Dataset& ds = rep.dataset;
  ASSERT_EQ(ds.n, 2u);
  EXPECT_EQ(ds.p, 1u);
  EXPECT_EQ(ds.k, 2u);
  EXPECT_EQ(ds.q, 1u);
  EXPECT_DOUBLE_EQ(ds.y[0], 10.5);
  EXPECT_DOUBLE_EQ(ds.xstar(0, 0, 0), 100.0);
  EXPECT_DOUBLE_EQ(ds.xstar(0, 0, 1), 110.0);
  EXPECT_DOUBLE_EQ(ds.z(0, 0), 40.0);
  EXPECT_TRUE(ds.is_present(0, 1));
  EXPECT_FALSE(ds.is_present(1, 1));
  EXPECT_TRUE(std::isnan(ds.xstar(1, 0, 1)));
  ASSERT_EQ(rep.z_labels.size(), 1u);
  EXPECT_EQ(rep.z_labels[0], "age");
  EXPECT_TRUE(rep.warnings.empty());
  std::filesystem::remove(path);
}

TEST(LoadTable, PartialDayBecomesAbsentWithWarning) {
  TableSchema s;
  s.outcome_column = "y";
  s.replicate_columns = {{"a_d1", "a_d2"}, {"b_d1", "b_d2"}};
  const std::string path = write_temp("mixed",
                                      "y,a_d1,a_d2,b_d1,b_d2\n"
                                      "1,10,20,30,\n"
                                      "2,11,21,31,41\n");
  const LoadReport rep = load_table(path, s);
  ASSERT_EQ(rep.dataset.n, 2u);
  EXPECT_FALSE(rep.dataset.is_present(0, 1));  // a_d2 recorded but b_d2 missing
  EXPECT_TRUE(std::isnan(rep.dataset.xstar(0, 0, 1)));
  EXPECT_TRUE(rep.dataset.is_present(1, 1));
  ASSERT_EQ(rep.warnings.size(), 1u);
  EXPECT_NE(rep.warnings[0].find("some components"), std::string::npos);
  std::filesystem::remove(path);
}

TEST(LoadTable, SchemaAndParseFailures) {
  const std::string path = write_temp("missingcol",
                                      "y,x1_d1,age\n"
                                      "1,2,3\n");
  EXPECT_THROW(load_table(path, two_day_schema()), SchemaMismatch);
  std::filesystem::remove(path);

  const std::string ragged = write_temp("ragged",
                                        "y,x1_d1,x1_d2,age\n"
                                        "1,2,3\n");
  EXPECT_THROW(load_table(ragged, two_day_schema()), ParseError);
  std::filesystem::remove(ragged);

  const std::string junk = write_temp("junk",
                                      "y,x1_d1,x1_d2,age\n"
                                      "1,2,three,4\n");
  EXPECT_THROW(load_table(junk, two_day_schema()), ParseError);
  std::filesystem::remove(junk);

  const std::string empty = write_temp("allmissing",
                                       "y,x1_d1,x1_d2,age\n"
                                       ",1,2,3\n");
  EXPECT_THROW(load_table(empty, two_day_schema()), Degenerate);
  std::filesystem::remove(empty);

  EXPECT_THROW(load_table("/nonexistent/file.csv", two_day_schema()), ParseError);
}

TEST(LoadTable, SemicolonDelimiterAndMissingToken) {
  TableSchema s = two_day_schema();
  s.delimiter = ';';
  s.missing_token = "NA";
  const std::string path = write_temp("semi",
                                      "y;x1_d1;x1_d2;age\n"
                                      "1;10;NA;30\n"
                                      "2;11;21;31\n");
  const LoadReport rep = load_table(path, s);
  ASSERT_EQ(rep.dataset.n, 2u);
  EXPECT_FALSE(rep.dataset.is_present(0, 1));
  EXPECT_DOUBLE_EQ(rep.dataset.xstar(1, 0, 1), 21.0);
  std::filesystem::remove(path);
}

TEST(EncodeCategoricals, ReferenceCellDummies) {
  CategoricalEncoding enc;
  std::vector<std::string> labels, warnings;
  const auto cols = encode_categoricals(
      "site", {"b", "a", "c", "b", "a"}, enc, labels, warnings);
  ASSERT_EQ(enc.levels.size(), 3u);
  EXPECT_EQ(enc.levels[0], "a");  // sorted; first level is the reference
  ASSERT_EQ(cols.size(), 2u);
  ASSERT_EQ(labels.size(), 2u);
  EXPECT_EQ(labels[0], "site=b");
  EXPECT_EQ(labels[1], "site=c");
  const std::vector<double> expect_b = {1.0, 0.0, 0.0, 1.0, 0.0};
  const std::vector<double> expect_c = {0.0, 0.0, 1.0, 0.0, 0.0};
  EXPECT_EQ(cols[0], expect_b);
  EXPECT_EQ(cols[1], expect_c);
  EXPECT_TRUE(warnings.empty());
}

TEST(EncodeCategoricals, ConstantAndOverflowingColumns) {
  CategoricalEncoding enc;
  std::vector<std::string> labels, warnings;
  const auto cols = encode_categoricals("arm", {"x", "x", "x"}, enc, labels, warnings);
  EXPECT_TRUE(cols.empty());
  EXPECT_TRUE(labels.empty());
  ASSERT_EQ(warnings.size(), 1u);
  EXPECT_NE(warnings[0].find("constant"), std::string::npos);

  std::vector<std::string> many;
  for (int i = 0; i < 21; ++i) many.push_back("level" + std::to_string(i));
  EXPECT_THROW(encode_categoricals("id", many, enc, labels, warnings), TooManyLevels);
}

TEST(LoadTable, CategoricalCovariateExpandsInPlace) {
  TableSchema s;
  s.outcome_column = "y";
  s.replicate_columns = {{"x1_d1"}};
  s.covariate_columns = {{"age", CovariateKind::numeric},
                         {"site", CovariateKind::categorical}};
  const std::string path = write_temp("cat",
                                      "y,x1_d1,age,site\n"
                                      "1,10,40,north\n"
                                      "2,11,41,south\n"
                                      "3,12,42,north\n");
  const LoadReport rep = load_table(path, s);
  ASSERT_EQ(rep.dataset.q, 2u);  // age + one dummy (north is the reference)
  ASSERT_EQ(rep.z_labels.size(), 2u);
  EXPECT_EQ(rep.z_labels[0], "age");
  EXPECT_EQ(rep.z_labels[1], "site=south");
  EXPECT_DOUBLE_EQ(rep.dataset.z(0, 1), 0.0);
  EXPECT_DOUBLE_EQ(rep.dataset.z(1, 1), 1.0);
  ASSERT_EQ(rep.encodings.size(), 1u);
  EXPECT_EQ(rep.encodings[0].name, "site");
  std::filesystem::remove(path);
}

TEST(WriteDatasetCsv, RoundTripsThroughLoadTable) {
  ScenarioSpec spec;
  spec.id = "rt";
  spec.n = 40;
  spec.k = 2;
  spec.p = 2;
  spec.q = 1;
  spec.alpha = {1.0, 0.5, -0.5, 2.0};
  spec.beta = Matrix(2, 2);
  spec.beta(0, 0) = 10.0;
  spec.beta(0, 1) = 1.0;
  spec.beta(1, 0) = -5.0;
  spec.beta(1, 1) = 0.25;
  spec.Sigma_u = CovarianceMatrix::diagonal({1.0, 2.0});
  spec.Sigma_eps = CovarianceMatrix::diagonal({0.5, 0.5});
  spec.Sigma_Z = CovarianceMatrix::diagonal({1.5});
  RngState rng(91, 0);
  Dataset ds = generate(spec, rng);
  ds = inject_missing_second_day(std::move(ds), 0.3, rng);

  const std::string path =
      (std::filesystem::temp_directory_path() / "errlab_ingest_rt.csv").string();
  write_dataset_csv(ds, path);
  const LoadReport rep = load_table(path, schema_for_dataset(ds));
  const Dataset& back = rep.dataset;
  ASSERT_EQ(back.n, ds.n);
  ASSERT_EQ(back.p, ds.p);
  ASSERT_EQ(back.k, ds.k);
  ASSERT_EQ(back.q, ds.q);
  EXPECT_EQ(rep.rows_dropped, 0u);
  for (std::size_t i = 0; i < ds.n; ++i) {
    EXPECT_DOUBLE_EQ(back.y[i], ds.y[i]);  // %.17g is exact for doubles
    EXPECT_DOUBLE_EQ(back.z(i, 0), ds.z(i, 0));
    for (std::size_t j = 0; j < ds.k; ++j) {
      ASSERT_EQ(back.is_present(i, j), ds.is_present(i, j));
      if (!ds.is_present(i, j)) continue;
      for (std::size_t l = 0; l < ds.p; ++l)
        EXPECT_DOUBLE_EQ(back.xstar(i, l, j), ds.xstar(i, l, j));
    }
  }
  std::filesystem::remove(path);
}

TEST(WriteDatasetCsv, TruthColumnsAreOptionalAndIgnoredByTheLoader) {
  ScenarioSpec spec;
  spec.id = "truth";
  spec.n = 10;
  spec.k = 1;
  spec.p = 1;
  spec.alpha = {0.0, 1.0};
  spec.beta = Matrix(1, 1);
  spec.beta(0, 0) = 5.0;
  spec.Sigma_u = CovarianceMatrix::diagonal({1.0});
  spec.Sigma_eps = CovarianceMatrix::diagonal({0.5});
  RngState rng(92, 0);
  const Dataset ds = generate(spec, rng);
  ASSERT_TRUE(ds.has_truth());

  const std::string path =
      (std::filesystem::temp_directory_path() / "errlab_ingest_truth.csv").string();
  write_dataset_csv(ds, path, true);
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  EXPECT_NE(header.find("x1_true"), std::string::npos);
  in.close();

  const LoadReport rep = load_table(path, schema_for_dataset(ds));
  EXPECT_EQ(rep.dataset.n, ds.n);
  EXPECT_FALSE(rep.dataset.has_truth());  // truth never rides along on ingest

  Dataset no_truth = Dataset::sized(3, 1, 1, 0);
  EXPECT_THROW(write_dataset_csv(no_truth, path, true), DomainError);
  std::filesystem::remove(path);
}
