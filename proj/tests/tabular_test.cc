#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "causal/error.h"
#include "causal/tabular.h"
#include "test_support.h"

namespace causal {
namespace {

using testing_support::code_of;

TEST(LoadCsv, InfersColumnTypes) {
  auto loaded = load_csv(
      "arm,score,city,dose\n"
      "1,0.5,berlin,3\n"
      "0,1.25,paris,1\n"
      "1,-2,berlin,2\n");
  const auto& t = loaded.table;
  ASSERT_EQ(t.n_rows(), 3u);
  EXPECT_EQ(t.column("arm").type, ColumnType::kBinary);
  EXPECT_EQ(t.column("score").type, ColumnType::kContinuous);
  EXPECT_EQ(t.column("city").type, ColumnType::kCategorical);
  EXPECT_EQ(t.column("dose").type, ColumnType::kCategorical);
  EXPECT_EQ(t.column("city").levels, (std::vector<std::string>{"berlin", "paris"}));
  EXPECT_EQ(t.column("city").values, (std::vector<double>{0, 1, 0}));
  const std::vector<std::string> decisions{
      "arm: binary (values 0/1)", "score: continuous (numeric)",
      "city: categorical with 2 levels", "dose: categorical with 3 integer levels"};
  EXPECT_EQ(loaded.report.decisions, decisions);
  EXPECT_TRUE(loaded.report.warnings.empty());
}

TEST(LoadCsv, ManyIntegerLevelsAreContinuous) {
  std::string text = "x\n";
  for (int i = 0; i < 21; ++i) text += std::to_string(i) + "\n";
  EXPECT_EQ(load_csv(text).table.column("x").type, ColumnType::kContinuous);
}

TEST(LoadCsv, IdLikeColumnWarns) {
  std::string text = "id\n";
  for (int i = 0; i < 25; ++i) text += "u" + std::to_string(i) + "\n";
  auto loaded = load_csv(text);
  EXPECT_EQ(loaded.table.column("id").type, ColumnType::kCategorical);
  ASSERT_EQ(loaded.report.warnings.size(), 1u);
  EXPECT_NE(loaded.report.warnings[0].find("ID-like"), std::string::npos);
}

TEST(LoadCsv, QuotingBomAndCrLf) {
  auto t = load_csv("\xEF\xBB\xBF" "name,note\r\n"
                    "\"a,b\",\"say \"\"hi\"\"\"\r\n"
                    "c,\"two\nlines\"\r\n")
               .table;
  ASSERT_EQ(t.n_rows(), 2u);
  EXPECT_TRUE(t.has("name"));
  EXPECT_EQ(t.column("name").cell(0), "a,b");
  EXPECT_EQ(t.column("note").cell(1), "two\nlines");
  EXPECT_EQ(t.column("note").cell(0), "say \"hi\"");
}

TEST(LoadCsv, DropsRowsWithMissingCells) {
  auto loaded = load_csv("a,b\n1,2\n,3\n4,\n5,6\n");
  EXPECT_EQ(loaded.report.rows_read, 4u);
  EXPECT_EQ(loaded.report.dropped, 2u);
  EXPECT_EQ(loaded.table.n_rows(), 2u);
  ASSERT_EQ(loaded.report.warnings.size(), 1u);
  EXPECT_EQ(loaded.report.warnings[0], "dropped 2 row(s) with missing cells");
}

TEST(LoadCsv, Schema) {
  auto loaded = load_csv("a,b\n1,0\n2,1\n3,1\n",
                         {{"a", ColumnType::kContinuous},
                          {"b", ColumnType::kCategorical}});
  EXPECT_EQ(loaded.table.column("a").type, ColumnType::kContinuous);
  EXPECT_EQ(loaded.table.column("b").type, ColumnType::kCategorical);
  EXPECT_EQ(loaded.report.decisions[0], "a: continuous (schema)");

  EXPECT_EQ(code_of([] { load_csv("a\n1\n", {{"z", ColumnType::kBinary}}); }),
            ErrorCode::kUnknownSchemaColumn);
  EXPECT_EQ(code_of([] { load_csv("a\nx\n", {{"a", ColumnType::kContinuous}}); }),
            ErrorCode::kSchemaMismatch);
  EXPECT_EQ(code_of([] { load_csv("a\n2\n", {{"a", ColumnType::kBinary}}); }),
            ErrorCode::kSchemaMismatch);
}

TEST(LoadCsv, Errors) {
  EXPECT_EQ(code_of([] { load_csv(""); }), ErrorCode::kEmptyTable);
  EXPECT_EQ(code_of([] { load_csv("a,b\n"); }), ErrorCode::kEmptyTable);
  EXPECT_EQ(code_of([] { load_csv("a,b\n,1\n"); }), ErrorCode::kEmptyTable);
  EXPECT_EQ(code_of([] { load_csv("a,a\n1,2\n"); }), ErrorCode::kMalformedCsv);
  EXPECT_EQ(code_of([] { load_csv("a,\n1,2\n"); }), ErrorCode::kMalformedCsv);
  try {
    load_csv("a,b\n1,2\n3\n");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kMalformedCsv);
    EXPECT_EQ(e.subjects(), (std::vector<std::string>{"3"}));
  }
  EXPECT_EQ(code_of([] { load_csv("a\n\"open\n"); }), ErrorCode::kMalformedCsv);
  EXPECT_EQ(code_of([] { load_csv_file("/nonexistent.csv"); }), ErrorCode::kIoError);
}

TEST(WriteCsv, RoundTripsRandomTables) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> normal;
  std::uniform_int_distribution<int> level(0, 3);
  const std::vector<std::string> names{"plain", "with,comma", "q\"uote", "x y"};
  for (int rep = 0; rep < 50; ++rep) {
    const std::size_t n = 2 + rep;
    std::vector<double> cont, bin;
    std::vector<std::string> cat;
    for (std::size_t i = 0; i < n; ++i) {
      cont.push_back(normal(rng) * std::pow(10.0, rep % 7 - 3));
      bin.push_back(i % 2);
      cat.push_back(names[level(rng)]);
    }
    cont[0] = 0.1;  // keep the column non-integral
    DataTable t({continuous_column("c", cont), binary_column("b", bin),
                 categorical_column("k", cat)});
    Schema schema{{"c", ColumnType::kContinuous},
                  {"b", ColumnType::kBinary},
                  {"k", ColumnType::kCategorical}};
    auto back = load_csv(write_csv(t), schema).table;
    EXPECT_EQ(back.column("c").values, cont);
    EXPECT_EQ(back.column("b").values, bin);
    for (std::size_t i = 0; i < n; ++i) {
      EXPECT_EQ(back.column("k").cell(i), cat[i]);
    }
    EXPECT_EQ(back.fingerprint(), t.fingerprint());
  }
}

TEST(OneHot, DropsReferenceLevel) {
  DataTable t({categorical_column("city", {"b", "a", "c", "a"}),
               continuous_column("y", {1, 2, 3, 4})});
  auto encoded = one_hot(t, "city");
  EXPECT_FALSE(encoded.has("city"));
  EXPECT_FALSE(encoded.has("city=a"));
  EXPECT_EQ(encoded.column("city=b").values, (std::vector<double>{1, 0, 0, 0}));
  EXPECT_EQ(encoded.column("city=c").values, (std::vector<double>{0, 0, 1, 0}));
  EXPECT_EQ(code_of([&] { one_hot(t, "y"); }), ErrorCode::kNotCategorical);
  DataTable single({categorical_column("k", {"a", "a"})});
  EXPECT_EQ(code_of([&] { one_hot(single, "k"); }), ErrorCode::kNotCategorical);
}

TEST(DataTable, ConstructionAndEditing) {
  EXPECT_EQ(code_of([] {
              DataTable({continuous_column("a", {1}), continuous_column("b", {1, 2})});
            }),
            ErrorCode::kLengthMismatch);
  EXPECT_EQ(code_of([] {
              DataTable({continuous_column("a", {1}), continuous_column("a", {2})});
            }),
            ErrorCode::kInvalidArgument);
  DataTable t({continuous_column("a", {1, 2, 3}),
               categorical_column("k", {"x", "y", "z"})});
  EXPECT_EQ(code_of([&] { t.column("nope"); }), ErrorCode::kMissingColumn);

  auto replaced = t.with_column(continuous_column("a", {4, 5, 6}));
  EXPECT_EQ(replaced.n_cols(), 2u);
  EXPECT_EQ(replaced.column("a").values[0], 4);
  EXPECT_NE(replaced.fingerprint(), t.fingerprint());
  EXPECT_EQ(t.with_column(continuous_column("b", {0, 0, 0})).n_cols(), 3u);
  EXPECT_EQ(t.without_columns({"a"}).n_cols(), 1u);

  auto rows = t.select_rows({2, 0});
  EXPECT_EQ(rows.column("a").values, (std::vector<double>{3, 1}));
  EXPECT_EQ(rows.column("k").levels.size(), 3u);
  EXPECT_EQ(rows.column("k").cell(0), "z");
  EXPECT_GT(t.byte_size(), 0u);
}

TEST(DataTable, FingerprintDependsOnNamesAndTypes) {
  DataTable a({continuous_column("x", {0, 1})});
  DataTable b({binary_column("x", {0, 1})});
  DataTable c({continuous_column("y", {0, 1})});
  EXPECT_NE(a.fingerprint(), b.fingerprint());
  EXPECT_NE(a.fingerprint(), c.fingerprint());
  EXPECT_EQ(a.fingerprint(), DataTable({continuous_column("x", {0, 1})}).fingerprint());
}

TEST(ColumnType, Names) {
  for (auto t : {ColumnType::kContinuous, ColumnType::kCategorical, ColumnType::kBinary}) {
    EXPECT_EQ(parse_column_type(column_type_name(t)), t);
  }
  EXPECT_FALSE(parse_column_type("ordinal").has_value());
}

}  // namespace
}  // namespace causal
