#ifndef CAUSAL_TABULAR_H_
#define CAUSAL_TABULAR_H_

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace causal {

enum class ColumnType { kContinuous, kCategorical, kBinary };

std::string_view column_type_name(ColumnType type);
std::optional<ColumnType> parse_column_type(std::string_view text);

// One typed column. Continuous and Binary columns hold their numeric values;
// Categorical columns hold level indices into `levels` (sorted
// lexicographically). Binary columns have levels {"0", "1"}.
struct Column {
  std::string name;
  ColumnType type = ColumnType::kContinuous;
  std::vector<double> values;
  std::vector<std::string> levels;

  bool categorical() const { return type != ColumnType::kContinuous; }
  // Cell as text: the level for categorical columns, the number otherwise.
  std::string cell(std::size_t row) const;
};

Column continuous_column(std::string name, std::vector<double> values);
Column binary_column(std::string name, std::vector<double> values);
// Levels are taken from the values and sorted.
Column categorical_column(std::string name,
                          const std::vector<std::string>& values);

// Immutable columnar table; all columns have n_rows() entries.
class DataTable {
 public:
  DataTable() = default;
  // Throws kLengthMismatch or kInvalidArgument (duplicate names).
  explicit DataTable(std::vector<Column> columns);

  std::size_t n_rows() const { return n_rows_; }
  std::size_t n_cols() const { return columns_.size(); }
  const std::vector<Column>& columns() const { return columns_; }
  const Column* find(std::string_view name) const;
  // Throws Error(kMissingColumn).
  const Column& column(std::string_view name) const;
  bool has(std::string_view name) const { return find(name) != nullptr; }

  // Appends or replaces a column.
  DataTable with_column(Column column) const;
  DataTable without_columns(const std::vector<std::string>& names) const;
  DataTable select_rows(const std::vector<std::size_t>& rows) const;

  // FNV-1a digest of names, types and cell values. Used to tie estimates to
  // the data they were computed from.
  std::uint64_t fingerprint() const;
  // Approximate in-memory size in bytes.
  std::size_t byte_size() const;

 private:
  std::vector<Column> columns_;
  std::size_t n_rows_ = 0;
};

using Schema = std::map<std::string, ColumnType>;

struct LoadReport {
  std::size_t rows_read = 0;
  std::size_t dropped = 0;  // rows with at least one empty cell
  // "column: decision" lines, one per column, in column order.
  std::vector<std::string> decisions;
  std::vector<std::string> warnings;
};

struct LoadedTable {
  DataTable table;
  LoadReport report;
};

// Categorical inference caps the number of distinct levels.
inline constexpr std::size_t kMaxInferredLevels = 20;

// RFC 4180 CSV with header row. Without a schema entry, a column is Binary
// when its values are exactly {0, 1}, Categorical when it has at most 20
// distinct integer or non-numeric values, Continuous when numeric otherwise.
// Non-numeric columns with more levels are kept Categorical with a warning.
// Errors: kMalformedCsv (with line), kEmptyTable, kUnknownSchemaColumn,
// kSchemaMismatch.
LoadedTable load_csv(std::string_view text, const Schema& schema = {});
LoadedTable load_csv_file(const std::string& path, const Schema& schema = {});

// CSV text (LF line endings), numbers in shortest round-trip form.
std::string write_csv(const DataTable& table);

// Replaces a categorical column with k-1 indicator columns named
// "column=level"; the lexicographically first level is the reference.
// Errors: kNotCategorical (continuous column or fewer than two levels).
DataTable one_hot(const DataTable& table, std::string_view column);

}  // namespace causal

#endif  // CAUSAL_TABULAR_H_
