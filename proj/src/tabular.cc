#include "causal/tabular.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "causal/error.h"

namespace causal {

std::string_view column_type_name(ColumnType type) {
  switch (type) {
    case ColumnType::kContinuous: return "continuous";
    case ColumnType::kCategorical: return "categorical";
    case ColumnType::kBinary: return "binary";
  }
  return "continuous";
}

std::optional<ColumnType> parse_column_type(std::string_view text) {
  for (ColumnType t : {ColumnType::kContinuous, ColumnType::kCategorical,
                       ColumnType::kBinary}) {
    if (column_type_name(t) == text) return t;
  }
  return std::nullopt;
}

std::string Column::cell(std::size_t row) const {
  if (type == ColumnType::kCategorical) {
    return levels[static_cast<std::size_t>(values[row])];
  }
  return fmt::format("{}", values[row]);
}

Column continuous_column(std::string name, std::vector<double> values) {
  return Column{std::move(name), ColumnType::kContinuous, std::move(values), {}};
}

Column binary_column(std::string name, std::vector<double> values) {
  return Column{std::move(name), ColumnType::kBinary, std::move(values),
                {"0", "1"}};
}

Column categorical_column(std::string name,
                          const std::vector<std::string>& values) {
  std::set<std::string> distinct(values.begin(), values.end());
  Column col{std::move(name), ColumnType::kCategorical, {},
             {distinct.begin(), distinct.end()}};
  col.values.reserve(values.size());
  for (const auto& v : values) {
    auto it = std::lower_bound(col.levels.begin(), col.levels.end(), v);
    col.values.push_back(static_cast<double>(it - col.levels.begin()));
  }
  return col;
}

DataTable::DataTable(std::vector<Column> columns) : columns_(std::move(columns)) {
  std::set<std::string> names;
  for (const auto& c : columns_) {
    if (!names.insert(c.name).second) {
      throw Error(ErrorCode::kInvalidArgument,
                  fmt::format("duplicate column '{}'", c.name), {c.name});
    }
  }
  if (!columns_.empty()) n_rows_ = columns_.front().values.size();
  for (const auto& c : columns_) {
    if (c.values.size() != n_rows_) {
      throw Error(ErrorCode::kLengthMismatch,
                  fmt::format("column '{}' has {} rows, expected {}", c.name,
                              c.values.size(), n_rows_),
                  {c.name});
    }
  }
}

const Column* DataTable::find(std::string_view name) const {
  for (const auto& c : columns_) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

const Column& DataTable::column(std::string_view name) const {
  const Column* c = find(name);
  if (!c) {
    throw Error(ErrorCode::kMissingColumn,
                fmt::format("data has no column '{}'", name),
                {std::string(name)});
  }
  return *c;
}

DataTable DataTable::with_column(Column column) const {
  std::vector<Column> cols = columns_;
  auto it = std::find_if(cols.begin(), cols.end(),
                         [&](const Column& c) { return c.name == column.name; });
  if (it != cols.end()) {
    *it = std::move(column);
  } else {
    cols.push_back(std::move(column));
  }
  return DataTable(std::move(cols));
}

DataTable DataTable::without_columns(const std::vector<std::string>& names) const {
  std::vector<Column> cols;
  for (const auto& c : columns_) {
    if (std::find(names.begin(), names.end(), c.name) == names.end()) {
      cols.push_back(c);
    }
  }
  return DataTable(std::move(cols));
}

DataTable DataTable::select_rows(const std::vector<std::size_t>& rows) const {
  std::vector<Column> cols;
  for (const auto& c : columns_) {
    Column out{c.name, c.type, {}, c.levels};
    out.values.reserve(rows.size());
    for (std::size_t r : rows) out.values.push_back(c.values.at(r));
    cols.push_back(std::move(out));
  }
  return DataTable(std::move(cols));
}

std::uint64_t DataTable::fingerprint() const {
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&](const void* data, std::size_t len) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
      h ^= p[i];
      h *= 1099511628211ull;
    }
  };
  for (const auto& c : columns_) {
    mix(c.name.data(), c.name.size());
    auto type = static_cast<int>(c.type);
    mix(&type, sizeof(type));
    mix(c.values.data(), c.values.size() * sizeof(double));
    for (const auto& l : c.levels) mix(l.data(), l.size());
  }
  return h;
}

std::size_t DataTable::byte_size() const {
  std::size_t bytes = sizeof(*this);
  for (const auto& c : columns_) {
    bytes += sizeof(Column) + c.name.size() + c.values.size() * sizeof(double);
    for (const auto& l : c.levels) bytes += sizeof(std::string) + l.size();
  }
  return bytes;
}

namespace {

struct Record {
  std::vector<std::string> fields;
  std::size_t line = 0;
};

[[noreturn]] void malformed(std::size_t line, const std::string& what) {
  throw Error(ErrorCode::kMalformedCsv,
              fmt::format("malformed CSV at line {}: {}", line, what),
              {std::to_string(line)});
}

std::vector<Record> parse_records(std::string_view text) {
  if (text.size() >= 3 && std::memcmp(text.data(), "\xEF\xBB\xBF", 3) == 0) {
    text.remove_prefix(3);
  }
  std::vector<Record> records;
  std::size_t i = 0;
  std::size_t line = 1;
  while (i < text.size()) {
    Record rec;
    rec.line = line;
    std::string field;
    bool end_of_record = false;
    while (!end_of_record) {
      field.clear();
      if (i < text.size() && text[i] == '"') {
        ++i;
        for (;;) {
          if (i >= text.size()) malformed(rec.line, "unterminated quoted field");
          char c = text[i];
          if (c == '"') {
            if (i + 1 < text.size() && text[i + 1] == '"') {
              field += '"';
              i += 2;
              continue;
            }
            ++i;
            break;
          }
          if (c == '\n') ++line;
          field += c;
          ++i;
        }
        if (i < text.size() && text[i] != ',' && text[i] != '\n' &&
            text[i] != '\r') {
          malformed(line, "unexpected character after closing quote");
        }
      } else {
        while (i < text.size() && text[i] != ',' && text[i] != '\n' &&
               text[i] != '\r') {
          if (text[i] == '"') malformed(line, "quote inside unquoted field");
          field += text[i];
          ++i;
        }
      }
      rec.fields.push_back(field);
      if (i >= text.size()) {
        end_of_record = true;
      } else if (text[i] == ',') {
        ++i;
      } else {
        if (text[i] == '\r') ++i;
        if (i < text.size() && text[i] == '\n') ++i;
        ++line;
        end_of_record = true;
      }
    }
    const bool blank = rec.fields.size() == 1 && rec.fields[0].empty();
    if (!blank) records.push_back(std::move(rec));
  }
  return records;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

std::optional<double> parse_number(std::string_view s) {
  s = trim(s);
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  double v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) {
    return std::nullopt;
  }
  return v;
}

bool is_integer(double v) { return std::floor(v) == v && std::fabs(v) < 1e15; }

Column build_column(const std::string& name,
                    const std::vector<std::string>& cells,
                    std::optional<ColumnType> declared, LoadReport& report) {
  std::vector<std::optional<double>> numbers;
  numbers.reserve(cells.size());
  bool numeric = true;
  for (const auto& c : cells) {
    numbers.push_back(parse_number(c));
    numeric = numeric && numbers.back().has_value();
  }
  std::vector<double> values;
  if (numeric) {
    for (const auto& v : numbers) values.push_back(*v);
  }
  std::set<double> distinct(values.begin(), values.end());
  const bool zero_one = numeric && !distinct.empty() &&
                        std::all_of(distinct.begin(), distinct.end(),
                                    [](double v) { return v == 0 || v == 1; });

  auto as_levels = [&] {
    std::vector<std::string> out;
    out.reserve(cells.size());
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (numeric && is_integer(values[i])) {
        out.push_back(fmt::format("{}", static_cast<long long>(values[i])));
      } else {
        out.emplace_back(trim(cells[i]));
      }
    }
    return out;
  };

  if (declared) {
    switch (*declared) {
      case ColumnType::kContinuous:
        if (!numeric) {
          throw Error(ErrorCode::kSchemaMismatch,
                      fmt::format("column '{}' declared continuous but has "
                                  "non-numeric values",
                                  name),
                      {name});
        }
        report.decisions.push_back(name + ": continuous (schema)");
        return continuous_column(name, std::move(values));
      case ColumnType::kBinary:
        if (!zero_one) {
          throw Error(ErrorCode::kSchemaMismatch,
                      fmt::format("column '{}' declared binary but has values "
                                  "other than 0/1",
                                  name),
                      {name});
        }
        report.decisions.push_back(name + ": binary (schema)");
        return binary_column(name, std::move(values));
      case ColumnType::kCategorical: {
        Column col = categorical_column(name, as_levels());
        report.decisions.push_back(
            fmt::format("{}: categorical with {} levels (schema)", name,
                        col.levels.size()));
        return col;
      }
    }
  }

  if (zero_one && distinct.size() == 2) {
    report.decisions.push_back(name + ": binary (values 0/1)");
    return binary_column(name, std::move(values));
  }
  if (numeric) {
    const bool integral = std::all_of(values.begin(), values.end(), is_integer);
    if (integral && distinct.size() <= kMaxInferredLevels) {
      Column col = categorical_column(name, as_levels());
      report.decisions.push_back(fmt::format(
          "{}: categorical with {} integer levels", name, col.levels.size()));
      return col;
    }
    report.decisions.push_back(name + ": continuous (numeric)");
    return continuous_column(name, std::move(values));
  }
  Column col = categorical_column(name, as_levels());
  report.decisions.push_back(
      fmt::format("{}: categorical with {} levels", name, col.levels.size()));
  if (col.levels.size() > kMaxInferredLevels) {
    report.warnings.push_back(fmt::format(
        "column '{}' has {} distinct non-numeric values (ID-like?); declare its "
        "type in a schema to silence this",
        name, col.levels.size()));
  }
  return col;
}

}  // namespace

LoadedTable load_csv(std::string_view text, const Schema& schema) {
  std::vector<Record> records = parse_records(text);
  if (records.empty()) throw Error(ErrorCode::kEmptyTable, "CSV has no header");
  const Record& header = records.front();
  std::set<std::string> names;
  for (const auto& raw : header.fields) {
    std::string name(trim(raw));
    if (name.empty()) malformed(header.line, "empty column name in header");
    if (!names.insert(name).second) {
      malformed(header.line, fmt::format("duplicate column '{}'", name));
    }
  }
  for (const auto& [name, type] : schema) {
    if (!names.count(name)) {
      throw Error(ErrorCode::kUnknownSchemaColumn,
                  fmt::format("schema names column '{}' absent from the CSV",
                              name),
                  {name});
    }
  }

  const std::size_t width = header.fields.size();
  LoadedTable out;
  std::vector<std::vector<std::string>> cells(width);
  for (std::size_t r = 1; r < records.size(); ++r) {
    const Record& rec = records[r];
    if (rec.fields.size() != width) {
      malformed(rec.line, fmt::format("expected {} fields, found {}", width,
                                      rec.fields.size()));
    }
    ++out.report.rows_read;
    bool missing = std::any_of(rec.fields.begin(), rec.fields.end(),
                               [](const std::string& f) {
                                 return trim(f).empty();
                               });
    if (missing) {
      ++out.report.dropped;
      continue;
    }
    for (std::size_t c = 0; c < width; ++c) cells[c].push_back(rec.fields[c]);
  }
  if (cells.empty() || cells.front().empty()) {
    throw Error(ErrorCode::kEmptyTable,
                fmt::format("no complete data rows ({} read, {} dropped)",
                            out.report.rows_read, out.report.dropped));
  }
  if (out.report.dropped > 0) {
    out.report.warnings.push_back(fmt::format(
        "dropped {} row(s) with missing cells", out.report.dropped));
  }

  std::vector<Column> columns;
  for (std::size_t c = 0; c < width; ++c) {
    std::string name(trim(header.fields[c]));
    auto it = schema.find(name);
    std::optional<ColumnType> declared;
    if (it != schema.end()) declared = it->second;
    columns.push_back(build_column(name, cells[c], declared, out.report));
  }
  out.table = DataTable(std::move(columns));
  return out;
}

LoadedTable load_csv_file(const std::string& path, const Schema& schema) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, fmt::format("cannot read '{}'", path));
  std::ostringstream buf;
  buf << in.rdbuf();
  return load_csv(buf.str(), schema);
}

namespace {

std::string csv_escape(const std::string& s) {
  const bool needs = s.find_first_of(",\"\r\n") != std::string::npos ||
                     (!s.empty() && (s.front() == ' ' || s.back() == ' '));
  if (!needs) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

}  // namespace

std::string write_csv(const DataTable& table) {
  std::string out;
  for (std::size_t c = 0; c < table.n_cols(); ++c) {
    if (c) out += ',';
    out += csv_escape(table.columns()[c].name);
  }
  out += '\n';
  for (std::size_t r = 0; r < table.n_rows(); ++r) {
    for (std::size_t c = 0; c < table.n_cols(); ++c) {
      if (c) out += ',';
      out += csv_escape(table.columns()[c].cell(r));
    }
    out += '\n';
  }
  return out;
}

DataTable one_hot(const DataTable& table, std::string_view column) {
  const Column& src = table.column(column);
  if (!src.categorical() || src.levels.size() < 2) {
    throw Error(ErrorCode::kNotCategorical,
                fmt::format("column '{}' is not categorical with >= 2 levels",
                            column),
                {std::string(column)});
  }
  std::vector<Column> indicators;
  if (src.type == ColumnType::kBinary) {
    indicators.push_back(binary_column(src.name + "=1", src.values));
  } else {
    for (std::size_t level = 1; level < src.levels.size(); ++level) {
      std::vector<double> v(src.values.size());
      for (std::size_t r = 0; r < v.size(); ++r) {
        v[r] = src.values[r] == static_cast<double>(level) ? 1.0 : 0.0;
      }
      indicators.push_back(
          binary_column(src.name + "=" + src.levels[level], std::move(v)));
    }
  }
  std::vector<Column> cols;
  for (const auto& c : table.columns()) {
    if (c.name == src.name) {
      for (auto& ind : indicators) cols.push_back(std::move(ind));
    } else {
      cols.push_back(c);
    }
  }
  return DataTable(std::move(cols));
}

}  // namespace causal
