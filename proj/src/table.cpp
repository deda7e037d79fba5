#include "balloc/table.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "balloc/error.hpp"

namespace balloc {

std::size_t Table::column(std::string_view name) const {
  auto it = std::find(columns.begin(), columns.end(), name);
  if (it == columns.end()) throw ValidationError("table has no column '" + std::string(name) + "'");
  return static_cast<std::size_t>(it - columns.begin());
}

bool Table::has_column(std::string_view name) const {
  return std::find(columns.begin(), columns.end(), name) != columns.end();
}

double Table::number(std::size_t row, std::size_t col) const {
  const Cell& c = rows.at(row).at(col);
  if (auto* i = std::get_if<std::int64_t>(&c)) return static_cast<double>(*i);
  if (auto* d = std::get_if<double>(&c)) return *d;
  return std::nan("");
}

std::string Table::text(std::size_t row, std::size_t col) const { return format_cell(rows.at(row).at(col)); }

void Table::add_row(std::vector<Cell> row) {
  if (row.size() != columns.size()) throw ValidationError("table row has the wrong number of cells");
  rows.push_back(std::move(row));
}

std::string format_cell(const Cell& cell) {
  if (std::holds_alternative<std::monostate>(cell)) return "";
  if (auto* i = std::get_if<std::int64_t>(&cell)) return std::to_string(*i);
  if (auto* d = std::get_if<double>(&cell)) {
    if (std::isnan(*d)) return "nan";
    if (std::isinf(*d)) return *d > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.9g", *d);
    return buf;
  }
  return std::get<std::string>(cell);
}

std::string csv_escape(const std::string& field) {
  bool quote = field.find_first_of(",\"\r\n") != std::string::npos ||
               (!field.empty() && (field.front() == ' ' || field.back() == ' '));
  if (!quote) return field;
  std::string out = "\"";
  for (char ch : field) {
    if (ch == '"') out.push_back('"');
    out.push_back(ch);
  }
  out.push_back('"');
  return out;
}

void write_csv(const Table& table, std::ostream& out) {
  for (std::size_t i = 0; i < table.columns.size(); ++i) {
    if (i) out << ',';
    out << csv_escape(table.columns[i]);
  }
  out << '\n';
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out << ',';
      if (auto* s = std::get_if<std::string>(&row[i])) {
        out << csv_escape(*s);
      } else {
        out << format_cell(row[i]);
      }
    }
    out << '\n';
  }
}

void write_csv(const Table& table, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write '" + path + "'");
  write_csv(table, out);
  if (!out) throw ValidationError("error writing '" + path + "'");
}

namespace {

// Splits one CSV record, honouring quotes that may span lines.
bool read_record(std::istream& in, std::vector<std::string>& fields, std::vector<bool>& quoted) {
  fields.clear();
  quoted.clear();
  std::string field;
  bool in_quotes = false, was_quoted = false, any = false;
  int ch;
  while ((ch = in.get()) != EOF) {
    any = true;
    char c = static_cast<char>(ch);
    if (in_quotes) {
      if (c == '"') {
        if (in.peek() == '"') {
          field.push_back('"');
          in.get();
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(c);
      }
      continue;
    }
    if (c == '"') {
      in_quotes = true;
      was_quoted = true;
    } else if (c == ',') {
      fields.push_back(field);
      quoted.push_back(was_quoted);
      field.clear();
      was_quoted = false;
    } else if (c == '\n') {
      break;
    } else if (c != '\r') {
      field.push_back(c);
    }
  }
  if (!any) return false;
  if (in_quotes) throw ValidationError("csv: unterminated quoted field");
  fields.push_back(field);
  quoted.push_back(was_quoted);
  return true;
}

Cell parse_cell(const std::string& s, bool quoted) {
  if (quoted) return s;
  if (s.empty()) return std::monostate{};
  std::int64_t i = 0;
  auto ri = std::from_chars(s.data(), s.data() + s.size(), i);
  if (ri.ec == std::errc() && ri.ptr == s.data() + s.size()) return i;
  double d = 0.0;
  auto rd = std::from_chars(s.data(), s.data() + s.size(), d);
  if (rd.ec == std::errc() && rd.ptr == s.data() + s.size()) return d;
  return s;
}

}  // namespace

Table read_csv(std::istream& in) {
  Table t;
  std::vector<std::string> fields;
  std::vector<bool> quoted;
  if (!read_record(in, fields, quoted)) return t;
  t.columns = fields;
  while (read_record(in, fields, quoted)) {
    if (t.columns.size() != 1 && fields.size() == 1 && fields[0].empty() && !quoted[0]) continue;
    if (fields.size() != t.columns.size()) throw ValidationError("csv: row has the wrong number of fields");
    std::vector<Cell> row;
    for (std::size_t i = 0; i < fields.size(); ++i) row.push_back(parse_cell(fields[i], quoted[i]));
    t.rows.push_back(std::move(row));
  }
  return t;
}

Table read_csv_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open '" + path + "'");
  return read_csv(in);
}

bool tables_equal(const Table& a, const Table& b, double rel_tol) {
  if (a.columns != b.columns || a.rows.size() != b.rows.size()) return false;
  for (std::size_t r = 0; r < a.rows.size(); ++r) {
    for (std::size_t c = 0; c < a.columns.size(); ++c) {
      const Cell& x = a.rows[r][c];
      const Cell& y = b.rows[r][c];
      bool xn = std::holds_alternative<std::int64_t>(x) || std::holds_alternative<double>(x);
      bool yn = std::holds_alternative<std::int64_t>(y) || std::holds_alternative<double>(y);
      if (xn && yn) {
        double u = a.number(r, c), v = b.number(r, c);
        if (std::isnan(u) && std::isnan(v)) continue;
        if (u == v) continue;
        if (!(std::abs(u - v) <= rel_tol * std::max(std::abs(u), std::abs(v)))) return false;
      } else if (format_cell(x) != format_cell(y)) {
        return false;
      }
    }
  }
  return true;
}

}  // namespace balloc
