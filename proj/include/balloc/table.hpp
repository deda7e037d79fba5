#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace balloc {

using Cell = std::variant<std::monostate, std::int64_t, double, std::string>;

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;

  // Index of a column; throws ValidationError when missing.
  std::size_t column(std::string_view name) const;
  bool has_column(std::string_view name) const;
  double number(std::size_t row, std::size_t col) const;
  std::string text(std::size_t row, std::size_t col) const;
  void add_row(std::vector<Cell> row);
};

// Doubles use 9 significant digits.
std::string format_cell(const Cell& cell);
std::string csv_escape(const std::string& field);

void write_csv(const Table& table, std::ostream& out);
void write_csv(const Table& table, const std::string& path);
Table read_csv(std::istream& in);
Table read_csv_file(const std::string& path);

// Same header and cells; numeric cells compared with relative tolerance.
bool tables_equal(const Table& a, const Table& b, double rel_tol = 1e-8);

}  // namespace balloc
