#pragma once

// Minimal comma-separated text handling: no quoting, '.' decimals, blank
// cells are missing. Enough for the numeric tables this toolkit reads.

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace chfkit::csv {

struct Cell {
  std::string_view text; // whitespace-trimmed
  std::size_t offset;    // byte offset of the cell in the source
};

struct Row {
  std::vector<Cell> cells;
  std::size_t line;   // 1-based
  std::size_t offset; // byte offset of the line
};

struct Table {
  std::vector<std::string> header;
  std::vector<Row> rows; // blank lines skipped
};

/// Splits text into a header and data rows. Throws ParseError on an empty
/// input or a row whose cell count differs from the header's.
Table parse(std::string_view text);

/// Index of a header column or throws ParseError naming it.
std::size_t column(const Table& t, std::string_view name);

/// Parses a numeric cell; blank gives nullopt, garbage throws ParseError.
std::optional<double> number(const Cell& c, const std::string& field);

/// Shortest round-trip decimal form.
std::string format(double v);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view contents);

} // namespace chfkit::csv
