#include "chfkit/csv.hpp"

#include "chfkit/errors.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace chfkit::csv {

namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r'; }

Cell trimmed(std::string_view s, std::size_t offset) {
  std::size_t a = 0, b = s.size();
  while (a < b && is_space(s[a])) ++a;
  while (b > a && is_space(s[b - 1])) --b;
  return {s.substr(a, b - a), offset + a};
}

std::vector<Cell> split(std::string_view line, std::size_t offset) {
  std::vector<Cell> out;
  std::size_t start = 0;
  for (;;) {
    auto comma = line.find(',', start);
    auto end = comma == std::string_view::npos ? line.size() : comma;
    out.push_back(trimmed(line.substr(start, end - start), offset + start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

} // namespace

Table parse(std::string_view text) {
  // Tolerate a UTF-8 byte order mark.
  std::size_t pos = 0;
  if (text.substr(0, 3) == "\xEF\xBB\xBF") pos = 3;
  Table t;
  std::size_t line_no = 0;
  bool have_header = false;
  while (pos < text.size()) {
    auto nl = text.find('\n', pos);
    auto end = nl == std::string_view::npos ? text.size() : nl;
    auto line = text.substr(pos, end - pos);
    ++line_no;
    if (trimmed(line, 0).text.empty()) {
      pos = end + 1;
      continue;
    }
    auto cells = split(line, pos);
    if (!have_header) {
      for (auto& c : cells) t.header.emplace_back(c.text);
      have_header = true;
    } else {
      if (cells.size() != t.header.size()) {
        throw ParseError("line " + std::to_string(line_no) + " has " + std::to_string(cells.size()) +
                             " cells, header has " + std::to_string(t.header.size()),
                         pos, "line " + std::to_string(line_no));
      }
      t.rows.push_back({std::move(cells), line_no, pos});
    }
    pos = end + 1;
  }
  if (!have_header) throw ParseError("empty file", 0, "header");
  return t;
}

std::size_t column(const Table& t, std::string_view name) {
  for (std::size_t k = 0; k < t.header.size(); ++k) {
    if (t.header[k] == name) return k;
  }
  throw ParseError("missing column '" + std::string(name) + "'", 0, std::string(name));
}

std::optional<double> number(const Cell& c, const std::string& field) {
  if (c.text.empty()) return std::nullopt;
  auto s = c.text;
  if (s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size() || !std::isfinite(v)) {
    throw ParseError("unparseable number '" + std::string(c.text) + "'", c.offset, field);
  }
  return v;
}

std::string format(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, std::string_view contents) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open '" + path + "' for writing");
  f.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!f) throw std::runtime_error("write failed for '" + path + "'");
}

} // namespace chfkit::csv
