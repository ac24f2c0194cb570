#include "ndiff/io.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace ndiff::io {

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  for (auto& s : out) {
    const auto b = s.find_first_not_of(" \t");
    const auto e = s.find_last_not_of(" \t");
    s = b == std::string::npos ? "" : s.substr(b, e - b + 1);
  }
  return out;
}

double parse_real(const std::string& s, std::size_t row, std::size_t col) {
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (first != last && *first == '+') ++first;
  auto [p, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || p != last)
    throw ValidationError("row " + std::to_string(row + 1) + ", column " + std::to_string(col + 1) +
                              ": cannot parse '" + s + "' as a number",
                          std::ptrdiff_t(row));
  return v;
}

}  // namespace

const std::vector<double>& Table::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return columns[i];
  throw ValidationError("missing column '" + name + "'");
}

Table read_csv(std::istream& in) {
  Table t;
  std::string line;
  bool have_header = false;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto cells = split(line);
    if (!have_header) {
      if (!cells.empty() && cells[0].rfind("\xEF\xBB\xBF", 0) == 0) cells[0] = cells[0].substr(3);
      t.header = cells;
      t.columns.assign(cells.size(), {});
      have_header = true;
      continue;
    }
    if (cells.size() != t.header.size())
      throw ValidationError("row " + std::to_string(row + 1) + " has " + std::to_string(cells.size()) +
                                " fields, header has " + std::to_string(t.header.size()),
                            std::ptrdiff_t(row));
    for (std::size_t c = 0; c < cells.size(); ++c) t.columns[c].push_back(parse_real(cells[c], row, c));
    ++row;
  }
  if (!have_header) throw ValidationError("empty CSV input");
  return t;
}

Table read_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open '" + path + "'");
  return read_csv(in);
}

std::string format_real(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_csv(std::ostream& out, const Table& t) {
  for (std::size_t c = 0; c < t.header.size(); ++c) out << (c ? "," : "") << t.header[c];
  out << '\n';
  for (std::size_t r = 0; r < t.rows(); ++r) {
    for (std::size_t c = 0; c < t.columns.size(); ++c) out << (c ? "," : "") << format_real(t.columns[c][r]);
    out << '\n';
  }
}

void write_csv(const std::string& path, const Table& t) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write '" + path + "'");
  write_csv(out, t);
  if (!out) throw ValidationError("write failed for '" + path + "'");
}

Signal read_signal(const std::string& path, const std::string& value_column) {
  const Table t = read_csv(path);
  auto has = [&](const std::string& n) { return std::find(t.header.begin(), t.header.end(), n) != t.header.end(); };
  if (!has("t") || !has(value_column))
    throw ValidationError("'" + path + "' needs header columns t and " + value_column);
  return Signal(t.column("t"), t.column(value_column));
}

}  // namespace ndiff::io
