#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "ndiff/core.hpp"

namespace ndiff::io {

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<double>> columns;

  std::size_t rows() const { return columns.empty() ? 0 : columns.front().size(); }
  /// Column by name; throws ValidationError if absent.
  const std::vector<double>& column(const std::string& name) const;
};

/// Comma-separated, header row first, '.' decimals. CRLF is tolerated on input.
Table read_csv(std::istream& in);
Table read_csv(const std::string& path);

/// Reals with 17 significant digits, LF line endings.
void write_csv(std::ostream& out, const Table& t);
void write_csv(const std::string& path, const Table& t);

/// Reads columns `t` and `value_column` (by header name) into a validated
/// Signal. Other columns are ignored.
Signal read_signal(const std::string& path, const std::string& value_column = "y");

/// 17 significant digits, enough to round-trip any double.
std::string format_real(double v);

}  // namespace ndiff::io
