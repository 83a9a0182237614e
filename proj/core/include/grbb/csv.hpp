#pragma once

#include <cstddef>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace grbb {

/// Raised for malformed input files. Carries the 1-based line number when known.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Raised when parsed data violates a domain invariant.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

namespace csv {

/// Splits on ',' with no quoting; surrounding spaces and a trailing '\r' are trimmed.
std::vector<std::string> split_line(std::string_view line);

/// Strict decimal parse: the whole cell must be consumed and the value finite.
bool parse_double(std::string_view cell, double& out);

/// Shortest decimal text that parses back to the identical double.
std::string format_double(double value);

std::string join(const std::vector<std::string>& cells);

/// A header row plus string cells; every row has header.size() cells.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Index of a named column, or throws std::out_of_range.
  std::size_t column(std::string_view name) const;
};

Table read_table(std::istream& in);
Table read_table_file(const std::string& path);

}  // namespace csv
}  // namespace grbb
