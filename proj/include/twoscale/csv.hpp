#pragma once

#include <initializer_list>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace twoscale {

/// Shortest decimal string that parses back to exactly `v`.
std::string format_double(double v);
/// Parses the whole string as a double; throws ConfigError otherwise.
double parse_double(std::string_view text);

/// Comma-separated table with a fixed header; cells are written with
/// format_double so that files are byte-reproducible.
class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> header);

  CsvWriter& row(std::span<const double> values);
  CsvWriter& row(std::initializer_list<double> values) { return row(std::span<const double>(values.begin(), values.size())); }
  /// Mixed row with pre-formatted cells.
  CsvWriter& raw_row(const std::vector<std::string>& cells);

  std::size_t columns() const { return header_.size(); }
  std::size_t rows() const { return rows_; }
  std::string str() const { return out_.str(); }

 private:
  std::vector<std::string> header_;
  std::ostringstream out_;
  std::size_t rows_ = 0;
};

}  // namespace twoscale
