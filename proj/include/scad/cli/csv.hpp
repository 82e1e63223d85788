#pragma once

#include <charconv>
#include <cmath>
#include <ostream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

namespace scad::cli {

/// Ten significant digits, shortest form ("%.10g" style); -0 prints as 0.
inline std::string format_number(double v) {
  if (v == 0.0) v = 0.0;
  if (std::isnan(v)) return "nan";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 10);
  if (res.ec != std::errc{}) return "nan";
  return {buf, res.ptr};
}

/// Writes one comma-separated line terminated by LF. Fields are written
/// verbatim; callers only pass numbers, bit strings and plain identifiers.
inline void write_csv_line(std::ostream& out, const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out << ',';
    out << fields[i];
  }
  out << '\n';
}

/// Splits one CSV line on commas (no quoting).
inline std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    out.emplace_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

}  // namespace scad::cli
