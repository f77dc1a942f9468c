#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace tw {

/// A header plus string cells; the interchange form of every CSV the tool
/// reads or writes.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Index of a header column; throws DataError when absent.
  std::size_t column(std::string_view name) const;
};

/// RFC 4180 style: quoted fields may contain commas, quotes and newlines.
Table read_csv(std::istream& in);
Table read_csv_file(const std::filesystem::path& path);
void write_csv(std::ostream& out, const Table& table);

/// Shortest decimal form that parses back to the same double.
std::string format_double(double v);
double parse_double(std::string_view s);
long long parse_int(std::string_view s);

}  // namespace tw
