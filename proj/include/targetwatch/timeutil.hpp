#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace tw {

/// Seconds since 1970-01-01T00:00:00Z.
using UnixSeconds = std::int64_t;

inline constexpr UnixSeconds kSecondsPerDay = 86400;

/// Days since the epoch for a proleptic Gregorian civil date.
constexpr std::int64_t days_from_civil(int y, unsigned m, unsigned d) noexcept {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

struct CivilDate {
  int year;
  unsigned month;
  unsigned day;
};

CivilDate civil_from_days(std::int64_t days) noexcept;

/// Parses "YYYY-MM-DDTHH:MM:SS" followed by "Z" or "+00:00" (fractional
/// seconds are truncated). Returns nullopt on any syntax or range error.
std::optional<UnixSeconds> parse_timestamp(std::string_view text);

/// Parses "YYYY-MM-DD" as midnight UTC.
std::optional<UnixSeconds> parse_date(std::string_view text);

std::string format_timestamp(UnixSeconds t);
std::string format_date(UnixSeconds t);

/// "YYYY-MM" of the UTC calendar month containing t.
std::string month_key(UnixSeconds t);

/// Half-open study window [start, end).
struct Window {
  UnixSeconds start = 0;
  UnixSeconds end = 0;

  bool contains(UnixSeconds t) const noexcept { return t >= start && t < end; }
};

/// 2022-01-01 through 2022-11-30 inclusive.
Window default_study_window();

}  // namespace tw
