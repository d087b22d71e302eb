#pragma once

#include <chrono>
#include <string>
#include <string_view>

namespace stormflow {

using TimePoint = std::chrono::sys_seconds;
using CalendarDay = std::chrono::year_month_day;

/// Parses "YYYY-MM-DDTHH:MM[:SS][Z]" (a space may replace the 'T').
/// Only UTC is accepted; a trailing "Z" or "+00:00" is allowed.
TimePoint parse_utc(std::string_view text);

/// Formats as "YYYY-MM-DDTHH:MM:SSZ".
std::string format_utc(TimePoint t);

/// Parses "YYYY-MM-DD".
CalendarDay parse_date(std::string_view text);
std::string format_date(CalendarDay d);

/// Calendar day (UTC) containing t.
CalendarDay utc_day(TimePoint t);

/// Compact stamp usable in file names: "YYYYMMDDTHHMMSSZ".
std::string file_stamp(TimePoint t);

inline double hours_between(TimePoint from, TimePoint to) {
  return std::chrono::duration<double, std::ratio<3600>>(to - from).count();
}

}  // namespace stormflow
