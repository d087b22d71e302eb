#include "stormflow/timeutil.hpp"

#include <charconv>
#include <cstdio>

#include "stormflow/grid.hpp"

namespace stormflow {
namespace {

int take_int(std::string_view text, std::size_t pos, std::size_t len, std::string_view whole) {
  int value = 0;
  if (pos + len > text.size()) {
    throw DataError("truncated timestamp: '" + std::string(whole) + "'");
  }
  const char* begin = text.data() + pos;
  auto [ptr, ec] = std::from_chars(begin, begin + len, value);
  if (ec != std::errc{} || ptr != begin + len) {
    throw DataError("malformed timestamp: '" + std::string(whole) + "'");
  }
  return value;
}

void expect(std::string_view text, std::size_t pos, char c, std::string_view whole) {
  if (pos >= text.size() || text[pos] != c) {
    throw DataError("malformed timestamp: '" + std::string(whole) + "'");
  }
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '"')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r' || s.back() == '"'))
    s.remove_suffix(1);
  return s;
}

}  // namespace

CalendarDay parse_date(std::string_view raw) {
  const auto text = trim(raw);
  const int y = take_int(text, 0, 4, raw);
  expect(text, 4, '-', raw);
  const int m = take_int(text, 5, 2, raw);
  expect(text, 7, '-', raw);
  const int d = take_int(text, 8, 2, raw);
  if (text.size() != 10) throw DataError("malformed date: '" + std::string(raw) + "'");
  const CalendarDay day{std::chrono::year{y}, std::chrono::month{static_cast<unsigned>(m)},
                        std::chrono::day{static_cast<unsigned>(d)}};
  if (!day.ok()) throw DataError("invalid calendar date: '" + std::string(raw) + "'");
  return day;
}

TimePoint parse_utc(std::string_view raw) {
  const auto text = trim(raw);
  const CalendarDay day = parse_date(text.substr(0, std::min<std::size_t>(10, text.size())));
  if (text.size() == 10) return std::chrono::sys_days{day};
  if (text[10] != 'T' && text[10] != ' ') {
    throw DataError("malformed timestamp: '" + std::string(raw) + "'");
  }
  const int hh = take_int(text, 11, 2, raw);
  expect(text, 13, ':', raw);
  const int mm = take_int(text, 14, 2, raw);
  int ss = 0;
  std::size_t pos = 16;
  if (pos < text.size() && text[pos] == ':') {
    ss = take_int(text, 17, 2, raw);
    pos = 19;
    // Fractional seconds are accepted and truncated.
    if (pos < text.size() && text[pos] == '.') {
      ++pos;
      while (pos < text.size() && text[pos] >= '0' && text[pos] <= '9') ++pos;
    }
  }
  const auto zone = text.substr(pos);
  if (!(zone.empty() || zone == "Z" || zone == "+00:00" || zone == "+0000")) {
    throw DataError("only UTC timestamps are supported: '" + std::string(raw) + "'");
  }
  if (hh > 23 || mm > 59 || ss > 60) {
    throw DataError("time of day out of range: '" + std::string(raw) + "'");
  }
  return std::chrono::sys_days{day} + std::chrono::hours{hh} + std::chrono::minutes{mm} +
         std::chrono::seconds{ss};
}

CalendarDay utc_day(TimePoint t) { return CalendarDay{std::chrono::floor<std::chrono::days>(t)}; }

std::string format_date(CalendarDay d) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(d.year()),
                static_cast<unsigned>(d.month()), static_cast<unsigned>(d.day()));
  return buf;
}

namespace {
struct Clock {
  CalendarDay day;
  long hh, mm, ss;
};
Clock split(TimePoint t) {
  const auto days = std::chrono::floor<std::chrono::days>(t);
  const auto secs = (t - days).count();
  return {CalendarDay{days}, secs / 3600, (secs / 60) % 60, secs % 60};
}
}  // namespace

std::string format_utc(TimePoint t) {
  const auto c = split(t);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%sT%02ld:%02ld:%02ldZ", format_date(c.day).c_str(), c.hh, c.mm,
                c.ss);
  return buf;
}

std::string file_stamp(TimePoint t) {
  const auto c = split(t);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%04d%02u%02uT%02ld%02ld%02ldZ", static_cast<int>(c.day.year()),
                static_cast<unsigned>(c.day.month()), static_cast<unsigned>(c.day.day()), c.hh,
                c.mm, c.ss);
  return buf;
}

}  // namespace stormflow
