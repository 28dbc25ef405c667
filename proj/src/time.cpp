#include "qkdnet/time.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <string>

#include "qkdnet/errors.hpp"

namespace qkdnet {

namespace {

constexpr double kUnixEpochJulianDate = 2440587.5;

}  // namespace

Timestamp parse_iso8601(std::string_view text) {
  const std::string s(text);
  int year = 0;
  unsigned month = 0, day = 0, hour = 0, minute = 0;
  double second = 0.0;
  int consumed = 0;
  const int fields = std::sscanf(s.c_str(), "%4d-%2u-%2uT%2u:%2u:%lf%n", &year, &month, &day,
                                 &hour, &minute, &second, &consumed);
  const bool tail_ok = consumed == static_cast<int>(s.size()) ||
                       (consumed + 1 == static_cast<int>(s.size()) && s.back() == 'Z');
  if (fields != 6 || !tail_ok) {
    throw DomainError("invalid timestamp '" + s + "', expected YYYY-MM-DDTHH:MM:SSZ");
  }
  const std::chrono::year_month_day ymd{std::chrono::year{year}, std::chrono::month{month},
                                        std::chrono::day{day}};
  if (!ymd.ok() || hour > 23 || minute > 59 || second < 0.0 || second >= 61.0) {
    throw DomainError("invalid timestamp '" + s + "'");
  }
  const auto days = std::chrono::sys_days{ymd}.time_since_epoch().count();
  return {static_cast<double>(days) * 86400.0 + hour * 3600.0 + minute * 60.0 + second};
}

std::string format_iso8601(Timestamp t) {
  const double whole = std::floor(t.unix_s);
  double frac = t.unix_s - whole;
  auto secs = static_cast<long long>(whole);
  long long millis = std::llround(frac * 1000.0);
  if (millis == 1000) {
    ++secs;
    millis = 0;
  }
  const long long day_count = secs >= 0 ? secs / 86400 : (secs - 86399) / 86400;
  const long long sod = secs - day_count * 86400;
  const std::chrono::year_month_day ymd{
      std::chrono::sys_days{std::chrono::days{day_count}}};
  char buf[64];
  if (millis == 0) {
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02lld:%02lld:%02lldZ",
                  static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                  static_cast<unsigned>(ymd.day()), sod / 3600, (sod / 60) % 60, sod % 60);
  } else {
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02lld:%02lld:%02lld.%03lldZ",
                  static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                  static_cast<unsigned>(ymd.day()), sod / 3600, (sod / 60) % 60, sod % 60,
                  millis);
  }
  return buf;
}

double julian_date(Timestamp t) noexcept { return kUnixEpochJulianDate + t.unix_s / 86400.0; }

}  // namespace qkdnet
