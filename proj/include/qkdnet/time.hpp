#pragma once

#include <compare>
#include <string>
#include <string_view>

namespace qkdnet {

/// UTC instant as seconds since the Unix epoch.
struct Timestamp {
  double unix_s = 0.0;

  auto operator<=>(const Timestamp&) const = default;

  Timestamp operator+(double seconds) const noexcept { return {unix_s + seconds}; }
  Timestamp operator-(double seconds) const noexcept { return {unix_s - seconds}; }
  double operator-(Timestamp other) const noexcept { return unix_s - other.unix_s; }
};

/// Accepts "YYYY-MM-DDTHH:MM:SS[.fff]Z" (the trailing Z may be omitted).
/// Throws DomainError on anything else.
Timestamp parse_iso8601(std::string_view text);

/// Whole seconds print without a fraction; otherwise millisecond resolution.
std::string format_iso8601(Timestamp t);

double julian_date(Timestamp t) noexcept;

}  // namespace qkdnet
