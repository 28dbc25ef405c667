// Low-precision Sun position (about 0.01 deg over 1950-2050) and Earth
// rotation angle. Good enough for twilight gating.

#include <algorithm>
#include <cmath>
#include <numbers>

#include "qkdnet/satellite_geometry.hpp"

namespace qkdnet::geo {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;
constexpr double kJ2000JulianDate = 2451545.0;
constexpr double kRotationAngleAtJ2000Deg = 280.46061837;

struct SunEquatorial {
  double right_ascension_rad;
  double declination_rad;
};

SunEquatorial sun_equatorial(Timestamp t) {
  const double n = julian_date(t) - kJ2000JulianDate;
  const double mean_longitude = 280.460 + 0.9856474 * n;
  const double mean_anomaly = (357.528 + 0.9856003 * n) * kDeg;
  const double ecliptic_longitude =
      (mean_longitude + 1.915 * std::sin(mean_anomaly) + 0.020 * std::sin(2.0 * mean_anomaly)) *
      kDeg;
  const double obliquity = (23.439 - 0.0000004 * n) * kDeg;
  return {std::atan2(std::cos(obliquity) * std::sin(ecliptic_longitude),
                     std::cos(ecliptic_longitude)),
          std::asin(std::sin(obliquity) * std::sin(ecliptic_longitude))};
}

}  // namespace

double earth_rotation_angle_rad(Timestamp t) {
  const double days = julian_date(t) - kJ2000JulianDate;
  const double turns = kRotationAngleAtJ2000Deg / 360.0 + days * (86400.0 / kSiderealDayS);
  double frac = turns - std::floor(turns);
  return frac * 2.0 * std::numbers::pi;
}

double solar_declination_deg(Timestamp t) { return sun_equatorial(t).declination_rad / kDeg; }

double solar_elevation_deg(Timestamp t, double latitude_deg, double longitude_deg) {
  const SunEquatorial sun = sun_equatorial(t);
  const double hour_angle =
      earth_rotation_angle_rad(t) + longitude_deg * kDeg - sun.right_ascension_rad;
  const double lat = latitude_deg * kDeg;
  const double s = std::sin(lat) * std::sin(sun.declination_rad) +
                   std::cos(lat) * std::cos(sun.declination_rad) * std::cos(hour_angle);
  return std::asin(std::clamp(s, -1.0, 1.0)) / kDeg;
}

}  // namespace qkdnet::geo
