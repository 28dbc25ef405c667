#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

#include "doctest.h"
#include "qkdnet/errors.hpp"
#include "qkdnet/satellite_geometry.hpp"

using namespace qkdnet::geo;
using qkdnet::parse_iso8601;
using qkdnet::Timestamp;
using doctest::Approx;

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

// Place the satellite by walking `range` along the line of sight from a
// station at the origin of a local vertical plane; report its radius.
double radius_after_walking(double range, double elevation_deg) {
  const double e = elevation_deg * kDeg;
  const double x = range * std::cos(e);
  const double z = kEarthRadiusKm + range * std::sin(e);
  return std::hypot(x, z);
}

const Timestamp kT0 = parse_iso8601("2025-01-01T00:00:00Z");

GroundStation delingha() { return {"delingha", 37.378, 97.729, 10.0, SolarElevationThreshold{}}; }
GroundStation lijiang() { return {"lijiang", 26.694, 100.029, 10.0, SolarElevationThreshold{}}; }
OrbitSpec sso500() { return {"sat", 500.0, 97.4, 150.0, 0.0, kT0}; }

}  // namespace

TEST_CASE("timestamps") {
  CHECK(parse_iso8601("1970-01-01T00:00:00Z").unix_s == 0.0);
  CHECK(parse_iso8601("2000-01-01T12:00:00Z").unix_s == 946728000.0);
  CHECK(qkdnet::julian_date(parse_iso8601("2000-01-01T12:00:00Z")) == 2451545.0);
  CHECK(qkdnet::format_iso8601(parse_iso8601("2025-03-20T09:01:30Z")) == "2025-03-20T09:01:30Z");
  CHECK(qkdnet::format_iso8601(Timestamp{0.25}) == "1970-01-01T00:00:00.250Z");
  CHECK_THROWS_AS(parse_iso8601("2025-13-01T00:00:00Z"), qkdnet::DomainError);
  CHECK_THROWS_AS(parse_iso8601("yesterday"), qkdnet::DomainError);
}

TEST_CASE("slant_range") {
  CHECK(slant_range(500.0, 90.0) == 500.0);
  CHECK(slant_range(500.0, 0.0) == Approx(2573.13).epsilon(1e-5));
  CHECK(slant_range(500.0, 10.0) == Approx(1695.0).epsilon(1e-3));
  for (double h : {300.0, 500.0, 1200.0, 35786.0}) {
    for (double e = 0.0; e <= 90.0; e += 2.5) {
      const double r = slant_range(h, e);
      CHECK(radius_after_walking(r, e) == Approx(kEarthRadiusKm + h).epsilon(1e-10));
      CHECK(r >= h - 1e-9);
    }
  }
  CHECK_THROWS_AS(slant_range(500.0, -1.0), qkdnet::DomainError);
  CHECK_THROWS_AS(slant_range(500.0, 91.0), qkdnet::DomainError);
  CHECK_THROWS_AS(slant_range(0.0, 45.0), qkdnet::DomainError);
}

TEST_CASE("max_simultaneous_separation") {
  for (double h : {500.0, 1000.0}) {
    for (double e : {0.0, 10.0, 20.0}) {
      // Ground distance from a station to the sub-satellite point, from the
      // right triangle formed with the Earth centre.
      const double r = slant_range(h, e);
      const double ground =
          kEarthRadiusKm * std::asin(r * std::cos(e * kDeg) / (kEarthRadiusKm + h));
      CHECK(max_simultaneous_separation(h, e) == Approx(2.0 * ground).epsilon(1e-9));
    }
  }
  CHECK(max_simultaneous_separation(500.0, 0.0) == Approx(4890.99).epsilon(1e-6));
  CHECK(max_simultaneous_separation(500.0, 10.0) == Approx(3126.03).epsilon(1e-6));
  CHECK(max_simultaneous_separation(500.0, 10.0) > 1200.0);
}

TEST_CASE("ground-distance helpers are consistent with slant_range") {
  for (double e = 5.0; e < 90.0; e += 5.0) {
    const double d = kEarthRadiusKm * central_angle_rad(500.0, e);
    CHECK(elevation_at_ground_distance(500.0, d) == Approx(e).epsilon(1e-9));
    CHECK(slant_range_at_ground_distance(500.0, d) == Approx(slant_range(500.0, e)).epsilon(1e-9));
  }
  CHECK(slant_range_at_ground_distance(500.0, 0.0) == Approx(500.0));
  CHECK(elevation_at_ground_distance(500.0, 0.0) == Approx(90.0));
  CHECK(elevation_at_ground_distance(500.0, 4000.0) < 0.0);
}

TEST_CASE("orbital periods") {
  const double r = kEarthRadiusKm + 550.0;
  CHECK(orbital_period_s(550.0) ==
        Approx(2.0 * std::numbers::pi * std::sqrt(r * r * r / kMuEarthKm3PerS2)).epsilon(1e-12));
  CHECK(orbital_period_s(550.0) == Approx(5730.13).epsilon(1e-6));
  CHECK(orbital_period_s(geostationary_altitude_km()) == Approx(kSiderealDayS).epsilon(1e-12));
  CHECK(kEarthRadiusKm + geostationary_altitude_km() == Approx(42164.2).epsilon(1e-5));
}

TEST_CASE("great_circle_km") {
  CHECK(great_circle_km(0, 0, 0, 90) == Approx(kEarthRadiusKm * std::numbers::pi / 2));
  CHECK(great_circle_km(10, 20, 10, 20) == 0.0);
  CHECK(great_circle_km(90, 0, -90, 0) == Approx(kEarthRadiusKm * std::numbers::pi));
  CHECK(great_circle_km(37.378, 97.729, 26.694, 100.029) == Approx(1207.5).epsilon(1e-3));
}

TEST_CASE("propagate") {
  SUBCASE("radius is constant and latitude bounded by inclination") {
    for (double inc : {0.0, 42.0, 97.4}) {
      const OrbitSpec o{"o", 600.0, inc, 33.0, 12.0, kT0};
      double max_lat = 0.0;
      for (double dt = 0.0; dt < 2.0 * orbital_period_s(600.0); dt += 17.0) {
        const SubSatellitePoint p = propagate(o, kT0 + dt);
        CHECK(p.altitude_km == Approx(600.0).epsilon(1e-9));
        max_lat = std::max(max_lat, std::abs(p.latitude_deg));
      }
      const double bound = inc <= 90.0 ? inc : 180.0 - inc;
      CHECK(max_lat <= bound + 1e-9);
      CHECK(max_lat >= bound - 0.5);
    }
  }
  SUBCASE("after one period the ground track shifts west by the Earth's rotation") {
    const OrbitSpec o{"o", 500.0, 0.0, 0.0, 0.0, kT0};
    const double period = orbital_period_s(500.0);
    const SubSatellitePoint p0 = propagate(o, kT0);
    const SubSatellitePoint p1 = propagate(o, kT0 + period);
    double shift = p0.longitude_deg - p1.longitude_deg;
    shift = std::fmod(shift + 540.0, 360.0) - 180.0;
    CHECK(shift == Approx(360.0 * period / kSiderealDayS).epsilon(1e-7));
  }
  SUBCASE("a geostationary satellite holds its longitude") {
    const OrbitSpec geo{"geo", geostationary_altitude_km(), 0.0, 0.0, 0.0, kT0};
    const double lon0 = propagate(geo, kT0).longitude_deg;
    for (double days : {0.25, 1.0, 10.0}) {
      const SubSatellitePoint p = propagate(geo, kT0 + days * 86400.0);
      CHECK(std::abs(p.latitude_deg) < 1e-9);
      CHECK(std::abs(p.longitude_deg - lon0) < 1e-6);
    }
  }
  SUBCASE("a 35786 km orbit on this sphere drifts slowly") {
    const OrbitSpec geo{"geo", 35786.0, 0.0, 0.0, 0.0, kT0};
    const double lon0 = propagate(geo, kT0).longitude_deg;
    const double lon1 = propagate(geo, kT0 + 86400.0).longitude_deg;
    CHECK(std::abs(lon1 - lon0) < 0.2);
  }
  CHECK_THROWS_AS(propagate(sso500(), kT0 - 1.0), qkdnet::DomainError);
  CHECK_THROWS_AS(propagate(OrbitSpec{"bad", -5.0, 0, 0, 0, kT0}, kT0), qkdnet::DomainError);
}

TEST_CASE("look_angles overhead") {
  const OrbitSpec o{"o", 500.0, 0.0, 0.0, 0.0, kT0};
  const SubSatellitePoint p = propagate(o, kT0);
  const GroundStation below{"below", p.latitude_deg, p.longitude_deg, 10.0, {}};
  const LookAngles la = look_angles(o, below, kT0);
  CHECK(la.elevation_deg == Approx(90.0).epsilon(1e-6));
  CHECK(la.range_km == Approx(500.0).epsilon(1e-9));
}

TEST_CASE("solar position") {
  // June solstice: declination near the obliquity, Sun near zenith over the
  // tropic at noon UTC on the prime meridian.
  const Timestamp solstice = parse_iso8601("2025-06-21T12:00:00Z");
  CHECK(solar_declination_deg(solstice) == Approx(23.44).epsilon(2e-3));
  CHECK(solar_elevation_deg(solstice, 23.44, 0.0) > 88.5);
  CHECK(solar_elevation_deg(solstice, -23.44, 0.0) == Approx(90.0 - 46.88).epsilon(0.02));
  CHECK(solar_elevation_deg(parse_iso8601("2025-06-21T00:00:00Z"), 0.0, 0.0) < -60.0);
  const Timestamp equinox = parse_iso8601("2025-03-20T12:00:00Z");
  CHECK(std::abs(solar_declination_deg(equinox)) < 0.5);
  CHECK(earth_rotation_angle_rad(parse_iso8601("2000-01-01T12:00:00Z")) ==
        Approx(280.46061837 * kDeg).epsilon(1e-12));
}

TEST_CASE("pass windows against a 1 s brute-force scan") {
  const OrbitSpec o = sso500();
  const GroundStation s = delingha();
  const TimeSpan span{kT0, kT0 + 86400.0};
  const auto windows = pass_windows(o, s, span);
  REQUIRE(windows.size() >= 3);

  std::vector<TimeSpan> brute;
  bool open = false;
  for (double t = 0.0; t <= 86400.0; t += 1.0) {
    const bool vis = look_angles(o, s, kT0 + t).elevation_deg >= s.min_elevation_deg;
    if (vis && !open) brute.push_back({kT0 + t, kT0 + t});
    if (vis) brute.back().end = kT0 + t;
    open = vis;
  }
  REQUIRE(brute.size() == windows.size());
  for (std::size_t i = 0; i < windows.size(); ++i) {
    const PassWindow& w = windows[i];
    CHECK(std::abs(w.start - brute[i].start) <= 1.0 + 1e-9);
    CHECK(std::abs(w.end - brute[i].end) <= 1.0 + 1e-9);
    // Endpoints are on the visible side.
    CHECK(look_angles(o, s, w.start).elevation_deg >= s.min_elevation_deg);
    CHECK(look_angles(o, s, w.end).elevation_deg >= s.min_elevation_deg);
    CHECK(w.max_elevation_deg >= s.min_elevation_deg);
    CHECK(w.max_elevation_deg <= 90.0);
    CHECK(w.min_slant_range_km <= slant_range(500.0, s.min_elevation_deg) + 1e-6);
    CHECK(w.min_slant_range_km >= 500.0 - 1e-6);
    if (i > 0) CHECK(windows[i - 1].end < w.start);
  }

  CHECK_THROWS_AS(pass_windows(o, s, span, 0.0), qkdnet::DomainError);
  CHECK_THROWS_AS(pass_windows(o, s, {kT0 - 10.0, kT0 + 10.0}), qkdnet::DomainError);
  GroundStation bad = s;
  bad.latitude_deg = 91.0;
  CHECK_THROWS_AS(pass_windows(o, bad, span), qkdnet::DomainError);
}

TEST_CASE("night intervals") {
  const TimeSpan span{kT0, kT0 + 3 * 86400.0};
  SUBCASE("solar threshold") {
    const GroundStation s = delingha();
    const auto nights = night_intervals(s, span);
    REQUIRE(nights.size() >= 3);
    for (double t = 0.0; t < span.duration_s(); t += 97.0) {
      const Timestamp ts = kT0 + t;
      bool inside = false;
      for (const auto& n : nights) inside = inside || (ts >= n.start && ts <= n.end);
      const double sun = solar_elevation_deg(ts, s.latitude_deg, s.longitude_deg);
      if (sun < -6.2) CHECK(inside);
      if (sun > -5.8) CHECK_FALSE(inside);
    }
  }
  SUBCASE("fixed local hours, explicit offset") {
    GroundStation s = delingha();
    s.night = FixedLocalHours{20.0, 6.0, 8.0};
    const auto nights = night_intervals(s, span);
    // 00:00 UTC is 08:00 local: first night opens 12:00 UTC on day one.
    REQUIRE(nights.size() == 3);
    CHECK(nights[0].start == kT0 + 12 * 3600.0);
    CHECK(nights[0].duration_s() == 10 * 3600.0);
    for (double t = 0.0; t < span.duration_s(); t += 600.0) {
      bool inside = false;
      for (const auto& n : nights) inside = inside || (kT0 + t >= n.start && kT0 + t < n.end);
      CHECK(inside == is_night(s, kT0 + t));
    }
  }
  SUBCASE("fixed hours default to mean solar time") {
    GroundStation s{"greenwich", 51.5, 0.0, 10.0, FixedLocalHours{}};
    const auto nights = night_intervals(s, span);
    REQUIRE(!nights.empty());
    CHECK(nights[0].start == kT0);
    CHECK(nights[0].end == kT0 + 6 * 3600.0);
  }
}

TEST_CASE("night_filter splits and clips") {
  GroundStation s = delingha();
  s.night = FixedLocalHours{20.0, 6.0, 0.0};
  const PassWindow crossing{"delingha", "", kT0 + 5.5 * 3600.0, kT0 + 6.5 * 3600.0, 40.0, 700.0};
  const PassWindow daytime{"delingha", "", kT0 + 12 * 3600.0, kT0 + 13 * 3600.0, 40.0, 700.0};
  const std::vector<PassWindow> in{crossing, daytime};
  const auto out = night_filter(in, s);
  REQUIRE(out.size() == 1);
  CHECK(out[0].start == crossing.start);
  CHECK(out[0].end == kT0 + 6 * 3600.0);
  CHECK(out[0].max_elevation_deg == 40.0);
}

TEST_CASE("1200 km simultaneous night windows") {
  const GroundStation a = delingha();
  const GroundStation b = lijiang();
  const OrbitSpec o = sso500();
  const TimeSpan span{kT0, kT0 + 3 * 86400.0};
  const auto windows = simultaneous_windows(o, a, b, span);
  REQUIRE(!windows.empty());
  const auto wa = night_filter(pass_windows(o, a, span), a);
  const auto wb = night_filter(pass_windows(o, b, span), b);
  auto covered = [](const std::vector<PassWindow>& ws, Timestamp t) {
    for (const auto& w : ws)
      if (t >= w.start && t <= w.end) return true;
    return false;
  };
  for (const auto& w : windows) {
    CHECK(w.station_id == "delingha");
    CHECK(w.peer_station_id == "lijiang");
    CHECK(w.duration_s() > 0.0);
    for (Timestamp t = w.start; t <= w.end; t = t + 5.0) {
      CHECK(covered(wa, t));
      CHECK(covered(wb, t));
      CHECK(is_night(a, t));
      CHECK(is_night(b, t));
      CHECK(look_angles(o, a, t).elevation_deg >= 10.0);
      CHECK(look_angles(o, b, t).elevation_deg >= 10.0);
    }
    CHECK(w.min_slant_range_km <= slant_range(500.0, 10.0) + 1e-6);
  }
  const auto with_day = simultaneous_windows(o, a, b, span, kDefaultPassStepS, true);
  CHECK(with_day.size() >= windows.size());
}

TEST_CASE("stations beyond the simultaneous limit never share a window") {
  const OrbitSpec o = sso500();
  const GroundStation a{"a", 0.0, 0.0, 10.0, {}};
  const GroundStation b{"b", 0.0, 40.0, 10.0, {}};  // about 4450 km apart
  REQUIRE(great_circle_km(0, 0, 0, 40) > max_simultaneous_separation(500.0, 10.0));
  CHECK(simultaneous_windows(o, a, b, {kT0, kT0 + 2 * 86400.0}, kDefaultPassStepS, true).empty());
}

TEST_CASE("sequential contact plan") {
  const std::vector<GroundStation> stations{delingha(), lijiang(),
                                            {"vienna", 48.2, 16.37, 10.0, {}}};
  const OrbitSpec o = sso500();
  const auto plan = sequential_contact_plan(o, stations, {kT0, kT0 + 2 * 86400.0});
  REQUIRE(!plan.empty());
  std::set<std::string> seen;
  for (std::size_t i = 0; i < plan.size(); ++i) {
    seen.insert(plan[i].station_id);
    if (i > 0) CHECK(plan[i - 1].start <= plan[i].start);
    const GroundStation& s = *std::find_if(stations.begin(), stations.end(),
                                           [&](const GroundStation& g) {
                                             return g.id == plan[i].station_id;
                                           });
    CHECK(is_night(s, plan[i].start));
  }
  CHECK(seen.size() == 3);
}
