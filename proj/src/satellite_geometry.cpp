#include "qkdnet/satellite_geometry.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>

#include "qkdnet/errors.hpp"

namespace qkdnet::geo {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kDeg = kPi / 180.0;
constexpr double kNightSampleStepS = 60.0;
constexpr double kSummaryStepS = 5.0;

struct Vec3 {
  double x, y, z;

  Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
  double norm() const { return std::sqrt(dot(*this)); }
};

void check_elevation(double elevation_deg) {
  if (!(elevation_deg >= 0.0 && elevation_deg <= 90.0)) {
    throw DomainError("elevation must be in [0, 90] deg");
  }
}

void check_altitude(double altitude_km) {
  if (!(std::isfinite(altitude_km) && altitude_km > 0.0)) {
    throw DomainError("altitude must be > 0 km");
  }
}

Vec3 satellite_ecef(const OrbitSpec& orbit, Timestamp t) {
  const double r = kEarthRadiusKm + orbit.altitude_km;
  const double mean_motion = 2.0 * kPi / orbital_period_s(orbit.altitude_km);
  const double u = orbit.initial_phase_deg * kDeg + mean_motion * (t - orbit.epoch);
  const double raan = orbit.raan_deg * kDeg;
  const double inc = orbit.inclination_deg * kDeg;
  const double cu = std::cos(u), su = std::sin(u);
  const double co = std::cos(raan), so = std::sin(raan);
  const Vec3 eci{r * (co * cu - so * su * std::cos(inc)), r * (so * cu + co * su * std::cos(inc)),
                 r * su * std::sin(inc)};
  const double theta = earth_rotation_angle_rad(t);
  const double ct = std::cos(theta), st = std::sin(theta);
  return {ct * eci.x + st * eci.y, -st * eci.x + ct * eci.y, eci.z};
}

Vec3 station_ecef(const GroundStation& station) {
  const double lat = station.latitude_deg * kDeg;
  const double lon = station.longitude_deg * kDeg;
  return {kEarthRadiusKm * std::cos(lat) * std::cos(lon),
          kEarthRadiusKm * std::cos(lat) * std::sin(lon), kEarthRadiusKm * std::sin(lat)};
}

LookAngles look_from(const Vec3& station, const Vec3& sat) {
  const Vec3 rho = sat - station;
  const double range = rho.norm();
  const double s = rho.dot(station) / (range * kEarthRadiusKm);
  return {std::asin(std::clamp(s, -1.0, 1.0)) / kDeg, range};
}

// Maximal sub-intervals of `span` where `pred` holds: sampled every `step_s`,
// each boundary bisected until the bracket is at most 1 s wide. The returned
// endpoints are always points where `pred` holds.
std::vector<TimeSpan> intervals_where(const std::function<bool(Timestamp)>& pred, TimeSpan span,
                                      double step_s) {
  std::vector<TimeSpan> out;
  if (!(span.end > span.start)) return out;
  if (!(step_s > 0.0)) throw DomainError("sampling step must be > 0 s");

  auto refine = [&](Timestamp lo, Timestamp hi, bool lo_state) {
    // lo_state holds at lo, !lo_state at hi; return the point on the true side.
    while (hi - lo > kBoundaryToleranceS) {
      const Timestamp mid{0.5 * (lo.unix_s + hi.unix_s)};
      if (pred(mid) == lo_state) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
    return lo_state ? lo : hi;
  };

  Timestamp prev = span.start;
  bool prev_state = pred(prev);
  bool is_open = prev_state;
  Timestamp open = prev;

  const auto steps = static_cast<long long>(std::ceil(span.duration_s() / step_s));
  for (long long k = 1; k <= steps; ++k) {
    const Timestamp t = k == steps ? span.end : span.start + static_cast<double>(k) * step_s;
    const bool state = pred(t);
    if (state != prev_state) {
      const Timestamp boundary = refine(prev, t, prev_state);
      if (state) {
        open = boundary;
        is_open = true;
      } else if (is_open) {
        if (boundary > open) out.push_back({open, boundary});
        is_open = false;
      }
    }
    prev = t;
    prev_state = state;
  }
  if (is_open && span.end > open) out.push_back({open, span.end});
  return out;
}

std::vector<TimeSpan> intersect(std::span<const TimeSpan> a, std::span<const TimeSpan> b) {
  std::vector<TimeSpan> out;
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    const Timestamp lo = std::max(a[i].start, b[j].start);
    const Timestamp hi = std::min(a[i].end, b[j].end);
    if (hi > lo) out.push_back({lo, hi});
    if (a[i].end < b[j].end) {
      ++i;
    } else {
      ++j;
    }
  }
  return out;
}

template <typename Fn>
void for_each_sample(Timestamp start, Timestamp end, Fn&& fn) {
  const double duration = end - start;
  const auto steps = std::max<long long>(1, static_cast<long long>(std::ceil(duration / kSummaryStepS)));
  for (long long k = 0; k <= steps; ++k) {
    fn(k == steps ? end : start + static_cast<double>(k) * kSummaryStepS);
  }
}

void summarize(PassWindow& w, const OrbitSpec& orbit, const GroundStation& station) {
  const Vec3 st = station_ecef(station);
  w.max_elevation_deg = -90.0;
  w.min_slant_range_km = std::numeric_limits<double>::infinity();
  for_each_sample(w.start, w.end, [&](Timestamp t) {
    const LookAngles la = look_from(st, satellite_ecef(orbit, t));
    w.max_elevation_deg = std::max(w.max_elevation_deg, la.elevation_deg);
    w.min_slant_range_km = std::min(w.min_slant_range_km, la.range_km);
  });
}

void summarize_pair(PassWindow& w, const OrbitSpec& orbit, const GroundStation& a,
                    const GroundStation& b) {
  const Vec3 sa = station_ecef(a);
  const Vec3 sb = station_ecef(b);
  w.max_elevation_deg = -90.0;
  w.min_slant_range_km = std::numeric_limits<double>::infinity();
  for_each_sample(w.start, w.end, [&](Timestamp t) {
    const Vec3 sat = satellite_ecef(orbit, t);
    const LookAngles la = look_from(sa, sat);
    const LookAngles lb = look_from(sb, sat);
    w.max_elevation_deg =
        std::max(w.max_elevation_deg, std::min(la.elevation_deg, lb.elevation_deg));
    w.min_slant_range_km = std::min(w.min_slant_range_km, std::max(la.range_km, lb.range_km));
  });
}

double local_hour(const FixedLocalHours& mode, const GroundStation& station, Timestamp t) {
  const double offset = mode.utc_offset_hours.value_or(station.longitude_deg / 15.0);
  const double h = std::fmod(t.unix_s / 3600.0 + offset, 24.0);
  return h < 0.0 ? h + 24.0 : h;
}

std::vector<TimeSpan> fixed_hours_nights(const FixedLocalHours& mode,
                                         const GroundStation& station, TimeSpan span) {
  std::vector<TimeSpan> out;
  if (!(span.end > span.start) || mode.start_hour == mode.end_hour) return out;
  const double offset_s = mode.utc_offset_hours.value_or(station.longitude_deg / 15.0) * 3600.0;
  const double night_len_h = mode.start_hour < mode.end_hour
                                 ? mode.end_hour - mode.start_hour
                                 : 24.0 - mode.start_hour + mode.end_hour;
  // Local midnights, starting one day early to catch a night already running.
  const double first_day = std::floor((span.start.unix_s + offset_s) / 86400.0) - 1.0;
  for (double day = first_day;; day += 1.0) {
    const double local_start = day * 86400.0 + mode.start_hour * 3600.0;
    const Timestamp start{local_start - offset_s};
    if (start >= span.end) break;
    const Timestamp end = start + night_len_h * 3600.0;
    const Timestamp lo = std::max(start, span.start);
    const Timestamp hi = std::min(end, span.end);
    if (hi > lo) out.push_back({lo, hi});
  }
  return out;
}

std::vector<PassWindow> clip_to_nights(std::span<const PassWindow> windows,
                                       const GroundStation& station, const OrbitSpec* orbit) {
  std::vector<PassWindow> out;
  for (const auto& w : windows) {
    for (const TimeSpan& n : night_intervals(station, {w.start, w.end})) {
      PassWindow clipped = w;
      clipped.start = n.start;
      clipped.end = n.end;
      if (orbit != nullptr && clipped != w) summarize(clipped, *orbit, station);
      out.push_back(std::move(clipped));
    }
  }
  return out;
}

}  // namespace

void GroundStation::validate() const {
  if (!(std::abs(latitude_deg) <= 90.0)) {
    throw DomainError("station " + id + ": |latitude| must be <= 90 deg");
  }
  if (!std::isfinite(longitude_deg)) throw DomainError("station " + id + ": invalid longitude");
  if (!(min_elevation_deg >= 0.0 && min_elevation_deg < 90.0)) {
    throw DomainError("station " + id + ": min_elevation must be in [0, 90) deg");
  }
  if (const auto* f = std::get_if<FixedLocalHours>(&night)) {
    if (!(f->start_hour >= 0.0 && f->start_hour < 24.0 && f->end_hour >= 0.0 &&
          f->end_hour < 24.0)) {
      throw DomainError("station " + id + ": night hours must be in [0, 24)");
    }
  }
}

void OrbitSpec::validate() const {
  if (!(std::isfinite(altitude_km) && altitude_km > 0.0)) {
    throw DomainError("orbit " + id + ": altitude must be > 0 km");
  }
  if (!std::isfinite(inclination_deg) || !std::isfinite(raan_deg) ||
      !std::isfinite(initial_phase_deg)) {
    throw DomainError("orbit " + id + ": angles must be finite");
  }
}

double slant_range(double altitude_km, double elevation_deg) {
  check_altitude(altitude_km);
  check_elevation(elevation_deg);
  if (elevation_deg == 90.0) return altitude_km;
  const double r = kEarthRadiusKm + altitude_km;
  const double e = elevation_deg * kDeg;
  const double rc = kEarthRadiusKm * std::cos(e);
  return std::sqrt(r * r - rc * rc) - kEarthRadiusKm * std::sin(e);
}

double central_angle_rad(double altitude_km, double elevation_deg) {
  check_altitude(altitude_km);
  check_elevation(elevation_deg);
  if (elevation_deg == 90.0) return 0.0;
  const double e = elevation_deg * kDeg;
  return std::acos(kEarthRadiusKm * std::cos(e) / (kEarthRadiusKm + altitude_km)) - e;
}

double max_simultaneous_separation(double altitude_km, double min_elevation_deg) {
  return 2.0 * kEarthRadiusKm * central_angle_rad(altitude_km, min_elevation_deg);
}

double slant_range_at_ground_distance(double altitude_km, double ground_distance_km) {
  check_altitude(altitude_km);
  const double psi = ground_distance_km / kEarthRadiusKm;
  const double r = kEarthRadiusKm + altitude_km;
  return std::sqrt(kEarthRadiusKm * kEarthRadiusKm + r * r -
                   2.0 * kEarthRadiusKm * r * std::cos(psi));
}

double elevation_at_ground_distance(double altitude_km, double ground_distance_km) {
  const double psi = ground_distance_km / kEarthRadiusKm;
  const double r = kEarthRadiusKm + altitude_km;
  const double range = slant_range_at_ground_distance(altitude_km, ground_distance_km);
  return std::asin(std::clamp((r * std::cos(psi) - kEarthRadiusKm) / range, -1.0, 1.0)) / kDeg;
}

double orbital_period_s(double altitude_km) {
  check_altitude(altitude_km);
  const double a = kEarthRadiusKm + altitude_km;
  return 2.0 * kPi * std::sqrt(a * a * a / kMuEarthKm3PerS2);
}

double geostationary_altitude_km() {
  const double n = kSiderealDayS / (2.0 * kPi);
  return std::cbrt(kMuEarthKm3PerS2 * n * n) - kEarthRadiusKm;
}

double great_circle_km(double lat1_deg, double lon1_deg, double lat2_deg, double lon2_deg) {
  const double p1 = lat1_deg * kDeg, p2 = lat2_deg * kDeg;
  const double dp = p2 - p1, dl = (lon2_deg - lon1_deg) * kDeg;
  const double h = std::sin(dp / 2) * std::sin(dp / 2) +
                   std::cos(p1) * std::cos(p2) * std::sin(dl / 2) * std::sin(dl / 2);
  return 2.0 * kEarthRadiusKm * std::asin(std::min(1.0, std::sqrt(h)));
}

SubSatellitePoint propagate(const OrbitSpec& orbit, Timestamp t) {
  orbit.validate();
  if (t < orbit.epoch) {
    throw DomainError("propagate: time precedes the epoch of orbit " + orbit.id);
  }
  const Vec3 p = satellite_ecef(orbit, t);
  const double r = p.norm();
  return {std::asin(p.z / r) / kDeg, std::atan2(p.y, p.x) / kDeg, r - kEarthRadiusKm};
}

LookAngles look_angles(const OrbitSpec& orbit, const GroundStation& station, Timestamp t) {
  if (t < orbit.epoch) {
    throw DomainError("look_angles: time precedes the epoch of orbit " + orbit.id);
  }
  return look_from(station_ecef(station), satellite_ecef(orbit, t));
}

std::vector<PassWindow> pass_windows(const OrbitSpec& orbit, const GroundStation& station,
                                     TimeSpan span, double step_s) {
  orbit.validate();
  station.validate();
  if (!(step_s > 0.0)) throw DomainError("pass_windows: step must be > 0 s");
  if (span.start < orbit.epoch) {
    throw DomainError("pass_windows: span starts before the epoch of orbit " + orbit.id);
  }
  const Vec3 st = station_ecef(station);
  auto visible = [&](Timestamp t) {
    return look_from(st, satellite_ecef(orbit, t)).elevation_deg >= station.min_elevation_deg;
  };
  std::vector<PassWindow> out;
  for (const TimeSpan& s : intervals_where(visible, span, step_s)) {
    PassWindow w;
    w.station_id = station.id;
    w.start = s.start;
    w.end = s.end;
    summarize(w, orbit, station);
    out.push_back(std::move(w));
  }
  return out;
}

bool is_night(const GroundStation& station, Timestamp t) {
  if (const auto* f = std::get_if<FixedLocalHours>(&station.night)) {
    if (f->start_hour == f->end_hour) return false;
    const double h = local_hour(*f, station, t);
    return f->start_hour < f->end_hour ? (h >= f->start_hour && h < f->end_hour)
                                       : (h >= f->start_hour || h < f->end_hour);
  }
  const auto& solar = std::get<SolarElevationThreshold>(station.night);
  return solar_elevation_deg(t, station.latitude_deg, station.longitude_deg) <
         solar.threshold_deg;
}

std::vector<TimeSpan> night_intervals(const GroundStation& station, TimeSpan span) {
  if (const auto* f = std::get_if<FixedLocalHours>(&station.night)) {
    return fixed_hours_nights(*f, station, span);
  }
  return intervals_where([&](Timestamp t) { return is_night(station, t); }, span,
                         kNightSampleStepS);
}

std::vector<PassWindow> night_filter(std::span<const PassWindow> windows,
                                     const GroundStation& station) {
  return clip_to_nights(windows, station, nullptr);
}

std::vector<PassWindow> night_filter(std::span<const PassWindow> windows,
                                     const GroundStation& station, const OrbitSpec& orbit) {
  return clip_to_nights(windows, station, &orbit);
}

std::vector<PassWindow> simultaneous_windows(const OrbitSpec& orbit, const GroundStation& station_a,
                                             const GroundStation& station_b, TimeSpan span,
                                             double step_s, bool include_day) {
  auto spans_of = [&](const GroundStation& s) {
    std::vector<PassWindow> w = pass_windows(orbit, s, span, step_s);
    if (!include_day) w = night_filter(w, s);
    std::vector<TimeSpan> out;
    out.reserve(w.size());
    for (const auto& p : w) out.push_back({p.start, p.end});
    return out;
  };
  const std::vector<TimeSpan> a = spans_of(station_a);
  const std::vector<TimeSpan> b = spans_of(station_b);

  std::vector<PassWindow> out;
  for (const TimeSpan& s : intersect(a, b)) {
    PassWindow w;
    w.station_id = station_a.id;
    w.peer_station_id = station_b.id;
    w.start = s.start;
    w.end = s.end;
    summarize_pair(w, orbit, station_a, station_b);
    out.push_back(std::move(w));
  }
  return out;
}

std::vector<PassWindow> sequential_contact_plan(const OrbitSpec& orbit,
                                                std::span<const GroundStation> stations,
                                                TimeSpan span, double step_s, bool include_day) {
  std::vector<PassWindow> plan;
  for (const auto& station : stations) {
    std::vector<PassWindow> w = pass_windows(orbit, station, span, step_s);
    if (!include_day) w = night_filter(w, station, orbit);
    plan.insert(plan.end(), w.begin(), w.end());
  }
  std::stable_sort(plan.begin(), plan.end(),
                   [](const PassWindow& x, const PassWindow& y) { return x.start < y.start; });
  return plan;
}

}  // namespace qkdnet::geo
