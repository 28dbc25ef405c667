#pragma once

// Circular-orbit satellite geometry over a spherical, uniformly rotating
// Earth: slant ranges, visibility, pass windows and night gating.

#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "qkdnet/time.hpp"

namespace qkdnet::geo {

inline constexpr double kEarthRadiusKm = 6371.0;
inline constexpr double kMuEarthKm3PerS2 = 398600.4418;
inline constexpr double kSiderealDayS = 86164.0905;
inline constexpr double kDefaultPassStepS = 10.0;
inline constexpr double kBoundaryToleranceS = 1.0;

struct SolarElevationThreshold {
  double threshold_deg = -6.0;

  bool operator==(const SolarElevationThreshold&) const = default;
};

/// Night between two local clock hours, e.g. 20 -> 6. Local time is UTC plus
/// `utc_offset_hours`, or mean solar time (longitude / 15) when unset.
struct FixedLocalHours {
  double start_hour = 20.0;
  double end_hour = 6.0;
  std::optional<double> utc_offset_hours;

  bool operator==(const FixedLocalHours&) const = default;
};

using NightMode = std::variant<SolarElevationThreshold, FixedLocalHours>;

struct GroundStation {
  std::string id;
  double latitude_deg = 0.0;
  double longitude_deg = 0.0;
  double min_elevation_deg = 10.0;
  NightMode night = SolarElevationThreshold{};

  void validate() const;
  bool operator==(const GroundStation&) const = default;
};

struct OrbitSpec {
  std::string id;
  double altitude_km = 500.0;
  double inclination_deg = 0.0;
  double raan_deg = 0.0;
  // Argument of latitude at the epoch.
  double initial_phase_deg = 0.0;
  Timestamp epoch;

  void validate() const;
  bool operator==(const OrbitSpec&) const = default;
};

struct TimeSpan {
  Timestamp start;
  Timestamp end;

  double duration_s() const noexcept { return end - start; }
  bool operator==(const TimeSpan&) const = default;
};

struct PassWindow {
  std::string station_id;
  // Set for simultaneous (two-station) windows.
  std::string peer_station_id;
  Timestamp start;
  Timestamp end;
  double max_elevation_deg = 0.0;
  double min_slant_range_km = 0.0;

  double duration_s() const noexcept { return end - start; }
  bool operator==(const PassWindow&) const = default;
};

struct SubSatellitePoint {
  double latitude_deg = 0.0;
  double longitude_deg = 0.0;
  double altitude_km = 0.0;
};

struct LookAngles {
  double elevation_deg = 0.0;
  double range_km = 0.0;
};

/// Line-of-sight distance to a satellite at `altitude_km` seen at the given
/// elevation. Throws DomainError for elevations outside [0, 90].
double slant_range(double altitude_km, double elevation_deg);

/// Earth-central angle (rad) between a station and the sub-satellite point
/// when the satellite sits at the given elevation.
double central_angle_rad(double altitude_km, double elevation_deg);

/// Largest ground distance between two stations that can both see one
/// satellite above `min_elevation_deg` at the same time.
double max_simultaneous_separation(double altitude_km, double min_elevation_deg);

/// Slant range from a station to a satellite whose sub-satellite point is
/// `ground_distance_km` away along the surface.
double slant_range_at_ground_distance(double altitude_km, double ground_distance_km);

/// Elevation of that same satellite (may be negative below the horizon).
double elevation_at_ground_distance(double altitude_km, double ground_distance_km);

double orbital_period_s(double altitude_km);

/// Altitude whose circular period equals the model's sidereal day.
double geostationary_altitude_km();

/// Great-circle distance on the model sphere.
double great_circle_km(double lat1_deg, double lon1_deg, double lat2_deg, double lon2_deg);

/// Sub-satellite point. Throws DomainError for t before the orbit epoch.
SubSatellitePoint propagate(const OrbitSpec& orbit, Timestamp t);

LookAngles look_angles(const OrbitSpec& orbit, const GroundStation& station, Timestamp t);

/// Visibility windows (elevation >= station minimum), sampled every `step_s`
/// with boundaries refined by bisection to 1 s. Refined endpoints always lie
/// on the visible side. Windows are ordered and disjoint.
std::vector<PassWindow> pass_windows(const OrbitSpec& orbit, const GroundStation& station,
                                     TimeSpan span, double step_s = kDefaultPassStepS);

/// Night intervals of a station within `span`, ordered and disjoint.
std::vector<TimeSpan> night_intervals(const GroundStation& station, TimeSpan span);

bool is_night(const GroundStation& station, Timestamp t);

/// Clips windows to the station's nights, splitting where needed. Statistics
/// of clipped windows are inherited from their parent pass.
std::vector<PassWindow> night_filter(std::span<const PassWindow> windows,
                                     const GroundStation& station);

/// As above, but recomputes elevation/range statistics of every clipped
/// window against `orbit`.
std::vector<PassWindow> night_filter(std::span<const PassWindow> windows,
                                     const GroundStation& station, const OrbitSpec& orbit);

/// Intervals in which both stations see the satellite (and, unless
/// `include_day`, both are in night). Statistics describe the weaker arm.
std::vector<PassWindow> simultaneous_windows(const OrbitSpec& orbit, const GroundStation& station_a,
                                             const GroundStation& station_b, TimeSpan span,
                                             double step_s = kDefaultPassStepS,
                                             bool include_day = false);

/// Night-filtered passes of all stations merged by start time (ties by
/// station order), i.e. the order in which a trusted-relay satellite can
/// exchange keys with them.
std::vector<PassWindow> sequential_contact_plan(const OrbitSpec& orbit,
                                                std::span<const GroundStation> stations,
                                                TimeSpan span, double step_s = kDefaultPassStepS,
                                                bool include_day = false);

// Low-precision solar position.
double solar_elevation_deg(Timestamp t, double latitude_deg, double longitude_deg);
double solar_declination_deg(Timestamp t);
/// Earth rotation angle of the model (rad, in [0, 2pi)).
double earth_rotation_angle_rad(Timestamp t);

}  // namespace qkdnet::geo
