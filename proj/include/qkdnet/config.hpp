#pragma once

// Scenario configuration: sites, fiber routes, orbits, demands, model
// parameters and simulation settings. JSON with unit-suffixed keys; unknown
// keys are rejected.

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "qkdnet/keysim.hpp"
#include "qkdnet/planner.hpp"
#include "qkdnet/satellite_geometry.hpp"

namespace qkdnet::config {

inline constexpr int kConfigSchemaVersion = 1;

enum class SiteRole { GroundStation, SecureSite, Relay };

std::string_view to_string(SiteRole role) noexcept;

struct Site {
  std::string id;
  SiteRole role = SiteRole::GroundStation;
  double latitude_deg = 0.0;
  double longitude_deg = 0.0;
  double min_elevation_deg = 10.0;
  geo::NightMode night = geo::SolarElevationThreshold{};

  geo::GroundStation station() const;
  bool operator==(const Site&) const = default;
};

struct FiberRoute {
  std::string id;
  std::string a;
  std::string b;
  double length_km = 0.0;

  bool operator==(const FiberRoute&) const = default;
};

/// Bare link for budget comparisons across technologies.
struct BudgetLink {
  std::string id;
  double length_km = 0.0;

  bool operator==(const BudgetLink&) const = default;
};

struct RelaySite {
  std::string site;
  double offset_km = 0.0;

  bool operator==(const RelaySite&) const = default;
};

struct DemandConfig {
  std::string id;
  std::string a;
  std::string b;
  // Great-circle distance between the sites when unset.
  std::optional<double> distance_km;
  std::optional<std::string> fiber_route;
  bool line_of_sight = false;
  bool transoceanic = false;
  bool untrusted_required = false;
  std::vector<RelaySite> relays;
  std::optional<std::string> orbit;

  bool operator==(const DemandConfig&) const = default;
};

struct SimulationConfig {
  Timestamp start{1735689600.0};  // 2025-01-01T00:00:00Z
  double duration_s = 86400.0;
  double tick_s = 1.0;
  double sample_interval_s = 60.0;
  std::uint64_t seed = 0;
  bool stochastic = false;
  std::uint64_t relay_block_bits = 256;
  double pass_step_s = geo::kDefaultPassStepS;
  bool include_day = false;
  // Gate free-space links to the nights of their end point a.
  bool night_gate_free_space = false;
  sim::TrafficModel traffic;
  std::vector<sim::CompromiseScenario> compromise_scenarios;

  sim::SimSettings settings() const;
  bool operator==(const SimulationConfig&) const = default;
};

struct ScenarioConfig {
  int schema_version = kConfigSchemaVersion;
  std::string name;
  std::string description;
  std::vector<Site> sites;
  std::vector<FiberRoute> fiber_routes;
  std::vector<BudgetLink> links;
  std::vector<geo::OrbitSpec> orbits;
  std::vector<DemandConfig> demands;
  plan::PlannerParams parameters;
  SimulationConfig simulation;

  const Site* find_site(std::string_view id) const noexcept;
  const FiberRoute* find_route(std::string_view id) const noexcept;
  const BudgetLink* find_link(std::string_view id) const noexcept;
  const geo::OrbitSpec* find_orbit(std::string_view id) const noexcept;
  const DemandConfig* find_demand(std::string_view id) const noexcept;

  /// Cross-references and value ranges. Throws ConfigError naming the field.
  void validate() const;

  /// Demands resolved for the planner, in input order.
  std::vector<plan::Demand> planner_demands() const;

  bool operator==(const ScenarioConfig&) const = default;
};

/// Parses and validates. Throws ConfigError with "<source>:line:col" for
/// malformed JSON and a field path for everything else.
ScenarioConfig parse_config(std::string_view text, const std::string& source = "config");
ScenarioConfig load_config(const std::filesystem::path& path);

/// Canonical JSON text; parse_config(serialize_config(c)) == c.
std::string serialize_config(const ScenarioConfig& config);

/// Reads a whole file; throws ConfigError when it cannot be opened.
std::string read_file(const std::filesystem::path& path);

}  // namespace qkdnet::config
