#pragma once

// Technology selection and relay placement for point-to-point key demands.

#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qkdnet/link_models.hpp"
#include "qkdnet/relay_protocol.hpp"

namespace qkdnet::plan {

// Declaration order is the tie-break order used when scores are equal.
enum class TechnologyKind {
  FiberDirect,
  FreeSpaceTerrestrial,
  FiberTrustedRelay,
  SatelliteTrustedRelay,
  SatelliteUntrusted,
};

inline constexpr TechnologyKind kAllTechnologies[] = {
    TechnologyKind::FiberDirect, TechnologyKind::FreeSpaceTerrestrial,
    TechnologyKind::FiberTrustedRelay, TechnologyKind::SatelliteTrustedRelay,
    TechnologyKind::SatelliteUntrusted};

std::string_view to_string(TechnologyKind kind) noexcept;
std::optional<TechnologyKind> technology_from_string(std::string_view name) noexcept;

enum class Topology { P2P, P2MP };
enum class LineOfSight { None, Required, SimultaneousBoth };
enum class TimeWindow { WholeDay, Night, NightBurst };

struct TechnologyAttributes {
  Topology topology;
  LineOfSight line_of_sight;
  TimeWindow time_window;
  int cost_tier;  // ordinal, 1 = cheapest
  bool satellite;
};

const TechnologyAttributes& attributes(TechnologyKind kind) noexcept;

enum class Segment { Access, Metro, LongHaul, Intercontinental };

std::string_view to_string(Segment s) noexcept;

/// <100 Access, [100, 1000) Metro, [1000, 5000) LongHaul, >=5000
/// Intercontinental. Throws DomainError for distance <= 0.
Segment classify_segment(double distance_km);

struct Demand {
  std::string id;
  std::string a;
  std::string b;
  double distance_km = 0.0;
  // Fiber route length when it differs from the end-point distance.
  std::optional<double> route_km;
  bool has_fiber = false;
  bool has_los = false;
  bool transoceanic = false;
  bool untrusted_required = false;
  // Externally fixed relay layout along the fiber route (km from `a`), and
  // optional site ids for those relays.
  std::optional<std::vector<double>> relay_offsets_km;
  std::vector<std::string> relay_ids;
  std::optional<std::string> orbit_id;

  double fiber_route_km() const noexcept { return route_km.value_or(distance_km); }
  void validate() const;
  bool operator==(const Demand&) const = default;
};

struct ObjectiveWeights {
  double rate = 1.0;
  double cost = 0.5;

  bool operator==(const ObjectiveWeights&) const = default;
};

struct PlannerParams {
  link::FiberParams fiber;
  link::FreeSpaceParams freespace;
  link::SatLinkParams satellite;
  double source_rate_hz = 1e9;
  double sifting_factor = link::kDefaultSiftingFactor;
  double fiber_direct_max_km = 100.0;
  double freespace_max_km = 10.0;
  double max_span_km = 100.0;
  double untrusted_max_separation_km = 1000.0;
  // Elevation at which satellite arms are budgeted (90 = overhead).
  double satellite_reference_elevation_deg = 90.0;
  std::string default_orbit_id;
  ObjectiveWeights weights;

  void validate() const;
  bool operator==(const PlannerParams&) const = default;
};

std::set<TechnologyKind> eligible_technologies(const Demand& demand,
                                               const PlannerParams& params = {});

/// n = ceil(route / max_span) - 1 relays at even spacing (offsets from the
/// route start). Throws DomainError for non-positive inputs.
std::vector<double> place_relays(double route_length_km, double max_span_km = 100.0);

struct RelayLayoutCheck {
  bool feasible = false;
  std::vector<double> spans_km;
  double longest_span_km = 0.0;
  std::string problem;
};

/// Checks a supplied layout: offsets strictly increasing inside the route and
/// every span <= max_span.
RelayLayoutCheck validate_relays(double route_length_km, std::span<const double> offsets_km,
                                 double max_span_km = 100.0);

/// Budget of one ground-satellite arm at `range_km`, in the configured
/// direction.
link::LinkBudget satellite_arm(double range_km, const link::SatLinkParams& sat);

/// Downlink pairs share entangled photons; uplink pairs meet at a measuring
/// satellite.
relay::RelayKind untrusted_kind(const link::SatLinkParams& sat);

struct NamedBudget {
  std::string label;
  link::LinkBudget budget;

  bool operator==(const NamedBudget&) const = default;
};

/// Link budgets and the resulting end-to-end rate of one technology for one
/// demand.
struct TechnologyEstimate {
  TechnologyKind kind = TechnologyKind::FiberDirect;
  double key_rate_bps = 0.0;
  std::vector<NamedBudget> budgets;
  // Rate of each key-generating link: one per span or satellite arm, a
  // single entry for direct and untrusted links.
  std::vector<double> link_rates_bps;
  std::vector<double> relay_offsets_km;
  // Empty when the technology can serve the demand.
  std::string blocked;

  bool operator==(const TechnologyEstimate&) const = default;
};

TechnologyEstimate estimate(const Demand& demand, TechnologyKind kind,
                            const PlannerParams& params = {});

struct RankedTechnology {
  TechnologyKind kind = TechnologyKind::FiberDirect;
  double score = 0.0;
  double key_rate_bps = 0.0;

  bool operator==(const RankedTechnology&) const = default;
};

/// Orders the eligible, unblocked technologies by descending
/// w_rate * log10(rate) - w_cost * tier. Equal scores keep declaration order.
/// Throws DomainError when an eligible technology has no estimate.
std::vector<RankedTechnology> rank_technologies(const Demand& demand,
                                                std::span<const TechnologyEstimate> estimates,
                                                const PlannerParams& params = {});

struct PlannedDemand {
  Demand demand;
  Segment segment = Segment::Access;
  TechnologyKind technology = TechnologyKind::FiberDirect;
  std::vector<double> relay_offsets_km;
  std::vector<std::string> relay_ids;
  std::string orbit_id;
  // Kind of the interior relays (fiber relays or the satellite), if any.
  relay::RelayKind relay_kind = relay::RelayKind::TrustedNode;
  double key_rate_bps = 0.0;
  std::vector<NamedBudget> budgets;
  std::vector<double> link_rates_bps;
  std::vector<RankedTechnology> ranking;

  bool operator==(const PlannedDemand&) const = default;
};

struct InfeasibleDemand {
  std::string demand_id;
  std::string reason;

  bool operator==(const InfeasibleDemand&) const = default;
};

struct DeploymentPlan {
  std::vector<PlannedDemand> entries;
  std::vector<InfeasibleDemand> infeasible;

  bool all_feasible() const noexcept { return infeasible.empty(); }
  bool operator==(const DeploymentPlan&) const = default;
};

/// Plans every demand independently, in input order.
DeploymentPlan select_deployment(std::span<const Demand> demands, const PlannerParams& params = {});

/// Route of each planned demand's end-to-end key, for compromise analysis.
std::vector<relay::RelayPath> relay_paths(const DeploymentPlan& plan);

}  // namespace qkdnet::plan
