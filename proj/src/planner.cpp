#include "qkdnet/planner.hpp"

#include <algorithm>
#include <cmath>

#include "qkdnet/errors.hpp"
#include "qkdnet/satellite_geometry.hpp"

namespace qkdnet::plan {

namespace {

constexpr TechnologyAttributes kAttributes[] = {
    // FiberDirect
    {Topology::P2MP, LineOfSight::None, TimeWindow::WholeDay, 1, false},
    // FreeSpaceTerrestrial
    {Topology::P2MP, LineOfSight::Required, TimeWindow::Night, 1, false},
    // FiberTrustedRelay
    {Topology::P2MP, LineOfSight::None, TimeWindow::WholeDay, 2, false},
    // SatelliteTrustedRelay
    {Topology::P2P, LineOfSight::Required, TimeWindow::NightBurst, 3, true},
    // SatelliteUntrusted
    {Topology::P2P, LineOfSight::SimultaneousBoth, TimeWindow::NightBurst, 4, true},
};

bool positive(double v) { return std::isfinite(v) && v > 0.0; }

std::string orbit_for(const Demand& d, const PlannerParams& p) {
  if (d.orbit_id) return *d.orbit_id;
  if (!p.default_orbit_id.empty()) return p.default_orbit_id;
  return d.id + "/sat";
}

std::string span_label(std::size_t i) { return "span " + std::to_string(i + 1); }

}  // namespace

link::LinkBudget satellite_arm(double range_km, const link::SatLinkParams& sat) {
  return sat.direction == link::Direction::Downlink ? link::downlink_loss(range_km, sat)
                                                    : link::uplink_loss(range_km, sat);
}

// Downlink pairs share entangled photons; uplink pairs meet at a measuring
// satellite.
relay::RelayKind untrusted_kind(const link::SatLinkParams& sat) {
  return sat.direction == link::Direction::Downlink ? relay::RelayKind::UntrustedEntanglementSatellite
                                                    : relay::RelayKind::UntrustedMdiSatellite;
}

std::string_view to_string(TechnologyKind kind) noexcept {
  switch (kind) {
    case TechnologyKind::FiberDirect:
      return "fiber_direct";
    case TechnologyKind::FreeSpaceTerrestrial:
      return "free_space_terrestrial";
    case TechnologyKind::FiberTrustedRelay:
      return "fiber_trusted_relay";
    case TechnologyKind::SatelliteTrustedRelay:
      return "satellite_trusted_relay";
    case TechnologyKind::SatelliteUntrusted:
      return "satellite_untrusted";
  }
  return "unknown";
}

std::optional<TechnologyKind> technology_from_string(std::string_view name) noexcept {
  for (TechnologyKind k : kAllTechnologies) {
    if (to_string(k) == name) return k;
  }
  return std::nullopt;
}

const TechnologyAttributes& attributes(TechnologyKind kind) noexcept {
  return kAttributes[static_cast<int>(kind)];
}

std::string_view to_string(Segment s) noexcept {
  switch (s) {
    case Segment::Access:
      return "access";
    case Segment::Metro:
      return "metro";
    case Segment::LongHaul:
      return "long_haul";
    case Segment::Intercontinental:
      return "intercontinental";
  }
  return "unknown";
}

Segment classify_segment(double distance_km) {
  if (!positive(distance_km)) throw DomainError("classify_segment: distance must be > 0 km");
  if (distance_km < 100.0) return Segment::Access;
  if (distance_km < 1000.0) return Segment::Metro;
  if (distance_km < 5000.0) return Segment::LongHaul;
  return Segment::Intercontinental;
}

void Demand::validate() const {
  if (!positive(distance_km)) throw DomainError("demand " + id + ": distance_km must be > 0");
  if (route_km && *route_km < distance_km) {
    throw DomainError("demand " + id + ": route_km is shorter than the end-point distance");
  }
  if (relay_offsets_km && !relay_ids.empty() && relay_ids.size() != relay_offsets_km->size()) {
    throw DomainError("demand " + id + ": relay_ids and relay offsets differ in length");
  }
}

void PlannerParams::validate() const {
  fiber.validate();
  freespace.validate();
  satellite.validate();
  if (!positive(source_rate_hz)) throw DomainError("source_rate_hz must be > 0");
  if (!(sifting_factor > 0.0 && sifting_factor <= 1.0)) {
    throw DomainError("sifting_factor must be in (0, 1]");
  }
  for (double v : {fiber_direct_max_km, freespace_max_km, max_span_km, untrusted_max_separation_km}) {
    if (!positive(v)) throw DomainError("distance limits must be > 0 km");
  }
  if (!(satellite_reference_elevation_deg > 0.0 && satellite_reference_elevation_deg <= 90.0)) {
    throw DomainError("satellite_reference_elevation_deg must be in (0, 90]");
  }
  if (!(weights.rate >= 0.0 && weights.cost >= 0.0)) {
    throw DomainError("objective weights must be >= 0");
  }
}

std::set<TechnologyKind> eligible_technologies(const Demand& demand, const PlannerParams& params) {
  const double d = demand.distance_km;
  std::set<TechnologyKind> out;
  if (demand.has_fiber && d <= params.fiber_direct_max_km) out.insert(TechnologyKind::FiberDirect);
  if (demand.has_los && d <= params.freespace_max_km) {
    out.insert(TechnologyKind::FreeSpaceTerrestrial);
  }
  if (demand.has_fiber && !demand.transoceanic) out.insert(TechnologyKind::FiberTrustedRelay);
  out.insert(TechnologyKind::SatelliteTrustedRelay);
  if (d <= params.untrusted_max_separation_km) out.insert(TechnologyKind::SatelliteUntrusted);

  if (demand.untrusted_required) {
    std::erase_if(out, [](TechnologyKind k) { return k != TechnologyKind::SatelliteUntrusted; });
  }
  return out;
}

std::vector<double> place_relays(double route_length_km, double max_span_km) {
  if (!positive(route_length_km) || !positive(max_span_km)) {
    throw DomainError("place_relays: route length and span limit must be > 0 km");
  }
  const auto spans = static_cast<std::size_t>(std::ceil(route_length_km / max_span_km));
  std::vector<double> offsets;
  offsets.reserve(spans - 1);
  for (std::size_t i = 1; i < spans; ++i) {
    offsets.push_back(route_length_km * static_cast<double>(i) / static_cast<double>(spans));
  }
  return offsets;
}

RelayLayoutCheck validate_relays(double route_length_km, std::span<const double> offsets_km,
                                 double max_span_km) {
  if (!positive(route_length_km) || !positive(max_span_km)) {
    throw DomainError("validate_relays: route length and span limit must be > 0 km");
  }
  RelayLayoutCheck check;
  double prev = 0.0;
  for (std::size_t i = 0; i <= offsets_km.size(); ++i) {
    const double next = i < offsets_km.size() ? offsets_km[i] : route_length_km;
    if (!(next > prev) || (i < offsets_km.size() && !(next < route_length_km))) {
      check.problem = "relay offsets must increase strictly inside (0, route length)";
      return check;
    }
    check.spans_km.push_back(next - prev);
    check.longest_span_km = std::max(check.longest_span_km, next - prev);
    prev = next;
  }
  check.feasible = check.longest_span_km <= max_span_km;
  if (!check.feasible) {
    check.problem = "a span of " + std::to_string(check.longest_span_km) + " km exceeds the " +
                    std::to_string(max_span_km) + " km limit";
  }
  return check;
}

TechnologyEstimate estimate(const Demand& demand, TechnologyKind kind, const PlannerParams& params) {
  demand.validate();
  params.validate();
  TechnologyEstimate e;
  e.kind = kind;
  auto rate_of = [&](double loss_db) {
    return link::key_rate_estimate(params.source_rate_hz, loss_db, params.sifting_factor);
  };

  switch (kind) {
    case TechnologyKind::FiberDirect: {
      auto b = link::fiber_loss(demand.fiber_route_km(), params.fiber);
      e.key_rate_bps = rate_of(b.total_db());
      e.link_rates_bps = {e.key_rate_bps};
      e.budgets.push_back({"fiber", std::move(b)});
      break;
    }
    case TechnologyKind::FreeSpaceTerrestrial: {
      auto b = link::terrestrial_freespace_loss(demand.distance_km, params.freespace);
      e.key_rate_bps = rate_of(b.total_db());
      e.link_rates_bps = {e.key_rate_bps};
      e.budgets.push_back({"free_space", std::move(b)});
      break;
    }
    case TechnologyKind::FiberTrustedRelay: {
      const double route = demand.fiber_route_km();
      if (demand.relay_offsets_km) {
        const RelayLayoutCheck check =
            validate_relays(route, *demand.relay_offsets_km, params.max_span_km);
        if (!check.feasible) {
          e.blocked = "supplied relay layout: " + check.problem;
          break;
        }
        e.relay_offsets_km = *demand.relay_offsets_km;
      } else {
        e.relay_offsets_km = place_relays(route, params.max_span_km);
      }
      const RelayLayoutCheck spans = validate_relays(route, e.relay_offsets_km, params.max_span_km);
      // The chain delivers end-to-end key no faster than its slowest span.
      double worst = 0.0;
      for (std::size_t i = 0; i < spans.spans_km.size(); ++i) {
        auto b = link::fiber_loss(spans.spans_km[i], params.fiber);
        worst = std::max(worst, b.total_db());
        e.link_rates_bps.push_back(rate_of(b.total_db()));
        e.budgets.push_back({span_label(i), std::move(b)});
      }
      e.key_rate_bps = rate_of(worst);
      break;
    }
    case TechnologyKind::SatelliteTrustedRelay: {
      const double range = geo::slant_range(params.satellite.altitude_km,
                                            params.satellite_reference_elevation_deg);
      auto arm_a = satellite_arm(range, params.satellite);
      auto arm_b = satellite_arm(range, params.satellite);
      e.key_rate_bps = rate_of(std::max(arm_a.total_db(), arm_b.total_db()));
      e.link_rates_bps = {rate_of(arm_a.total_db()), rate_of(arm_b.total_db())};
      e.budgets.push_back({demand.a + " arm", std::move(arm_a)});
      e.budgets.push_back({demand.b + " arm", std::move(arm_b)});
      break;
    }
    case TechnologyKind::SatelliteUntrusted: {
      const double half = demand.distance_km / 2.0;
      const double alt = params.satellite.altitude_km;
      if (geo::elevation_at_ground_distance(alt, half) < 0.0) {
        e.blocked = "end points cannot both see the satellite";
        break;
      }
      const double range = geo::slant_range_at_ground_distance(alt, half);
      auto arm_a = satellite_arm(range, params.satellite);
      auto arm_b = satellite_arm(range, params.satellite);
      e.key_rate_bps = relay::untrusted_establish(arm_a, arm_b, untrusted_kind(params.satellite),
                                                  params.source_rate_hz,
                                                  params.sifting_factor)
                           .rate_bps;
      e.link_rates_bps = {e.key_rate_bps};
      e.budgets.push_back({demand.a + " arm", std::move(arm_a)});
      e.budgets.push_back({demand.b + " arm", std::move(arm_b)});
      break;
    }
  }
  return e;
}

std::vector<RankedTechnology> rank_technologies(const Demand& demand,
                                                std::span<const TechnologyEstimate> estimates,
                                                const PlannerParams& params) {
  std::vector<RankedTechnology> out;
  for (TechnologyKind kind : eligible_technologies(demand, params)) {
    const auto it = std::find_if(estimates.begin(), estimates.end(),
                                 [&](const TechnologyEstimate& e) { return e.kind == kind; });
    if (it == estimates.end()) {
      throw DomainError("rank_technologies: no estimate for " + std::string(to_string(kind)));
    }
    if (!it->blocked.empty() || !(it->key_rate_bps > 0.0)) continue;
    const double score = params.weights.rate * std::log10(it->key_rate_bps) -
                         params.weights.cost * attributes(kind).cost_tier;
    out.push_back({kind, score, it->key_rate_bps});
  }
  // std::set iterates in declaration order, so a stable sort keeps the
  // default ordering among equal scores.
  std::stable_sort(out.begin(), out.end(), [](const RankedTechnology& x, const RankedTechnology& y) {
    return x.score > y.score;
  });
  return out;
}

DeploymentPlan select_deployment(std::span<const Demand> demands, const PlannerParams& params) {
  params.validate();
  DeploymentPlan plan;
  for (const Demand& d : demands) {
    d.validate();
    std::vector<TechnologyEstimate> estimates;
    std::string blocked_reasons;
    for (TechnologyKind k : eligible_technologies(d, params)) {
      estimates.push_back(estimate(d, k, params));
      if (!estimates.back().blocked.empty()) {
        blocked_reasons += "; " + std::string(to_string(k)) + ": " + estimates.back().blocked;
      }
    }
    const std::vector<RankedTechnology> ranking = rank_technologies(d, estimates, params);
    if (ranking.empty()) {
      std::string reason = estimates.empty() ? "no eligible technology" : "no usable technology";
      if (d.untrusted_required && d.distance_km > params.untrusted_max_separation_km) {
        reason += " (untrusted relaying limited to " +
                  std::to_string(static_cast<long>(params.untrusted_max_separation_km)) + " km)";
      }
      plan.infeasible.push_back({d.id, reason + blocked_reasons});
      continue;
    }

    const TechnologyEstimate& best = *std::find_if(
        estimates.begin(), estimates.end(),
        [&](const TechnologyEstimate& e) { return e.kind == ranking.front().kind; });
    PlannedDemand p;
    p.demand = d;
    p.segment = classify_segment(d.distance_km);
    p.technology = best.kind;
    p.relay_offsets_km = best.relay_offsets_km;
    if (best.kind == TechnologyKind::FiberTrustedRelay) {
      const bool named = d.relay_offsets_km && !d.relay_ids.empty();
      for (std::size_t i = 0; i < p.relay_offsets_km.size(); ++i) {
        p.relay_ids.push_back(named ? d.relay_ids[i] : d.id + "/r" + std::to_string(i + 1));
      }
    }
    if (attributes(best.kind).satellite) p.orbit_id = orbit_for(d, params);
    if (best.kind == TechnologyKind::SatelliteTrustedRelay) {
      p.relay_kind = relay::RelayKind::TrustedSatellite;
    } else if (best.kind == TechnologyKind::SatelliteUntrusted) {
      p.relay_kind = untrusted_kind(params.satellite);
    }
    p.key_rate_bps = best.key_rate_bps;
    p.budgets = best.budgets;
    p.link_rates_bps = best.link_rates_bps;
    p.ranking = ranking;
    plan.entries.push_back(std::move(p));
  }
  return plan;
}

std::vector<relay::RelayPath> relay_paths(const DeploymentPlan& plan) {
  std::vector<relay::RelayPath> out;
  for (const PlannedDemand& p : plan.entries) {
    relay::RelayPath path{p.demand.a, p.demand.b, {}};
    switch (p.technology) {
      case TechnologyKind::FiberTrustedRelay:
        for (const auto& id : p.relay_ids) path.interior.push_back({id, p.relay_kind});
        break;
      case TechnologyKind::SatelliteTrustedRelay:
        path.interior.push_back({p.orbit_id, p.relay_kind});
        break;
      case TechnologyKind::SatelliteUntrusted:
        path.interior.push_back({p.orbit_id, p.relay_kind});
        break;
      default:
        break;
    }
    out.push_back(std::move(path));
  }
  return out;
}

}  // namespace qkdnet::plan
