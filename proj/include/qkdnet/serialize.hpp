#pragma once

// JSON and CSV forms of budgets, plans, pass windows, contact plans, relay
// routes and simulation reports. JSON documents carry a top-level
// schema_version; object keys keep a fixed order so output is byte-stable.

#include <set>
#include <span>
#include <string>
#include <string_view>

#include "json.hpp"
#include "qkdnet/keysim.hpp"
#include "qkdnet/link_models.hpp"
#include "qkdnet/planner.hpp"
#include "qkdnet/relay_protocol.hpp"
#include "qkdnet/satellite_geometry.hpp"

namespace qkdnet::io {

using Json = nlohmann::ordered_json;

inline constexpr int kSchemaVersion = 1;

/// Two-space indented text with a trailing newline.
std::string dump(const Json& j);

/// Shortest text that reads back to the same double.
std::string format_number(double v);

// {components: [[label, db]...], total_db, transmittance}
Json budget_to_json(const link::LinkBudget& budget);
link::LinkBudget budget_from_json(const Json& j, const std::string& path = "budget");

Json plan_to_json(const plan::DeploymentPlan& plan);
plan::DeploymentPlan plan_from_json(const Json& j);
plan::DeploymentPlan parse_plan(std::string_view text, const std::string& source = "plan");
// One row per planned or infeasible demand.
std::string plan_csv(const plan::DeploymentPlan& plan);

Json passes_to_json(std::span<const geo::PassWindow> windows);
std::string passes_csv(std::span<const geo::PassWindow> windows);

Json contacts_to_json(const sim::ContactPlans& contacts);
sim::ContactPlans contacts_from_json(const Json& j);
sim::ContactPlans parse_contacts(std::string_view text, const std::string& source = "contacts");

Json relay_paths_to_json(std::span<const relay::RelayPath> paths);
std::vector<relay::RelayPath> relay_paths_from_json(const Json& j);
// [[a, b], ...]
Json leaked_pairs_to_json(const std::set<relay::NodePair>& pairs);

Json report_to_json(const sim::SimReport& report);
sim::SimReport report_from_json(const Json& j);
// time_s column followed by one "<pool>_bits" column per pool.
std::string timeseries_csv(const sim::SimReport& report);
std::string outages_csv(const sim::SimReport& report);

}  // namespace qkdnet::io
