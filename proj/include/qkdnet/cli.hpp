#pragma once

// The qkdnet command line: budget, plan, passes and simulate.

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "qkdnet/config.hpp"
#include "qkdnet/keysim.hpp"
#include "qkdnet/link_models.hpp"
#include "qkdnet/planner.hpp"

namespace qkdnet::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;  // unexpected internal error
inline constexpr int kExitInput = 2;
inline constexpr int kExitInfeasible = 3;

inline constexpr const char* kConfigEnv = "QKDNET_CONFIG";

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

struct BudgetRow {
  std::string technology;  // fiber, free_space, satellite_downlink, satellite_uplink
  double length_km = 0.0;
  link::LinkBudget budget;
  double key_rate_bps = 0.0;
};

/// One row per technology that can span `length_km`. Satellite rows treat the
/// length as slant range and are omitted for zero length.
std::vector<BudgetRow> budget_rows(double length_km, const plan::PlannerParams& params);

/// Activity windows of every windowed link in `plan`: satellite passes from
/// the configured orbits (night-filtered unless `include_day`) and, when the
/// configuration asks for it, nights for free-space links. Per-window rates
/// use the budget at the pass's minimum slant range.
sim::ContactPlans compute_contacts(const config::ScenarioConfig& config,
                                   const plan::DeploymentPlan& plan, bool include_day);

/// Throws ConfigError when a plan entry names a demand the configuration
/// lacks or with different end points.
void check_plan_matches(const config::ScenarioConfig& config, const plan::DeploymentPlan& plan);

/// Writes via a temporary file in the same directory and a rename.
void write_atomic(const std::filesystem::path& path, std::string_view content);

}  // namespace qkdnet::cli
