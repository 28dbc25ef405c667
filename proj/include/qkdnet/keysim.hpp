#pragma once

// Discrete-event simulation of key generation, trusted relaying, pair
// consumption and last-mile dispensing over a deployment plan.

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "qkdnet/planner.hpp"
#include "qkdnet/satellite_geometry.hpp"

namespace qkdnet::sim {

inline constexpr int kReportSchemaVersion = 1;

enum class PoolLevel { Link, EndToEnd, User };

std::string_view to_string(PoolLevel level) noexcept;

/// Use-once key inventory shared by a node pair. Bits move only through
/// credit/debit so generated = consumed + available always holds.
class KeyPool {
 public:
  KeyPool(std::string id, std::string a, std::string b, PoolLevel level);

  const std::string& id() const noexcept { return id_; }
  const std::string& a() const noexcept { return a_; }
  const std::string& b() const noexcept { return b_; }
  PoolLevel level() const noexcept { return level_; }
  std::uint64_t available() const noexcept { return available_; }
  std::uint64_t generated() const noexcept { return generated_; }
  std::uint64_t consumed() const noexcept { return consumed_; }

  void credit(std::uint64_t bits) noexcept;
  /// All or nothing: returns false and leaves the pool untouched when short.
  bool debit(std::uint64_t bits) noexcept;
  bool balanced() const noexcept { return generated_ == consumed_ + available_; }

 private:
  std::string id_;
  std::string a_;
  std::string b_;
  PoolLevel level_;
  std::uint64_t generated_ = 0;
  std::uint64_t consumed_ = 0;
  std::uint64_t available_ = 0;
};

/// Takes `block_bits` from every segment pool and credits one block to
/// `end_to_end`. Nothing moves unless every segment can pay. Throws
/// DomainError for a zero block or an empty chain.
bool relay_consume(std::span<KeyPool* const> segments, KeyPool& end_to_end,
                   std::uint64_t block_bits);

/// Moves `block_bits` from a site pool to a user's balance, all or nothing.
/// Throws DomainError for a zero block.
bool dispense(KeyPool& site, KeyPool& user, std::uint64_t block_bits);

/// Interval in which a windowed link generates key; the rate overrides the
/// link's planned rate when set.
struct ActiveWindow {
  geo::TimeSpan span;
  std::optional<double> rate_bps;

  bool operator==(const ActiveWindow&) const = default;
};

/// One key-generating quantum link of the plan.
struct LinkSpec {
  std::string id;
  std::string demand_id;
  std::string a;
  std::string b;
  double rate_bps = 0.0;
  // Windowed links generate only inside their windows.
  bool windowed = false;
  std::vector<ActiveWindow> windows;
};

/// Links of a plan. Direct links are named after their demand; chains use
/// "<demand>#<i>" numbered from end point a. Satellite links come back
/// windowed with no windows yet.
std::vector<LinkSpec> links_for(const plan::DeploymentPlan& plan);

/// Activity windows keyed by link id. Every windowed link needs an entry
/// (possibly empty); unwindowed links listed here become windowed.
using ContactPlans = std::map<std::string, std::vector<ActiveWindow>>;

struct ScheduledRequest {
  double at_s = 0.0;
  std::uint64_t bits = 0;

  bool operator==(const ScheduledRequest&) const = default;
};

struct PairTraffic {
  std::string demand_id;
  double bits_per_s = 0.0;
  std::vector<ScheduledRequest> requests;

  bool operator==(const PairTraffic&) const = default;
};

/// Mobile users registered to a secure site. The site draws on the
/// end-to-end pool of `demand_id`, of which it must be an end point. User k
/// (0-based) visits the site at k * interval / users, then every interval.
struct SiteTraffic {
  std::string site;
  std::string demand_id;
  std::size_t users = 0;
  std::uint64_t block_bits = 256;
  double user_bits_per_s = 1.0;
  double contact_interval_s = 3600.0;

  bool operator==(const SiteTraffic&) const = default;
};

struct TrafficModel {
  std::vector<PairTraffic> pairs;
  std::vector<SiteTraffic> sites;

  void validate() const;
  bool operator==(const TrafficModel&) const = default;
};

struct CompromiseScenario {
  std::string name;
  std::set<std::string> nodes;

  bool operator==(const CompromiseScenario&) const = default;
};

struct SimSettings {
  Timestamp start;
  double duration_s = 86400.0;
  double tick_s = 1.0;
  double sample_interval_s = 60.0;
  std::uint64_t seed = 0;
  // Poisson draws instead of floored fluid accrual.
  bool stochastic = false;
  std::uint64_t relay_block_bits = 256;
  std::vector<CompromiseScenario> compromise_scenarios;

  void validate() const;
  bool operator==(const SimSettings&) const = default;
};

enum class EventKind {
  GenerationTick,
  PassStart,
  PassEnd,
  ConsumeRequest,
  DispenseRequest,
  RelayAnnounce,
  Sample,
};

std::string_view to_string(EventKind kind) noexcept;

struct SimEvent {
  double t_s = 0.0;  // seconds since the simulation start
  std::uint64_t seq = 0;
  EventKind kind = EventKind::GenerationTick;
  // Link, demand or user the event concerns; empty for ticks and samples.
  std::string subject;
  std::uint64_t bits = 0;
};

struct PoolSummary {
  std::string id;
  std::string a;
  std::string b;
  PoolLevel level = PoolLevel::Link;
  std::uint64_t generated = 0;
  std::uint64_t consumed = 0;
  std::uint64_t available = 0;

  bool operator==(const PoolSummary&) const = default;
};

struct OutageInterval {
  std::string subject;
  std::string kind;  // "pair", "request" or "user"
  double start_s = 0.0;
  double end_s = 0.0;
  std::uint64_t unmet_bits = 0;

  bool operator==(const OutageInterval&) const = default;
};

struct RelayAnnouncement {
  double t_s = 0.0;
  std::string demand_id;
  std::vector<std::string> relays;
  std::uint64_t blocks = 0;
  std::uint64_t block_bits = 0;

  bool operator==(const RelayAnnouncement&) const = default;
};

struct LeakageAuditEntry {
  std::string scenario;
  std::vector<std::string> compromised;
  std::vector<relay::NodePair> leaked_pairs;
  // Indices into SimReport::announcements of batches relayed through a
  // compromised trusted relay.
  std::vector<std::size_t> exposed_announcements;
  std::uint64_t exposed_relayed_bits = 0;

  bool operator==(const LeakageAuditEntry&) const = default;
};

struct TimeSeries {
  std::vector<std::string> pool_ids;
  std::vector<double> t_s;
  // available[i][j]: pool j at sample i.
  std::vector<std::vector<std::uint64_t>> available;

  bool operator==(const TimeSeries&) const = default;
};

struct SimReport {
  int schema_version = kReportSchemaVersion;
  double duration_s = 0.0;
  double tick_s = 0.0;
  std::uint64_t seed = 0;
  bool stochastic = false;
  std::uint64_t events_processed = 0;
  std::uint64_t total_generated = 0;
  std::uint64_t total_consumed = 0;
  std::uint64_t total_available = 0;
  std::vector<PoolSummary> pools;
  std::vector<OutageInterval> outages;
  std::vector<RelayAnnouncement> announcements;
  std::vector<LeakageAuditEntry> leakage;
  TimeSeries series;

  bool operator==(const SimReport&) const = default;
};

/// Observation points for tests and audits. `on_event` runs after every
/// processed event with all pools; `on_gain` reports each generation credit.
struct SimHooks {
  std::function<void(const SimEvent&, std::span<const KeyPool>)> on_event;
  std::function<void(const std::string& link_id, double from_s, double to_s, std::uint64_t bits)>
      on_gain;
};

/// Runs the simulation. Throws ConfigError for ids that do not resolve or
/// missing contact plans, and DomainError for invalid settings.
SimReport run(const plan::DeploymentPlan& plan, const TrafficModel& traffic,
              const ContactPlans& contacts, const SimSettings& settings,
              const SimHooks& hooks = {});

}  // namespace qkdnet::sim
