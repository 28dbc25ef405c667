#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "qkdnet/errors.hpp"
#include "qkdnet/keysim.hpp"

using namespace qkdnet::sim;
using qkdnet::Timestamp;
using qkdnet::plan::PlannedDemand;
using qkdnet::plan::TechnologyKind;

namespace {

const Timestamp kStart{1'700'000'000.0};

PlannedDemand entry(std::string id, std::string a, std::string b, TechnologyKind kind,
                    std::vector<double> rates) {
  PlannedDemand p;
  p.demand.id = id;
  p.demand.a = a;
  p.demand.b = b;
  p.demand.distance_km = 10.0;
  p.technology = kind;
  p.link_rates_bps = rates;
  p.key_rate_bps = *std::min_element(rates.begin(), rates.end());
  return p;
}

PlannedDemand fiber_chain(std::string id, std::vector<double> rates) {
  PlannedDemand p = entry(id, id + ".a", id + ".b", TechnologyKind::FiberTrustedRelay, rates);
  for (std::size_t i = 1; i < rates.size(); ++i) p.relay_ids.push_back(id + "/r" + std::to_string(i));
  p.relay_kind = qkdnet::relay::RelayKind::TrustedNode;
  return p;
}

SimSettings settings(double duration, std::uint64_t seed = 1) {
  SimSettings s;
  s.start = kStart;
  s.duration_s = duration;
  s.seed = seed;
  return s;
}

ActiveWindow window(double from, double to, std::optional<double> rate = std::nullopt) {
  return {{kStart + from, kStart + to}, rate};
}

const PoolSummary& pool(const SimReport& r, const std::string& id) {
  const auto it = std::find_if(r.pools.begin(), r.pools.end(),
                               [&](const PoolSummary& p) { return p.id == id; });
  REQUIRE(it != r.pools.end());
  return *it;
}

// Conservation and non-negativity audited after every event.
SimHooks auditing(std::size_t& events) {
  SimHooks h;
  h.on_event = [&events](const SimEvent&, std::span<const KeyPool> pools) {
    ++events;
    for (const auto& p : pools) {
      REQUIRE(p.generated() == p.consumed() + p.available());
      REQUIRE(p.available() <= p.generated());
    }
  };
  return h;
}

}  // namespace

TEST_CASE("KeyPool accounting") {
  KeyPool p("x", "a", "b", PoolLevel::Link);
  p.credit(100);
  CHECK(p.debit(60));
  CHECK_FALSE(p.debit(41));
  CHECK(p.available() == 40);
  CHECK(p.generated() == 100);
  CHECK(p.consumed() == 60);
  CHECK(p.balanced());
}

TEST_CASE("relay_consume") {
  KeyPool s1("s1", "a", "r", PoolLevel::Link), s2("s2", "r", "b", PoolLevel::Link);
  KeyPool e2e("d", "a", "b", PoolLevel::EndToEnd);
  std::vector<KeyPool*> chain{&s1, &s2};
  s1.credit(100);
  s2.credit(100);
  CHECK(relay_consume(chain, e2e, 64));
  CHECK(s1.available() == 36);
  CHECK(s2.available() == 36);
  CHECK(e2e.available() == 64);

  KeyPool t1("t1", "a", "r", PoolLevel::Link), t2("t2", "r", "b", PoolLevel::Link);
  KeyPool e2("e", "a", "b", PoolLevel::EndToEnd);
  t1.credit(32);
  t2.credit(100);
  std::vector<KeyPool*> short_chain{&t1, &t2};
  CHECK_FALSE(relay_consume(short_chain, e2, 64));
  CHECK(t1.available() == 32);
  CHECK(t2.available() == 100);
  CHECK(e2.generated() == 0);

  CHECK_THROWS_AS(relay_consume(chain, e2e, 0), qkdnet::DomainError);
  CHECK_THROWS_AS(relay_consume({}, e2e, 8), qkdnet::DomainError);
}

TEST_CASE("dispense") {
  KeyPool site("site", "a", "b", PoolLevel::EndToEnd), user("u", "a", "u", PoolLevel::User);
  site.credit(1000);
  CHECK(dispense(site, user, 256));
  CHECK(site.available() == 744);
  CHECK(user.available() == 256);
  CHECK_FALSE(dispense(site, user, 800));
  CHECK(site.available() == 744);
  CHECK(site.generated() == site.consumed() + site.available());
  CHECK_THROWS_AS(dispense(site, user, 0), qkdnet::DomainError);
}

TEST_CASE("single fiber link accrues rate x time") {
  qkdnet::plan::DeploymentPlan plan;
  plan.entries.push_back(entry("f", "a", "b", TechnologyKind::FiberDirect, {100.0}));
  const SimReport r = run(plan, {}, {}, settings(10.0));
  CHECK(pool(r, "f").available == 1000);
  CHECK(pool(r, "f").generated == 1000);
  CHECK(r.total_consumed == 0);
  CHECK(r.series.t_s == std::vector<double>{0.0});
}

TEST_CASE("fractional rates floor cumulatively") {
  qkdnet::plan::DeploymentPlan plan;
  plan.entries.push_back(entry("f", "a", "b", TechnologyKind::FiberDirect, {0.3}));
  const SimReport r = run(plan, {}, {}, settings(100.0));
  CHECK(pool(r, "f").generated == 30);
}

TEST_CASE("satellite link accrues only inside its pass") {
  qkdnet::plan::DeploymentPlan plan;
  plan.entries.push_back(entry("s", "a", "b", TechnologyKind::SatelliteUntrusted, {1234.5}));
  const ContactPlans contacts{{"s", {window(40000.25, 40300.25)}}};
  std::vector<std::tuple<double, double, std::uint64_t>> gains;
  SimHooks hooks;
  hooks.on_gain = [&](const std::string&, double from, double to, std::uint64_t bits) {
    gains.emplace_back(from, to, bits);
  };
  const SimReport r = run(plan, {}, contacts, settings(86400.0), hooks);
  // Windowed integration oracle.
  CHECK(pool(r, "s").generated == static_cast<std::uint64_t>(std::floor(300.0 * 1234.5)));
  REQUIRE(!gains.empty());
  for (const auto& [from, to, bits] : gains) {
    CHECK(bits > 0);
    CHECK(to > 40000.25);
    CHECK(from < 40300.25);
  }

  CHECK_THROWS_AS(run(plan, {}, {}, settings(100.0)), qkdnet::ConfigError);
  const ContactPlans stray{{"s", {}}, {"nope", {}}};
  CHECK_THROWS_AS(run(plan, {}, stray, settings(100.0)), qkdnet::ConfigError);
}

TEST_CASE("window rate overrides and partial overlap with the run") {
  qkdnet::plan::DeploymentPlan plan;
  plan.entries.push_back(entry("s", "a", "b", TechnologyKind::SatelliteUntrusted, {10.0}));
  const ContactPlans contacts{{"s", {window(-50, 20, 100.0), window(90, 200)}}};
  const SimReport r = run(plan, {}, contacts, settings(100.0));
  CHECK(pool(r, "s").generated == 20 * 100 + 10 * 10);
}

TEST_CASE("chain bottleneck") {
  qkdnet::plan::DeploymentPlan plan;
  plan.entries.push_back(fiber_chain("c", {300.0, 120.0, 500.0}));
  TrafficModel traffic;
  traffic.pairs.push_back({"c", 1e6, {}});  // far beyond what the chain can carry
  SimSettings s = settings(1000.0);
  s.relay_block_bits = 64;
  std::size_t events = 0;
  const SimReport r = run(plan, traffic, {}, s, auditing(events));
  CHECK(events == r.events_processed);
  std::uint64_t min_gen = UINT64_MAX;
  for (int i = 1; i <= 3; ++i) min_gen = std::min(min_gen, pool(r, "c#" + std::to_string(i)).generated);
  CHECK(min_gen == 120000);
  const std::uint64_t e2e = pool(r, "c").generated;
  CHECK(e2e <= min_gen);
  CHECK(min_gen - e2e < 64);
  CHECK(r.total_generated == r.total_consumed + r.total_available);
  // The chain cannot satisfy the demand: one long outage.
  REQUIRE(!r.outages.empty());
  CHECK(r.outages.front().kind == "pair");
}

TEST_CASE("empty traffic consumes nothing") {
  qkdnet::plan::DeploymentPlan plan;
  plan.entries.push_back(fiber_chain("c", {50.0, 70.0}));
  plan.entries.push_back(entry("f", "x", "y", TechnologyKind::FiberDirect, {10.0}));
  const SimReport r = run(plan, {}, {}, settings(500.0));
  for (const auto& p : r.pools) CHECK(p.consumed == 0);
  CHECK(r.announcements.empty());
  CHECK(r.outages.empty());
}

TEST_CASE("satellite trusted relay needs both passes") {
  qkdnet::plan::DeploymentPlan plan;
  PlannedDemand p = entry("s", "a", "b", TechnologyKind::SatelliteTrustedRelay, {100.0, 100.0});
  p.orbit_id = "sat1";
  p.relay_kind = qkdnet::relay::RelayKind::TrustedSatellite;
  plan.entries.push_back(p);
  const ContactPlans contacts{{"s#1", {window(100, 200)}}, {"s#2", {window(1000, 1050)}}};
  TrafficModel traffic;
  traffic.pairs.push_back({"s", 0.0, {{500.0, 256}, {2000.0, 256}}});
  SimSettings st = settings(3000.0);
  st.compromise_scenarios = {{"sat", {"sat1"}}, {"end", {"a"}}};
  const SimReport r = run(plan, traffic, contacts, st);
  CHECK(pool(r, "s#1").generated == 10000);
  CHECK(pool(r, "s#2").generated == 5000);
  // Before the second pass the request fails; afterwards it succeeds.
  REQUIRE(r.outages.size() == 1);
  CHECK(r.outages[0].kind == "request");
  CHECK(r.outages[0].start_s == 500.0);
  CHECK(pool(r, "s").consumed == 256);
  REQUIRE(r.announcements.size() == 1);
  CHECK(r.announcements[0].relays == std::vector<std::string>{"sat1"});
  REQUIRE(r.leakage.size() == 2);
  CHECK(r.leakage[0].exposed_announcements == std::vector<std::size_t>{0});
  CHECK(r.leakage[0].exposed_relayed_bits == 256);
  CHECK(r.leakage[1].leaked_pairs == std::vector<qkdnet::relay::NodePair>{{"a", "b"}});
}

TEST_CASE("leakage audit matches compromise analysis") {
  qkdnet::plan::DeploymentPlan plan;
  plan.entries.push_back(fiber_chain("c1", {100.0, 100.0, 100.0}));
  plan.entries.push_back(fiber_chain("c2", {100.0, 100.0}));
  PlannedDemand u = entry("u", "p", "q", TechnologyKind::SatelliteUntrusted, {100.0});
  u.orbit_id = "ent";
  u.relay_kind = qkdnet::relay::RelayKind::UntrustedEntanglementSatellite;
  plan.entries.push_back(u);
  TrafficModel traffic;
  traffic.pairs = {{"c1", 50.0, {}}, {"c2", 30.0, {}}, {"u", 10.0, {}}};
  SimSettings st = settings(600.0);
  st.compromise_scenarios = {{"relay", {"c1/r2"}}, {"ent", {"ent"}}};
  const ContactPlans contacts{{"u", {window(0, 600)}}};
  const SimReport r = run(plan, traffic, contacts, st);

  const auto paths = qkdnet::plan::relay_paths(plan);
  for (const auto& audit : r.leakage) {
    const std::set<std::string> nodes(audit.compromised.begin(), audit.compromised.end());
    const auto leaked = qkdnet::relay::compromise_analysis(paths, nodes);
    CHECK(std::set<qkdnet::relay::NodePair>(audit.leaked_pairs.begin(), audit.leaked_pairs.end()) ==
          leaked);
    std::vector<std::size_t> expected;
    std::uint64_t bits = 0;
    for (std::size_t i = 0; i < r.announcements.size(); ++i) {
      if (r.announcements[i].demand_id == "c1" && nodes.contains("c1/r2")) {
        expected.push_back(i);
        bits += r.announcements[i].blocks * r.announcements[i].block_bits;
      }
    }
    CHECK(audit.exposed_announcements == expected);
    CHECK(audit.exposed_relayed_bits == bits);
  }
  CHECK(r.leakage[0].leaked_pairs == std::vector<qkdnet::relay::NodePair>{{"c1.a", "c1.b"}});
  CHECK(r.leakage[0].exposed_relayed_bits > 0);
  CHECK(r.leakage[1].leaked_pairs.empty());
  CHECK(r.leakage[1].exposed_announcements.empty());

  st.compromise_scenarios = {{"ghost", {"nobody"}}};
  CHECK_THROWS_AS(run(plan, traffic, contacts, st), qkdnet::ConfigError);
}

TEST_CASE("site dispensing: FIFO by request time then id") {
  qkdnet::plan::DeploymentPlan plan;
  plan.entries.push_back(entry("f", "site", "hq", TechnologyKind::FiberDirect, {300.0}));
  TrafficModel traffic;
  // Two users, same contact time (interval 1e6 s, staggered by 0 for k=0 and
  // 5e5 for k=1, so only user1 visits in this run).
  SiteTraffic site{"site", "f", 2, 256, 10.0, 1e6};
  traffic.sites.push_back(site);
  std::size_t events = 0;
  const SimReport r = run(plan, traffic, {}, settings(100.0), auditing(events));
  CHECK(pool(r, "site/user1").generated == 256);
  CHECK(pool(r, "site/user2").generated == 0);
  CHECK(pool(r, "site/user1").consumed == 256);
  CHECK(r.total_generated == r.total_consumed + r.total_available);

  SUBCASE("pool covers one of two simultaneous requests") {
    qkdnet::plan::DeploymentPlan p2;
    p2.entries.push_back(entry("f", "site", "hq", TechnologyKind::FiberDirect, {30.0}));
    TrafficModel t2;
    // Contacts every 10 s, both users at 0 and 5 s initially; 300 bits by
    // t = 10 covers exactly one block.
    t2.sites.push_back({"site", "f", 2, 256, 0.0, 10.0});
    SimSettings s2 = settings(11.0);
    const SimReport r2 = run(p2, t2, {}, s2);
    // user1 asks at 0 and waits; user2 asks at 5 and queues behind.
    // At 9 s the pool reaches 270 >= 256: user1 is served first.
    CHECK(pool(r2, "site/user1").generated == 256);
    CHECK(pool(r2, "site/user2").generated == 0);
  }
}

TEST_CASE("users refill at the next contact after running dry") {
  qkdnet::plan::DeploymentPlan plan;
  plan.entries.push_back(entry("f", "site", "hq", TechnologyKind::FiberDirect, {1000.0}));
  TrafficModel traffic;
  traffic.sites.push_back({"site", "f", 1, 100, 10.0, 50.0});
  const SimReport r = run(plan, traffic, {}, settings(200.0));
  // Contacts at 0, 50, 100, 150, 200; each block lasts 10 s. The pool is
  // empty at t=0, so the first refill waits until the first tick.
  const PoolSummary& u = pool(r, "site/user1");
  CHECK(u.generated == 500);
  CHECK(u.consumed == 100 + 100 + 100 + 100 + 0);
  std::size_t user_outages = 0;
  for (const auto& o : r.outages) user_outages += o.kind == "user";
  CHECK(user_outages >= 4);
}

TEST_CASE("site and demand cross-references are checked") {
  qkdnet::plan::DeploymentPlan plan;
  plan.entries.push_back(entry("f", "site", "hq", TechnologyKind::FiberDirect, {10.0}));
  TrafficModel bad_demand;
  bad_demand.pairs.push_back({"missing", 1.0, {}});
  CHECK_THROWS_AS(run(plan, bad_demand, {}, settings(10)), qkdnet::ConfigError);
  TrafficModel bad_site;
  bad_site.sites.push_back({"elsewhere", "f", 1, 8, 1.0, 10.0});
  CHECK_THROWS_AS(run(plan, bad_site, {}, settings(10)), qkdnet::ConfigError);
  TrafficModel zero_block;
  zero_block.sites.push_back({"site", "f", 1, 0, 1.0, 10.0});
  CHECK_THROWS_AS(run(plan, zero_block, {}, settings(10)), qkdnet::ConfigError);
  SimSettings neg = settings(10);
  neg.tick_s = 0;
  CHECK_THROWS_AS(run(plan, {}, {}, neg), qkdnet::DomainError);
}

TEST_CASE("duration zero yields an empty series") {
  qkdnet::plan::DeploymentPlan plan;
  plan.entries.push_back(entry("f", "a", "b", TechnologyKind::FiberDirect, {10.0}));
  const SimReport r = run(plan, {}, {}, settings(0.0));
  CHECK(r.series.t_s.empty());
  CHECK(r.series.available.empty());
  CHECK(r.total_generated == 0);
}

TEST_CASE("time series sampling") {
  qkdnet::plan::DeploymentPlan plan;
  plan.entries.push_back(entry("f", "a", "b", TechnologyKind::FiberDirect, {2.0}));
  SimSettings s = settings(300.0);
  s.sample_interval_s = 60.0;
  const SimReport r = run(plan, {}, {}, s);
  CHECK(r.series.t_s == std::vector<double>{0, 60, 120, 180, 240, 300});
  REQUIRE(r.series.available.size() == 6);
  for (std::size_t i = 0; i < 6; ++i) CHECK(r.series.available[i][0] == 120 * i);
}

TEST_CASE("determinism and stochastic mode") {
  qkdnet::plan::DeploymentPlan plan;
  plan.entries.push_back(fiber_chain("c", {80.0, 95.5}));
  PlannedDemand s = entry("s", "x", "y", TechnologyKind::SatelliteUntrusted, {400.0});
  plan.entries.push_back(s);
  TrafficModel traffic;
  traffic.pairs = {{"c", 40.0, {}}, {"s", 1.0, {{100.0, 500}}}};
  traffic.sites.push_back({"c.a", "c", 3, 64, 2.0, 120.0});
  const ContactPlans contacts{{"s", {window(200, 500)}}};

  const SimReport a = run(plan, traffic, contacts, settings(3600.0, 1));
  const SimReport b = run(plan, traffic, contacts, settings(3600.0, 1));
  CHECK(a == b);
  const SimReport c = run(plan, traffic, contacts, settings(3600.0, 99));
  // Fluid mode ignores the seed.
  CHECK(c.seed == 99);
  CHECK(c.pools == a.pools);

  SimSettings st = settings(3600.0, 1);
  st.stochastic = true;
  std::size_t events = 0;
  const SimReport s1 = run(plan, traffic, contacts, st, auditing(events));
  const SimReport s2 = run(plan, traffic, contacts, st);
  CHECK(s1 == s2);
  st.seed = 2;
  const SimReport s3 = run(plan, traffic, contacts, st);
  CHECK(s3.pools != s1.pools);
  // Poisson totals stay near the fluid expectation.
  const double expected = 80.0 * 3600.0;
  CHECK(std::abs(static_cast<double>(pool(s1, "c#1").generated) - expected) < 5.0 * std::sqrt(expected));
}
