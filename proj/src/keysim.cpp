#include "qkdnet/keysim.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <queue>
#include <random>
#include <stdexcept>
#include <tuple>

#include "qkdnet/errors.hpp"

namespace qkdnet::sim {

namespace {

// Absorbs rounding in accumulated rate * time before flooring to bits.
constexpr double kFloorSlack = 1e-6;

bool finite_nonneg(double v) { return std::isfinite(v) && v >= 0.0; }

struct QueuedEvent {
  double t_s;
  int phase;  // ticks settle the elapsed interval first; samples run last
  std::uint64_t seq;
  EventKind kind;
  std::size_t target;  // link, request or user index
};

struct Later {
  bool operator()(const QueuedEvent& x, const QueuedEvent& y) const {
    return std::tie(x.t_s, x.phase, x.seq) > std::tie(y.t_s, y.phase, y.seq);
  }
};

// Floors a running real-valued total to whole bits.
struct FluidCounter {
  double exact = 0.0;
  std::uint64_t whole = 0;

  std::uint64_t add(double amount) {
    exact += amount;
    const auto total = static_cast<std::uint64_t>(std::floor(exact + kFloorSlack));
    const std::uint64_t delta = total > whole ? total - whole : 0;
    whole = std::max(whole, total);
    return delta;
  }
};

struct LinkState {
  LinkSpec spec;
  std::size_t pool = 0;
  // Windows relative to the start, clipped to [0, duration].
  std::vector<std::tuple<double, double, double>> windows;  // from, to, rate
  double accrued_until = 0.0;
  FluidCounter fluid;
};

struct ChainState {
  std::string demand_id;
  std::vector<std::size_t> segments;
  std::size_t end_to_end = 0;
  std::vector<std::string> relays;
};

struct OpenOutage {
  bool open = false;
  OutageInterval interval;
};

struct PairState {
  std::string demand_id;
  std::size_t pool = 0;
  double bits_per_s = 0.0;
  FluidCounter want;
  OpenOutage outage;
};

struct RequestState {
  std::string demand_id;
  std::size_t pool = 0;
  ScheduledRequest request;
};

struct UserState {
  std::string id;
  std::size_t pool = 0;
  std::size_t site_pool = 0;
  std::uint64_t block_bits = 0;
  double bits_per_s = 0.0;
  FluidCounter want;
  bool waiting = false;
  OpenOutage outage;
};

std::string chain_link_id(const std::string& demand, std::size_t i) {
  return demand + "#" + std::to_string(i + 1);
}

class Simulator {
 public:
  Simulator(const plan::DeploymentPlan& plan, const TrafficModel& traffic,
            const ContactPlans& contacts, const SimSettings& settings, const SimHooks& hooks)
      : plan_(plan), traffic_(traffic), settings_(settings), hooks_(hooks), rng_(settings.seed) {
    build_pools(contacts);
    build_traffic();
    build_audit();
  }

  SimReport run() {
    report_.schema_version = kReportSchemaVersion;
    report_.duration_s = settings_.duration_s;
    report_.tick_s = settings_.tick_s;
    report_.seed = settings_.seed;
    report_.stochastic = settings_.stochastic;
    for (const auto& p : pools_) report_.series.pool_ids.push_back(p.id());

    if (settings_.duration_s > 0.0) {
      schedule_fixed_events();
      push(settings_.tick_s < settings_.duration_s ? settings_.tick_s : settings_.duration_s, 0,
           EventKind::GenerationTick, 0);
      push(0.0, 2, EventKind::Sample, 0);
      while (!queue_.empty()) {
        const QueuedEvent ev = queue_.top();
        queue_.pop();
        process(ev);
      }
    }
    finish();
    return std::move(report_);
  }

 private:
  // ---- construction ----

  std::size_t add_pool(std::string id, std::string a, std::string b, PoolLevel level) {
    if (!pool_ids_.insert(id).second) {
      throw ConfigError("simulation", "duplicate pool id '" + id + "'");
    }
    pools_.emplace_back(std::move(id), std::move(a), std::move(b), level);
    return pools_.size() - 1;
  }

  void build_pools(const ContactPlans& contacts) {
    std::vector<LinkSpec> specs = links_for(plan_);
    std::set<std::string> known;
    for (const auto& s : specs) known.insert(s.id);
    for (const auto& [id, w] : contacts) {
      if (!known.contains(id)) {
        throw ConfigError("contacts", "no link named '" + id + "' in the plan");
      }
    }
    pools_.reserve(specs.size() * 2 + 16);

    std::size_t next_spec = 0;
    for (const auto& entry : plan_.entries) {
      const std::string& d = entry.demand.id;
      std::vector<std::size_t> link_pools;
      while (next_spec < specs.size() && specs[next_spec].demand_id == d) {
        LinkSpec spec = specs[next_spec++];
        if (auto it = contacts.find(spec.id); it != contacts.end()) {
          spec.windowed = true;
          spec.windows = it->second;
        } else if (spec.windowed) {
          throw ConfigError("contacts", "satellite link '" + spec.id + "' has no contact plan");
        }
        LinkState ls;
        ls.pool = add_pool(spec.id, spec.a, spec.b, PoolLevel::Link);
        for (const auto& w : spec.windows) {
          const double from = std::max(0.0, w.span.start - settings_.start);
          const double to = std::min(settings_.duration_s, w.span.end - settings_.start);
          const double rate = w.rate_bps.value_or(spec.rate_bps);
          if (!finite_nonneg(rate)) {
            throw ConfigError("contacts." + spec.id, "window rate must be >= 0");
          }
          if (to > from) ls.windows.emplace_back(from, to, rate);
        }
        std::sort(ls.windows.begin(), ls.windows.end());
        ls.spec = std::move(spec);
        link_pools.push_back(ls.pool);
        links_.push_back(std::move(ls));
      }
      if (link_pools.size() == 1) {
        end_to_end_[d] = link_pools.front();
      } else {
        ChainState c;
        c.demand_id = d;
        c.segments = link_pools;
        c.end_to_end = add_pool(d, entry.demand.a, entry.demand.b, PoolLevel::EndToEnd);
        c.relays = entry.technology == plan::TechnologyKind::SatelliteTrustedRelay
                       ? std::vector<std::string>{entry.orbit_id}
                       : entry.relay_ids;
        end_to_end_[d] = c.end_to_end;
        chain_of_pool_[c.end_to_end] = chains_.size();
        chains_.push_back(std::move(c));
      }
      demand_entry_[d] = &entry;
    }
  }

  std::size_t demand_pool(const std::string& where, const std::string& demand_id) const {
    const auto it = end_to_end_.find(demand_id);
    if (it == end_to_end_.end()) {
      throw ConfigError(where, "no planned demand '" + demand_id + "'");
    }
    return it->second;
  }

  void build_traffic() {
    traffic_.validate();
    for (std::size_t i = 0; i < traffic_.pairs.size(); ++i) {
      const PairTraffic& p = traffic_.pairs[i];
      const std::string where = "traffic.pairs[" + std::to_string(i) + "]";
      const std::size_t pool = demand_pool(where, p.demand_id);
      if (p.bits_per_s > 0.0) {
        PairState s;
        s.demand_id = p.demand_id;
        s.pool = pool;
        s.bits_per_s = p.bits_per_s;
        pairs_.push_back(std::move(s));
      }
      for (const auto& r : p.requests) requests_.push_back({p.demand_id, pool, r});
    }
    std::set<std::string> sites;
    for (std::size_t i = 0; i < traffic_.sites.size(); ++i) {
      const SiteTraffic& s = traffic_.sites[i];
      const std::string where = "traffic.sites[" + std::to_string(i) + "]";
      const std::size_t site_pool = demand_pool(where, s.demand_id);
      const auto* entry = demand_entry_.at(s.demand_id);
      if (s.site != entry->demand.a && s.site != entry->demand.b) {
        throw ConfigError(where, "site '" + s.site + "' is not an end point of demand '" +
                                     s.demand_id + "'");
      }
      if (!sites.insert(s.site).second) {
        throw ConfigError(where, "site '" + s.site + "' is listed twice");
      }
      for (std::size_t k = 0; k < s.users; ++k) {
        UserState u;
        u.id = s.site + "/user" + std::to_string(k + 1);
        u.pool = add_pool(u.id, s.site, u.id, PoolLevel::User);
        u.site_pool = site_pool;
        u.block_bits = s.block_bits;
        u.bits_per_s = s.user_bits_per_s;
        user_first_contact_.push_back(static_cast<double>(k) * s.contact_interval_s /
                                      static_cast<double>(s.users));
        user_interval_.push_back(s.contact_interval_s);
        users_.push_back(std::move(u));
      }
    }
  }

  void build_audit() {
    paths_ = plan::relay_paths(plan_);
    std::set<std::string> known;
    for (const auto& p : paths_) {
      known.insert(p.a);
      known.insert(p.b);
      for (const auto& h : p.interior) known.insert(h.node);
    }
    for (std::size_t i = 0; i < settings_.compromise_scenarios.size(); ++i) {
      for (const auto& n : settings_.compromise_scenarios[i].nodes) {
        if (!known.contains(n)) {
          throw ConfigError("compromise_scenarios[" + std::to_string(i) + "]",
                            "node '" + n + "' is on no planned route");
        }
      }
    }
  }

  // ---- event queue ----

  void push(double t, int phase, EventKind kind, std::size_t target) {
    queue_.push({t, phase, seq_++, kind, target});
  }

  void schedule_fixed_events() {
    for (std::size_t i = 0; i < links_.size(); ++i) {
      for (const auto& [from, to, rate] : links_[i].windows) {
        push(from, 1, EventKind::PassStart, i);
        push(to, 1, EventKind::PassEnd, i);
      }
    }
    for (std::size_t i = 0; i < requests_.size(); ++i) {
      const double at = requests_[i].request.at_s;
      if (at <= settings_.duration_s) push(at, 1, EventKind::ConsumeRequest, i);
    }
    for (std::size_t u = 0; u < users_.size(); ++u) {
      for (double t = user_first_contact_[u]; t <= settings_.duration_s; t += user_interval_[u]) {
        push(t, 1, EventKind::DispenseRequest, u);
      }
    }
  }

  void notify(const SimEvent& ev) {
    ++report_.events_processed;
    for (const auto& p : pools_) {
      if (!p.balanced()) {
        throw std::logic_error("key conservation violated in pool " + p.id());
      }
    }
    if (hooks_.on_event) hooks_.on_event(ev, pools_);
  }

  void process(const QueuedEvent& ev) {
    SimEvent out{ev.t_s, ev.seq, ev.kind, {}, 0};
    switch (ev.kind) {
      case EventKind::GenerationTick:
        tick(ev.t_s);
        if (ev.t_s < settings_.duration_s) {
          push(std::min(ev.t_s + settings_.tick_s, settings_.duration_s), 0,
               EventKind::GenerationTick, 0);
        }
        break;
      case EventKind::PassStart:
      case EventKind::PassEnd:
        out.subject = links_[ev.target].spec.id;
        out.bits = accrue(links_[ev.target], ev.t_s);
        break;
      case EventKind::ConsumeRequest: {
        const RequestState& r = requests_[ev.target];
        out.subject = r.demand_id;
        out.bits = r.request.bits;
        ensure(r.pool, r.request.bits, ev.t_s);
        if (!pools_[r.pool].debit(r.request.bits)) {
          report_.outages.push_back({r.demand_id, "request", ev.t_s, ev.t_s, r.request.bits});
        }
        break;
      }
      case EventKind::DispenseRequest: {
        UserState& u = users_[ev.target];
        out.subject = u.id;
        if (pools_[u.pool].available() == 0 && !u.waiting) {
          u.waiting = true;
          auto& fifo = pending_[u.site_pool];
          const auto key = std::make_pair(ev.t_s, u.id);
          const auto pos = std::upper_bound(
              fifo.begin(), fifo.end(), key, [&](const auto& k, std::size_t other) {
                return k < std::make_pair(waiting_since_[other], users_[other].id);
              });
          waiting_since_[ev.target] = ev.t_s;
          fifo.insert(pos, ev.target);
          serve_pending(u.site_pool, ev.t_s);
        }
        break;
      }
      case EventKind::Sample:
        sample(ev.t_s);
        if (ev.t_s < settings_.duration_s) {
          const double next = static_cast<double>(++samples_taken_) * settings_.sample_interval_s;
          if (next <= settings_.duration_s) push(next, 2, EventKind::Sample, 0);
        }
        break;
      case EventKind::RelayAnnounce:
        break;
    }
    notify(out);
  }

  // ---- generation ----

  std::uint64_t accrue(LinkState& link, double to) {
    const double from = link.accrued_until;
    if (!(to > from)) return 0;
    link.accrued_until = to;
    double amount = 0.0;
    if (!link.spec.windowed) {
      amount = link.spec.rate_bps * (to - from);
    } else {
      for (const auto& [w_from, w_to, rate] : link.windows) {
        if (w_from >= to) break;
        const double overlap = std::min(w_to, to) - std::max(w_from, from);
        if (overlap > 0.0) amount += rate * overlap;
      }
    }
    std::uint64_t bits = 0;
    if (settings_.stochastic) {
      if (amount > 0.0) bits = std::poisson_distribution<std::uint64_t>(amount)(rng_);
    } else {
      bits = link.fluid.add(amount);
    }
    if (bits > 0) {
      pools_[link.pool].credit(bits);
      if (hooks_.on_gain) hooks_.on_gain(link.spec.id, from, to, bits);
    }
    return bits;
  }

  void tick(double t) {
    const double dt = t - last_tick_;
    last_tick_ = t;
    for (auto& link : links_) accrue(link, t);
    for (auto& p : pairs_) consume_pair(p, t, dt);
    for (auto& u : users_) consume_user(u, t, dt);
    for (auto& [site, fifo] : pending_) serve_pending(site, t);
  }

  // Relays just enough blocks along a chain to leave `bits` in its
  // end-to-end pool, stopping at the first segment that runs dry.
  void ensure(std::size_t pool, std::uint64_t bits, double t) {
    const auto it = chain_of_pool_.find(pool);
    if (it == chain_of_pool_.end()) return;
    const ChainState& c = chains_[it->second];
    KeyPool& e2e = pools_[c.end_to_end];
    const std::uint64_t block = settings_.relay_block_bits;
    std::vector<KeyPool*> seg;
    for (std::size_t i : c.segments) seg.push_back(&pools_[i]);
    std::uint64_t blocks = 0;
    while (e2e.available() < bits && relay_consume(seg, e2e, block)) ++blocks;
    if (blocks == 0) return;
    auto& log = report_.announcements;
    if (!log.empty() && log.back().t_s == t && log.back().demand_id == c.demand_id) {
      log.back().blocks += blocks;
    } else {
      log.push_back({t, c.demand_id, c.relays, blocks, block});
    }
    notify({t, seq_++, EventKind::RelayAnnounce, c.demand_id, blocks * block});
  }

  static void open_or_extend(OpenOutage& o, const std::string& subject, const char* kind,
                             double from, double to, std::uint64_t unmet) {
    if (!o.open) {
      o.open = true;
      o.interval = {subject, kind, from, to, 0};
    }
    o.interval.end_s = to;
    o.interval.unmet_bits += unmet;
  }

  void close(OpenOutage& o) {
    if (!o.open) return;
    report_.outages.push_back(o.interval);
    o.open = false;
  }

  void consume_pair(PairState& p, double t, double dt) {
    const std::uint64_t want = p.want.add(p.bits_per_s * dt);
    if (want == 0) return;
    ensure(p.pool, want, t);
    if (pools_[p.pool].debit(want)) {
      close(p.outage);
    } else {
      open_or_extend(p.outage, p.demand_id, "pair", t - dt, t, want);
    }
  }

  void consume_user(UserState& u, double t, double dt) {
    const std::uint64_t want = u.want.add(u.bits_per_s * dt);
    if (want == 0) return;
    KeyPool& pool = pools_[u.pool];
    const std::uint64_t take = std::min(want, pool.available());
    if (take > 0) pool.debit(take);
    if (take < want) open_or_extend(u.outage, u.id, "user", t - dt, t, want - take);
  }

  void serve_pending(std::size_t site_pool, double t) {
    auto& fifo = pending_[site_pool];
    while (!fifo.empty()) {
      UserState& u = users_[fifo.front()];
      ensure(site_pool, u.block_bits, t);
      if (!dispense(pools_[site_pool], pools_[u.pool], u.block_bits)) break;
      u.waiting = false;
      if (u.outage.open) u.outage.interval.end_s = t;
      close(u.outage);
      fifo.pop_front();
    }
  }

  void sample(double t) {
    report_.series.t_s.push_back(t);
    std::vector<std::uint64_t> row;
    row.reserve(pools_.size());
    for (const auto& p : pools_) row.push_back(p.available());
    report_.series.available.push_back(std::move(row));
  }

  // ---- report ----

  void finish() {
    for (auto& p : pairs_) close(p.outage);
    for (auto& u : users_) close(u.outage);
    std::stable_sort(report_.outages.begin(), report_.outages.end(),
                     [](const OutageInterval& x, const OutageInterval& y) {
                       return std::tie(x.start_s, x.subject) < std::tie(y.start_s, y.subject);
                     });
    for (const auto& p : pools_) {
      report_.pools.push_back(
          {p.id(), p.a(), p.b(), p.level(), p.generated(), p.consumed(), p.available()});
      report_.total_generated += p.generated();
      report_.total_consumed += p.consumed();
      report_.total_available += p.available();
    }
    for (const auto& scenario : settings_.compromise_scenarios) {
      LeakageAuditEntry e;
      e.scenario = scenario.name;
      e.compromised.assign(scenario.nodes.begin(), scenario.nodes.end());
      const auto leaked = relay::compromise_analysis(paths_, scenario.nodes);
      e.leaked_pairs.assign(leaked.begin(), leaked.end());
      for (std::size_t i = 0; i < report_.announcements.size(); ++i) {
        const auto& a = report_.announcements[i];
        const bool through = std::any_of(a.relays.begin(), a.relays.end(),
                                         [&](const std::string& r) { return scenario.nodes.contains(r); });
        if (through) {
          e.exposed_announcements.push_back(i);
          e.exposed_relayed_bits += a.blocks * a.block_bits;
        }
      }
      report_.leakage.push_back(std::move(e));
    }
  }

  const plan::DeploymentPlan& plan_;
  const TrafficModel& traffic_;
  const SimSettings& settings_;
  const SimHooks& hooks_;
  std::mt19937_64 rng_;

  std::vector<KeyPool> pools_;
  std::set<std::string> pool_ids_;
  std::vector<LinkState> links_;
  std::vector<ChainState> chains_;
  std::map<std::string, std::size_t> end_to_end_;
  std::map<std::size_t, std::size_t> chain_of_pool_;
  std::map<std::string, const plan::PlannedDemand*> demand_entry_;
  std::vector<PairState> pairs_;
  std::vector<RequestState> requests_;
  std::vector<UserState> users_;
  std::vector<double> user_first_contact_;
  std::vector<double> user_interval_;
  std::map<std::size_t, double> waiting_since_;
  std::map<std::size_t, std::deque<std::size_t>> pending_;
  std::vector<relay::RelayPath> paths_;

  std::priority_queue<QueuedEvent, std::vector<QueuedEvent>, Later> queue_;
  std::uint64_t seq_ = 0;
  std::uint64_t samples_taken_ = 0;
  double last_tick_ = 0.0;
  SimReport report_;
};

}  // namespace

std::string_view to_string(PoolLevel level) noexcept {
  switch (level) {
    case PoolLevel::Link:
      return "link";
    case PoolLevel::EndToEnd:
      return "end_to_end";
    case PoolLevel::User:
      return "user";
  }
  return "unknown";
}

std::string_view to_string(EventKind kind) noexcept {
  switch (kind) {
    case EventKind::GenerationTick:
      return "generation_tick";
    case EventKind::PassStart:
      return "pass_start";
    case EventKind::PassEnd:
      return "pass_end";
    case EventKind::ConsumeRequest:
      return "consume_request";
    case EventKind::DispenseRequest:
      return "dispense_request";
    case EventKind::RelayAnnounce:
      return "relay_announce";
    case EventKind::Sample:
      return "sample";
  }
  return "unknown";
}

KeyPool::KeyPool(std::string id, std::string a, std::string b, PoolLevel level)
    : id_(std::move(id)), a_(std::move(a)), b_(std::move(b)), level_(level) {}

void KeyPool::credit(std::uint64_t bits) noexcept {
  generated_ += bits;
  available_ += bits;
}

bool KeyPool::debit(std::uint64_t bits) noexcept {
  if (bits > available_) return false;
  available_ -= bits;
  consumed_ += bits;
  return true;
}

bool relay_consume(std::span<KeyPool* const> segments, KeyPool& end_to_end,
                   std::uint64_t block_bits) {
  if (block_bits == 0) throw DomainError("relay_consume: block size must be > 0 bits");
  if (segments.empty()) throw DomainError("relay_consume: chain has no segments");
  for (const KeyPool* s : segments) {
    if (s->available() < block_bits) return false;
  }
  for (KeyPool* s : segments) s->debit(block_bits);
  end_to_end.credit(block_bits);
  return true;
}

bool dispense(KeyPool& site, KeyPool& user, std::uint64_t block_bits) {
  if (block_bits == 0) throw DomainError("dispense: block size must be > 0 bits");
  if (!site.debit(block_bits)) return false;
  user.credit(block_bits);
  return true;
}

std::vector<LinkSpec> links_for(const plan::DeploymentPlan& plan) {
  using plan::TechnologyKind;
  std::vector<LinkSpec> out;
  for (const auto& e : plan.entries) {
    const auto& d = e.demand;
    auto rate = [&](std::size_t i) {
      return i < e.link_rates_bps.size() ? e.link_rates_bps[i] : e.key_rate_bps;
    };
    switch (e.technology) {
      case TechnologyKind::FiberDirect:
      case TechnologyKind::FreeSpaceTerrestrial:
        out.push_back({d.id, d.id, d.a, d.b, rate(0), false, {}});
        break;
      case TechnologyKind::SatelliteUntrusted:
        out.push_back({d.id, d.id, d.a, d.b, rate(0), true, {}});
        break;
      case TechnologyKind::FiberTrustedRelay: {
        std::vector<std::string> nodes{d.a};
        nodes.insert(nodes.end(), e.relay_ids.begin(), e.relay_ids.end());
        nodes.push_back(d.b);
        for (std::size_t i = 0; i + 1 < nodes.size(); ++i) {
          out.push_back({chain_link_id(d.id, i), d.id, nodes[i], nodes[i + 1], rate(i), false, {}});
        }
        break;
      }
      case TechnologyKind::SatelliteTrustedRelay:
        out.push_back({chain_link_id(d.id, 0), d.id, d.a, e.orbit_id, rate(0), true, {}});
        out.push_back({chain_link_id(d.id, 1), d.id, e.orbit_id, d.b, rate(1), true, {}});
        break;
    }
  }
  return out;
}

void TrafficModel::validate() const {
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const std::string where = "traffic.pairs[" + std::to_string(i) + "]";
    if (!finite_nonneg(pairs[i].bits_per_s)) throw ConfigError(where, "bits_per_s must be >= 0");
    for (const auto& r : pairs[i].requests) {
      if (!finite_nonneg(r.at_s)) throw ConfigError(where, "request times must be >= 0 s");
    }
  }
  for (std::size_t i = 0; i < sites.size(); ++i) {
    const std::string where = "traffic.sites[" + std::to_string(i) + "]";
    const SiteTraffic& s = sites[i];
    if (s.block_bits == 0) throw ConfigError(where, "block_bits must be > 0");
    if (!finite_nonneg(s.user_bits_per_s)) throw ConfigError(where, "user_bits_per_s must be >= 0");
    if (!(std::isfinite(s.contact_interval_s) && s.contact_interval_s > 0.0)) {
      throw ConfigError(where, "contact_interval_s must be > 0");
    }
  }
}

void SimSettings::validate() const {
  if (!finite_nonneg(duration_s)) throw DomainError("duration_s must be >= 0");
  if (!(std::isfinite(tick_s) && tick_s > 0.0)) throw DomainError("tick_s must be > 0");
  if (!(std::isfinite(sample_interval_s) && sample_interval_s > 0.0)) {
    throw DomainError("sample_interval_s must be > 0");
  }
  if (relay_block_bits == 0) throw DomainError("relay_block_bits must be > 0");
}

SimReport run(const plan::DeploymentPlan& plan, const TrafficModel& traffic,
              const ContactPlans& contacts, const SimSettings& settings, const SimHooks& hooks) {
  settings.validate();
  Simulator sim(plan, traffic, contacts, settings, hooks);
  return sim.run();
}

}  // namespace qkdnet::sim
