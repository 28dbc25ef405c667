#include "qkdnet/serialize.hpp"

#include <charconv>
#include <cmath>
#include <limits>

#include "json_reader.hpp"
#include "qkdnet/errors.hpp"

namespace qkdnet::io {

using detail::ObjectReader;

namespace {

plan::Segment segment_from(const std::string& s, const std::string& path) {
  for (auto seg : {plan::Segment::Access, plan::Segment::Metro, plan::Segment::LongHaul,
                   plan::Segment::Intercontinental}) {
    if (plan::to_string(seg) == s) return seg;
  }
  throw ConfigError(path, "unknown segment '" + s + "'");
}

plan::TechnologyKind technology_from(const std::string& s, const std::string& path) {
  if (auto k = plan::technology_from_string(s)) return *k;
  throw ConfigError(path, "unknown technology '" + s + "'");
}

relay::RelayKind relay_kind_from(const std::string& s, const std::string& path) {
  if (auto k = relay::relay_kind_from_string(s)) return *k;
  throw ConfigError(path, "unknown relay kind '" + s + "'");
}

sim::PoolLevel level_from(const std::string& s, const std::string& path) {
  for (auto l : {sim::PoolLevel::Link, sim::PoolLevel::EndToEnd, sim::PoolLevel::User}) {
    if (sim::to_string(l) == s) return l;
  }
  throw ConfigError(path, "unknown pool level '" + s + "'");
}

void check_schema(ObjectReader& r) {
  const int v = r.required<int>("schema_version");
  if (v != kSchemaVersion) {
    throw ConfigError(r.at("schema_version"), "unsupported version " + std::to_string(v));
  }
}

// Arrays of plain values under `key` (absent means empty).
template <class T>
std::vector<T> list(ObjectReader& r, const std::string& key) {
  return r.optional<std::vector<T>>(key).value_or(std::vector<T>{});
}

Json budgets_to_json(const std::vector<plan::NamedBudget>& budgets) {
  Json out = Json::array();
  for (const auto& b : budgets) {
    Json j = {{"label", b.label}};
    const Json body = budget_to_json(b.budget);
    for (const auto& [k, v] : body.items()) j[k] = v;
    out.push_back(j);
  }
  return out;
}

std::vector<plan::NamedBudget> budgets_from(ObjectReader& r, const std::string& key) {
  std::vector<plan::NamedBudget> out;
  const Json* arr = r.find(key);
  if (!arr) return out;
  if (!arr->is_array()) throw ConfigError(r.at(key), "expected an array");
  for (std::size_t i = 0; i < arr->size(); ++i) {
    const std::string p = detail::index_path(r.at(key), i);
    ObjectReader item((*arr)[i], p);
    const auto label = item.required<std::string>("label");
    item.find("components");
    item.find("total_db");
    item.find("transmittance");
    item.done();
    Json bare = (*arr)[i];
    bare.erase("label");
    out.push_back({label, budget_from_json(bare, p)});
  }
  return out;
}

Json demand_to_json(const plan::Demand& d) {
  Json j = {{"id", d.id}, {"a", d.a}, {"b", d.b}, {"distance_km", d.distance_km}};
  if (d.route_km) j["route_km"] = *d.route_km;
  j["has_fiber"] = d.has_fiber;
  j["has_los"] = d.has_los;
  j["transoceanic"] = d.transoceanic;
  j["untrusted_required"] = d.untrusted_required;
  if (d.relay_offsets_km) j["relay_offsets_km"] = *d.relay_offsets_km;
  if (!d.relay_ids.empty()) j["relay_ids"] = d.relay_ids;
  if (d.orbit_id) j["orbit_id"] = *d.orbit_id;
  return j;
}

plan::Demand demand_from(ObjectReader& r) {
  plan::Demand d;
  d.id = r.required<std::string>("id");
  d.a = r.required<std::string>("a");
  d.b = r.required<std::string>("b");
  d.distance_km = r.required<double>("distance_km");
  d.route_km = r.optional<double>("route_km");
  r.into("has_fiber", d.has_fiber);
  r.into("has_los", d.has_los);
  r.into("transoceanic", d.transoceanic);
  r.into("untrusted_required", d.untrusted_required);
  d.relay_offsets_km = r.optional<std::vector<double>>("relay_offsets_km");
  d.relay_ids = list<std::string>(r, "relay_ids");
  d.orbit_id = r.optional<std::string>("orbit_id");
  return d;
}

// Scores may be -inf for a zero rate; JSON has no infinities.
Json score_json(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

double score_from(ObjectReader& r) {
  return r.optional<double>("score").value_or(-std::numeric_limits<double>::infinity());
}

Json window_json(Timestamp start, Timestamp end) {
  return {{"start", format_iso8601(start)}, {"end", format_iso8601(end)}};
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string join(const std::vector<std::string>& items, char sep) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += sep;
    out += items[i];
  }
  return out;
}

}  // namespace

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

std::string format_number(double v) {
  if (!std::isfinite(v)) return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

Json budget_to_json(const link::LinkBudget& budget) {
  Json components = Json::array();
  for (const auto& c : budget.components()) components.push_back(Json::array({c.source, c.db}));
  return {{"components", components},
          {"total_db", budget.total_db()},
          {"transmittance", budget.transmittance()}};
}

link::LinkBudget budget_from_json(const Json& j, const std::string& path) {
  ObjectReader r(j, path);
  link::LinkBudget b;
  const Json* comps = r.find("components");
  if (!comps || !comps->is_array()) throw ConfigError(r.at("components"), "expected an array");
  for (std::size_t i = 0; i < comps->size(); ++i) {
    const Json& c = (*comps)[i];
    const std::string p = detail::index_path(r.at("components"), i);
    if (!c.is_array() || c.size() != 2) throw ConfigError(p, "expected [label, db]");
    try {
      b.add(detail::convert<std::string>(c[0], p), detail::convert<double>(c[1], p));
    } catch (const DomainError& e) {
      throw ConfigError(p, e.what());
    }
  }
  // Totals are derived; they are accepted but not trusted.
  r.find("total_db");
  r.find("transmittance");
  r.done();
  return b;
}

Json plan_to_json(const plan::DeploymentPlan& p) {
  Json entries = Json::array();
  for (const auto& e : p.entries) {
    Json ranking = Json::array();
    for (const auto& rt : e.ranking) {
      ranking.push_back({{"technology", plan::to_string(rt.kind)},
                         {"score", score_json(rt.score)},
                         {"key_rate_bps", rt.key_rate_bps}});
    }
    entries.push_back({{"demand", demand_to_json(e.demand)},
                       {"segment", plan::to_string(e.segment)},
                       {"technology", plan::to_string(e.technology)},
                       {"relay_offsets_km", e.relay_offsets_km},
                       {"relay_ids", e.relay_ids},
                       {"orbit_id", e.orbit_id},
                       {"relay_kind", relay::to_string(e.relay_kind)},
                       {"key_rate_bps", e.key_rate_bps},
                       {"link_rates_bps", e.link_rates_bps},
                       {"budgets", budgets_to_json(e.budgets)},
                       {"ranking", ranking}});
  }
  Json infeasible = Json::array();
  for (const auto& i : p.infeasible) {
    infeasible.push_back({{"demand_id", i.demand_id}, {"reason", i.reason}});
  }
  return {{"schema_version", kSchemaVersion},
          {"all_feasible", p.all_feasible()},
          {"entries", entries},
          {"infeasible", infeasible}};
}

plan::DeploymentPlan plan_from_json(const Json& j) {
  ObjectReader r(j, "");
  check_schema(r);
  r.find("all_feasible");
  plan::DeploymentPlan p;
  r.each("entries", [&](ObjectReader& e) {
    plan::PlannedDemand pd;
    e.nested("demand", [&](ObjectReader& d) { pd.demand = demand_from(d); });
    pd.segment = segment_from(e.required<std::string>("segment"), e.at("segment"));
    pd.technology = technology_from(e.required<std::string>("technology"), e.at("technology"));
    pd.relay_offsets_km = list<double>(e, "relay_offsets_km");
    pd.relay_ids = list<std::string>(e, "relay_ids");
    e.into("orbit_id", pd.orbit_id);
    pd.relay_kind = relay_kind_from(e.required<std::string>("relay_kind"), e.at("relay_kind"));
    pd.key_rate_bps = e.required<double>("key_rate_bps");
    pd.link_rates_bps = list<double>(e, "link_rates_bps");
    pd.budgets = budgets_from(e, "budgets");
    e.each("ranking", [&](ObjectReader& rk) {
      plan::RankedTechnology rt;
      rt.kind = technology_from(rk.required<std::string>("technology"), rk.at("technology"));
      rt.score = score_from(rk);
      rt.key_rate_bps = rk.required<double>("key_rate_bps");
      pd.ranking.push_back(rt);
    });
    if (pd.link_rates_bps.empty()) {
      throw ConfigError(e.at("link_rates_bps"), "planned demand has no links");
    }
    p.entries.push_back(std::move(pd));
  });
  r.each("infeasible", [&](ObjectReader& i) {
    p.infeasible.push_back({i.required<std::string>("demand_id"), i.required<std::string>("reason")});
  });
  r.done();
  return p;
}

plan::DeploymentPlan parse_plan(std::string_view text, const std::string& source) {
  return plan_from_json(detail::parse_text(text, source));
}

std::string plan_csv(const plan::DeploymentPlan& p) {
  std::string out =
      "demand,a,b,distance_km,segment,technology,relays,key_rate_bps,worst_link_loss_db,status\n";
  for (const auto& e : p.entries) {
    double worst = 0.0;
    for (const auto& b : e.budgets) worst = std::max(worst, b.budget.total_db());
    out += csv_field(e.demand.id) + "," + csv_field(e.demand.a) + "," + csv_field(e.demand.b) +
           "," + format_number(e.demand.distance_km) + "," + std::string(plan::to_string(e.segment)) +
           "," + std::string(plan::to_string(e.technology)) + "," +
           std::to_string(e.relay_offsets_km.size()) + "," + format_number(e.key_rate_bps) + "," +
           format_number(worst) + ",planned\n";
  }
  for (const auto& i : p.infeasible) {
    out += csv_field(i.demand_id) + ",,,,,,,,," + csv_field("infeasible: " + i.reason) + "\n";
  }
  return out;
}

Json passes_to_json(std::span<const geo::PassWindow> windows) {
  Json arr = Json::array();
  double total = 0.0;
  for (const auto& w : windows) {
    Json j = {{"station", w.station_id}};
    if (!w.peer_station_id.empty()) j["peer_station"] = w.peer_station_id;
    j["start"] = format_iso8601(w.start);
    j["end"] = format_iso8601(w.end);
    j["duration_s"] = w.duration_s();
    j["max_elevation_deg"] = w.max_elevation_deg;
    j["min_slant_range_km"] = w.min_slant_range_km;
    arr.push_back(j);
    total += w.duration_s();
  }
  return {{"schema_version", kSchemaVersion}, {"total_duration_s", total}, {"windows", arr}};
}

std::string passes_csv(std::span<const geo::PassWindow> windows) {
  std::string out =
      "station,peer_station,start_utc,end_utc,duration_s,max_elevation_deg,min_slant_range_km\n";
  for (const auto& w : windows) {
    out += csv_field(w.station_id) + "," + csv_field(w.peer_station_id) + "," +
           format_iso8601(w.start) + "," + format_iso8601(w.end) + "," +
           format_number(w.duration_s()) + "," + format_number(w.max_elevation_deg) + "," +
           format_number(w.min_slant_range_km) + "\n";
  }
  return out;
}

Json contacts_to_json(const sim::ContactPlans& contacts) {
  Json links = Json::object();
  for (const auto& [id, windows] : contacts) {
    Json arr = Json::array();
    for (const auto& w : windows) {
      Json j = window_json(w.span.start, w.span.end);
      if (w.rate_bps) j["rate_bps"] = *w.rate_bps;
      arr.push_back(j);
    }
    links[id] = arr;
  }
  return {{"schema_version", kSchemaVersion}, {"links", links}};
}

sim::ContactPlans contacts_from_json(const Json& j) {
  ObjectReader r(j, "");
  check_schema(r);
  sim::ContactPlans out;
  const Json* links = r.find("links");
  if (!links || !links->is_object()) throw ConfigError("links", "expected an object");
  for (const auto& [id, arr] : links->items()) {
    const std::string p = "links." + id;
    if (!arr.is_array()) throw ConfigError(p, "expected an array");
    auto& windows = out[id];
    for (std::size_t i = 0; i < arr.size(); ++i) {
      ObjectReader w(arr[i], detail::index_path(p, i));
      const Timestamp start = w.required<Timestamp>("start");
      const Timestamp end = w.required<Timestamp>("end");
      if (end < start) throw ConfigError(w.path(), "window ends before it starts");
      windows.push_back({{start, end}, w.optional<double>("rate_bps")});
      w.done();
    }
  }
  r.done();
  return out;
}

sim::ContactPlans parse_contacts(std::string_view text, const std::string& source) {
  return contacts_from_json(detail::parse_text(text, source));
}

Json relay_paths_to_json(std::span<const relay::RelayPath> paths) {
  Json arr = Json::array();
  for (const auto& p : paths) {
    Json interior = Json::array();
    for (const auto& h : p.interior) {
      interior.push_back({{"node", h.node}, {"kind", relay::to_string(h.kind)}});
    }
    arr.push_back({{"a", p.a}, {"b", p.b}, {"interior", interior}});
  }
  return arr;
}

std::vector<relay::RelayPath> relay_paths_from_json(const Json& j) {
  if (!j.is_array()) throw ConfigError("relay_paths", "expected an array");
  std::vector<relay::RelayPath> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    ObjectReader r(j[i], detail::index_path("relay_paths", i));
    relay::RelayPath p;
    p.a = r.required<std::string>("a");
    p.b = r.required<std::string>("b");
    r.each("interior", [&](ObjectReader& h) {
      p.interior.push_back({h.required<std::string>("node"),
                            relay_kind_from(h.required<std::string>("kind"), h.at("kind"))});
    });
    r.done();
    out.push_back(std::move(p));
  }
  return out;
}

Json leaked_pairs_to_json(const std::set<relay::NodePair>& pairs) {
  Json arr = Json::array();
  for (const auto& [a, b] : pairs) arr.push_back(Json::array({a, b}));
  return arr;
}

Json report_to_json(const sim::SimReport& r) {
  Json pools = Json::array();
  for (const auto& p : r.pools) {
    pools.push_back({{"id", p.id},
                     {"a", p.a},
                     {"b", p.b},
                     {"level", sim::to_string(p.level)},
                     {"generated_bits", p.generated},
                     {"consumed_bits", p.consumed},
                     {"available_bits", p.available}});
  }
  Json outages = Json::array();
  for (const auto& o : r.outages) {
    outages.push_back({{"subject", o.subject},
                       {"kind", o.kind},
                       {"start_s", o.start_s},
                       {"end_s", o.end_s},
                       {"unmet_bits", o.unmet_bits}});
  }
  Json announcements = Json::array();
  for (const auto& a : r.announcements) {
    announcements.push_back({{"t_s", a.t_s},
                             {"demand", a.demand_id},
                             {"relays", a.relays},
                             {"blocks", a.blocks},
                             {"block_bits", a.block_bits}});
  }
  Json leakage = Json::array();
  for (const auto& l : r.leakage) {
    Json pairs = Json::array();
    for (const auto& [a, b] : l.leaked_pairs) pairs.push_back(Json::array({a, b}));
    leakage.push_back({{"scenario", l.scenario},
                       {"compromised", l.compromised},
                       {"leaked_pairs", pairs},
                       {"exposed_announcements", l.exposed_announcements},
                       {"exposed_relayed_bits", l.exposed_relayed_bits}});
  }
  return {{"schema_version", r.schema_version},
          {"duration_s", r.duration_s},
          {"tick_s", r.tick_s},
          {"seed", r.seed},
          {"stochastic", r.stochastic},
          {"events_processed", r.events_processed},
          {"totals",
           {{"generated_bits", r.total_generated},
            {"consumed_bits", r.total_consumed},
            {"available_bits", r.total_available}}},
          {"pools", pools},
          {"outages", outages},
          {"announcements", announcements},
          {"leakage", leakage},
          {"series",
           {{"pool_ids", r.series.pool_ids},
            {"t_s", r.series.t_s},
            {"available_bits", r.series.available}}}};
}

sim::SimReport report_from_json(const Json& j) {
  ObjectReader r(j, "");
  sim::SimReport out;
  check_schema(r);
  out.duration_s = r.required<double>("duration_s");
  out.tick_s = r.required<double>("tick_s");
  out.seed = r.required<std::uint64_t>("seed");
  out.stochastic = r.required<bool>("stochastic");
  out.events_processed = r.required<std::uint64_t>("events_processed");
  r.nested("totals", [&](ObjectReader& t) {
    out.total_generated = t.required<std::uint64_t>("generated_bits");
    out.total_consumed = t.required<std::uint64_t>("consumed_bits");
    out.total_available = t.required<std::uint64_t>("available_bits");
  });
  r.each("pools", [&](ObjectReader& p) {
    sim::PoolSummary s;
    s.id = p.required<std::string>("id");
    s.a = p.required<std::string>("a");
    s.b = p.required<std::string>("b");
    s.level = level_from(p.required<std::string>("level"), p.at("level"));
    s.generated = p.required<std::uint64_t>("generated_bits");
    s.consumed = p.required<std::uint64_t>("consumed_bits");
    s.available = p.required<std::uint64_t>("available_bits");
    out.pools.push_back(std::move(s));
  });
  r.each("outages", [&](ObjectReader& o) {
    out.outages.push_back({o.required<std::string>("subject"), o.required<std::string>("kind"),
                           o.required<double>("start_s"), o.required<double>("end_s"),
                           o.required<std::uint64_t>("unmet_bits")});
  });
  r.each("announcements", [&](ObjectReader& a) {
    out.announcements.push_back({a.required<double>("t_s"), a.required<std::string>("demand"),
                                 list<std::string>(a, "relays"),
                                 a.required<std::uint64_t>("blocks"),
                                 a.required<std::uint64_t>("block_bits")});
  });
  r.each("leakage", [&](ObjectReader& l) {
    sim::LeakageAuditEntry e;
    e.scenario = l.required<std::string>("scenario");
    e.compromised = list<std::string>(l, "compromised");
    const Json* pairs = l.find("leaked_pairs");
    if (pairs) {
      for (std::size_t i = 0; i < pairs->size(); ++i) {
        const Json& pr = (*pairs)[i];
        const auto ab = detail::convert<std::vector<std::string>>(
            pr, detail::index_path(l.at("leaked_pairs"), i));
        if (ab.size() != 2) throw ConfigError(l.at("leaked_pairs"), "expected [a, b]");
        e.leaked_pairs.emplace_back(ab[0], ab[1]);
      }
    }
    const Json* exposed = l.find("exposed_announcements");
    if (exposed) {
      for (std::size_t i = 0; i < exposed->size(); ++i) {
        e.exposed_announcements.push_back(detail::convert<std::uint64_t>(
            (*exposed)[i], detail::index_path(l.at("exposed_announcements"), i)));
      }
    }
    e.exposed_relayed_bits = l.required<std::uint64_t>("exposed_relayed_bits");
    out.leakage.push_back(std::move(e));
  });
  r.nested("series", [&](ObjectReader& s) {
    out.series.pool_ids = list<std::string>(s, "pool_ids");
    out.series.t_s = list<double>(s, "t_s");
    const Json* rows = s.find("available_bits");
    if (rows) {
      for (std::size_t i = 0; i < rows->size(); ++i) {
        std::vector<std::uint64_t> row;
        const Json& rj = (*rows)[i];
        const std::string p = detail::index_path(s.at("available_bits"), i);
        if (!rj.is_array()) throw ConfigError(p, "expected an array");
        for (std::size_t k = 0; k < rj.size(); ++k) {
          row.push_back(detail::convert<std::uint64_t>(rj[k], detail::index_path(p, k)));
        }
        out.series.available.push_back(std::move(row));
      }
    }
  });
  r.done();
  return out;
}

std::string timeseries_csv(const sim::SimReport& r) {
  std::vector<std::string> header{"time_s"};
  for (const auto& id : r.series.pool_ids) header.push_back(csv_field(id + "_bits"));
  std::string out = join(header, ',') + "\n";
  for (std::size_t i = 0; i < r.series.t_s.size(); ++i) {
    out += format_number(r.series.t_s[i]);
    for (auto v : r.series.available[i]) out += "," + std::to_string(v);
    out += "\n";
  }
  return out;
}

std::string outages_csv(const sim::SimReport& r) {
  std::string out = "subject,kind,start_s,end_s,unmet_bits\n";
  for (const auto& o : r.outages) {
    out += csv_field(o.subject) + "," + o.kind + "," + format_number(o.start_s) + "," +
           format_number(o.end_s) + "," + std::to_string(o.unmet_bits) + "\n";
  }
  return out;
}

}  // namespace qkdnet::io
