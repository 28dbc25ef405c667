#include "qkdnet/config.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "json_reader.hpp"
#include "qkdnet/errors.hpp"

namespace qkdnet::config {

using detail::Json;
using detail::ObjectReader;

std::string_view to_string(SiteRole role) noexcept {
  switch (role) {
    case SiteRole::GroundStation: return "ground_station";
    case SiteRole::SecureSite: return "secure_site";
    case SiteRole::Relay: return "relay";
  }
  return "?";
}

namespace {

SiteRole role_from(const std::string& s, const std::string& path) {
  for (auto r : {SiteRole::GroundStation, SiteRole::SecureSite, SiteRole::Relay}) {
    if (to_string(r) == s) return r;
  }
  throw ConfigError(path, "unknown role '" + s + "' (ground_station, secure_site, relay)");
}

link::Direction direction_from(const std::string& s, const std::string& path) {
  if (s == "downlink") return link::Direction::Downlink;
  if (s == "uplink") return link::Direction::Uplink;
  throw ConfigError(path, "unknown direction '" + s + "' (downlink, uplink)");
}

// Runs `f`, turning domain errors into configuration errors at `path`.
template <class F>
void checked(const std::string& path, F&& f) {
  try {
    f();
  } catch (const DomainError& e) {
    throw ConfigError(path, e.what());
  }
}

// ---- reading

geo::NightMode read_night(ObjectReader& r) {
  const auto mode = r.required<std::string>("mode");
  if (mode == "solar") {
    geo::SolarElevationThreshold s;
    r.into("sun_elevation_deg", s.threshold_deg);
    return s;
  }
  if (mode == "fixed_hours") {
    geo::FixedLocalHours h;
    r.into("start_local_h", h.start_hour);
    r.into("end_local_h", h.end_hour);
    h.utc_offset_hours = r.optional<double>("utc_offset_h");
    return h;
  }
  throw ConfigError(r.at("mode"), "unknown night mode '" + mode + "' (solar, fixed_hours)");
}

Site read_site(ObjectReader& r) {
  Site s;
  s.id = r.required<std::string>("id");
  if (auto role = r.optional<std::string>("role")) s.role = role_from(*role, r.at("role"));
  s.latitude_deg = r.required<double>("latitude_deg");
  s.longitude_deg = r.required<double>("longitude_deg");
  r.into("min_elevation_deg", s.min_elevation_deg);
  r.nested("night", [&](ObjectReader& n) { s.night = read_night(n); });
  return s;
}

geo::OrbitSpec read_orbit(ObjectReader& r) {
  geo::OrbitSpec o;
  o.id = r.required<std::string>("id");
  o.altitude_km = r.required<double>("altitude_km");
  r.into("inclination_deg", o.inclination_deg);
  r.into("raan_deg", o.raan_deg);
  r.into("initial_phase_deg", o.initial_phase_deg);
  o.epoch = r.required<Timestamp>("epoch");
  return o;
}

DemandConfig read_demand(ObjectReader& r) {
  DemandConfig d;
  d.id = r.required<std::string>("id");
  d.a = r.required<std::string>("a");
  d.b = r.required<std::string>("b");
  d.distance_km = r.optional<double>("distance_km");
  d.fiber_route = r.optional<std::string>("fiber_route");
  r.into("line_of_sight", d.line_of_sight);
  r.into("transoceanic", d.transoceanic);
  r.into("untrusted_required", d.untrusted_required);
  r.each("relays", [&](ObjectReader& rr) {
    d.relays.push_back({rr.required<std::string>("site"), rr.required<double>("offset_km")});
  });
  d.orbit = r.optional<std::string>("orbit");
  return d;
}

void read_parameters(ObjectReader& r, plan::PlannerParams& p) {
  r.nested("fiber", [&](ObjectReader& f) {
    f.into("attenuation_db_per_km", p.fiber.attenuation_db_per_km);
    f.into("coexistence_penalty_db", p.fiber.coexistence_penalty_db);
  });
  r.nested("free_space", [&](ObjectReader& f) {
    f.into("absorption_db_per_km", p.freespace.atmospheric_absorption_db_per_km);
    f.into("weather_penalty_db", p.freespace.weather_penalty_db);
    f.into("turbulence_penalty_db", p.freespace.turbulence_penalty_db);
    f.into("tx_divergence_urad", p.freespace.tx_divergence_urad);
    f.into("tx_aperture_m", p.freespace.tx_aperture_m);
    f.into("rx_aperture_m", p.freespace.rx_aperture_m);
  });
  r.nested("satellite", [&](ObjectReader& s) {
    if (auto d = s.optional<std::string>("direction")) {
      p.satellite.direction = direction_from(*d, s.at("direction"));
    }
    s.into("altitude_km", p.satellite.altitude_km);
    s.into("ground_rx_aperture_m", p.satellite.ground_rx_aperture_m);
    s.into("sat_rx_aperture_m", p.satellite.sat_rx_aperture_m);
    s.into("uplink_beam_m_at_500km", p.satellite.uplink_beam_m_at_500km);
    s.into("atmos_attenuation_db", p.satellite.atmos_attenuation_db);
    s.into("pointing_penalty_db", p.satellite.pointing_penalty_db);
    s.into("tx_divergence_urad", p.satellite.tx_divergence_urad);
    s.into("sat_tx_aperture_m", p.satellite.sat_tx_aperture_m);
  });
  r.nested("planner", [&](ObjectReader& s) {
    s.into("source_rate_hz", p.source_rate_hz);
    s.into("sifting_factor", p.sifting_factor);
    s.into("fiber_direct_max_km", p.fiber_direct_max_km);
    s.into("free_space_max_km", p.freespace_max_km);
    s.into("max_span_km", p.max_span_km);
    s.into("untrusted_max_separation_km", p.untrusted_max_separation_km);
    s.into("satellite_reference_elevation_deg", p.satellite_reference_elevation_deg);
    s.into("default_orbit", p.default_orbit_id);
    s.into("rate_weight", p.weights.rate);
    s.into("cost_weight", p.weights.cost);
  });
}

void read_simulation(ObjectReader& r, SimulationConfig& s) {
  r.into("start", s.start);
  r.into("duration_s", s.duration_s);
  r.into("tick_s", s.tick_s);
  r.into("sample_interval_s", s.sample_interval_s);
  r.into("seed", s.seed);
  r.into("stochastic", s.stochastic);
  r.into("relay_block_bits", s.relay_block_bits);
  r.into("pass_step_s", s.pass_step_s);
  r.into("include_day", s.include_day);
  r.into("night_gate_free_space", s.night_gate_free_space);
  r.nested("traffic", [&](ObjectReader& t) {
    t.each("pairs", [&](ObjectReader& p) {
      sim::PairTraffic pt;
      pt.demand_id = p.required<std::string>("demand");
      p.into("bits_per_s", pt.bits_per_s);
      p.each("requests", [&](ObjectReader& q) {
        pt.requests.push_back({q.required<double>("at_s"), q.required<std::uint64_t>("bits")});
      });
      s.traffic.pairs.push_back(std::move(pt));
    });
    t.each("sites", [&](ObjectReader& p) {
      sim::SiteTraffic st;
      st.site = p.required<std::string>("site");
      st.demand_id = p.required<std::string>("demand");
      st.users = p.required<std::uint64_t>("users");
      p.into("block_bits", st.block_bits);
      p.into("user_bits_per_s", st.user_bits_per_s);
      p.into("contact_interval_s", st.contact_interval_s);
      s.traffic.sites.push_back(std::move(st));
    });
  });
  r.each("compromise_scenarios", [&](ObjectReader& c) {
    sim::CompromiseScenario cs;
    cs.name = c.required<std::string>("name");
    const auto nodes = c.required<std::vector<std::string>>("nodes");
    cs.nodes.insert(nodes.begin(), nodes.end());
    s.compromise_scenarios.push_back(std::move(cs));
  });
}

// ---- writing

Json write_night(const geo::NightMode& night) {
  Json j;
  if (const auto* s = std::get_if<geo::SolarElevationThreshold>(&night)) {
    j["mode"] = "solar";
    j["sun_elevation_deg"] = s->threshold_deg;
  } else {
    const auto& h = std::get<geo::FixedLocalHours>(night);
    j["mode"] = "fixed_hours";
    j["start_local_h"] = h.start_hour;
    j["end_local_h"] = h.end_hour;
    if (h.utc_offset_hours) j["utc_offset_h"] = *h.utc_offset_hours;
  }
  return j;
}

Json write_parameters(const plan::PlannerParams& p) {
  Json j;
  j["fiber"] = {{"attenuation_db_per_km", p.fiber.attenuation_db_per_km},
                {"coexistence_penalty_db", p.fiber.coexistence_penalty_db}};
  j["free_space"] = {{"absorption_db_per_km", p.freespace.atmospheric_absorption_db_per_km},
                     {"weather_penalty_db", p.freespace.weather_penalty_db},
                     {"turbulence_penalty_db", p.freespace.turbulence_penalty_db},
                     {"tx_divergence_urad", p.freespace.tx_divergence_urad},
                     {"tx_aperture_m", p.freespace.tx_aperture_m},
                     {"rx_aperture_m", p.freespace.rx_aperture_m}};
  j["satellite"] = {{"direction", link::to_string(p.satellite.direction)},
                    {"altitude_km", p.satellite.altitude_km},
                    {"ground_rx_aperture_m", p.satellite.ground_rx_aperture_m},
                    {"sat_rx_aperture_m", p.satellite.sat_rx_aperture_m},
                    {"uplink_beam_m_at_500km", p.satellite.uplink_beam_m_at_500km},
                    {"atmos_attenuation_db", p.satellite.atmos_attenuation_db},
                    {"pointing_penalty_db", p.satellite.pointing_penalty_db},
                    {"tx_divergence_urad", p.satellite.tx_divergence_urad},
                    {"sat_tx_aperture_m", p.satellite.sat_tx_aperture_m}};
  j["planner"] = {{"source_rate_hz", p.source_rate_hz},
                  {"sifting_factor", p.sifting_factor},
                  {"fiber_direct_max_km", p.fiber_direct_max_km},
                  {"free_space_max_km", p.freespace_max_km},
                  {"max_span_km", p.max_span_km},
                  {"untrusted_max_separation_km", p.untrusted_max_separation_km},
                  {"satellite_reference_elevation_deg", p.satellite_reference_elevation_deg},
                  {"default_orbit", p.default_orbit_id},
                  {"rate_weight", p.weights.rate},
                  {"cost_weight", p.weights.cost}};
  return j;
}

Json write_simulation(const SimulationConfig& s) {
  Json j;
  j["start"] = format_iso8601(s.start);
  j["duration_s"] = s.duration_s;
  j["tick_s"] = s.tick_s;
  j["sample_interval_s"] = s.sample_interval_s;
  j["seed"] = s.seed;
  j["stochastic"] = s.stochastic;
  j["relay_block_bits"] = s.relay_block_bits;
  j["pass_step_s"] = s.pass_step_s;
  j["include_day"] = s.include_day;
  j["night_gate_free_space"] = s.night_gate_free_space;
  Json pairs = Json::array();
  for (const auto& p : s.traffic.pairs) {
    Json requests = Json::array();
    for (const auto& q : p.requests) requests.push_back({{"at_s", q.at_s}, {"bits", q.bits}});
    Json pj = {{"demand", p.demand_id}, {"bits_per_s", p.bits_per_s}};
    if (!p.requests.empty()) pj["requests"] = requests;
    pairs.push_back(pj);
  }
  Json sites = Json::array();
  for (const auto& st : s.traffic.sites) {
    sites.push_back({{"site", st.site},
                     {"demand", st.demand_id},
                     {"users", st.users},
                     {"block_bits", st.block_bits},
                     {"user_bits_per_s", st.user_bits_per_s},
                     {"contact_interval_s", st.contact_interval_s}});
  }
  j["traffic"] = {{"pairs", pairs}, {"sites", sites}};
  Json scenarios = Json::array();
  for (const auto& c : s.compromise_scenarios) {
    scenarios.push_back({{"name", c.name}, {"nodes", c.nodes}});
  }
  j["compromise_scenarios"] = scenarios;
  return j;
}

template <class T>
void check_unique(const std::vector<T>& items, const std::string& path) {
  std::set<std::string> seen;
  for (std::size_t i = 0; i < items.size(); ++i) {
    const std::string where = detail::index_path(path, i) + ".id";
    if (items[i].id.empty()) throw ConfigError(where, "empty id");
    if (!seen.insert(items[i].id).second) {
      throw ConfigError(where, "duplicate id '" + items[i].id + "'");
    }
  }
}

template <class T>
const T* find_by_id(const std::vector<T>& items, std::string_view id) noexcept {
  for (const auto& item : items) {
    if (item.id == id) return &item;
  }
  return nullptr;
}

}  // namespace

geo::GroundStation Site::station() const {
  return {id, latitude_deg, longitude_deg, min_elevation_deg, night};
}

sim::SimSettings SimulationConfig::settings() const {
  sim::SimSettings s;
  s.start = start;
  s.duration_s = duration_s;
  s.tick_s = tick_s;
  s.sample_interval_s = sample_interval_s;
  s.seed = seed;
  s.stochastic = stochastic;
  s.relay_block_bits = relay_block_bits;
  s.compromise_scenarios = compromise_scenarios;
  return s;
}

const Site* ScenarioConfig::find_site(std::string_view id) const noexcept {
  return find_by_id(sites, id);
}
const FiberRoute* ScenarioConfig::find_route(std::string_view id) const noexcept {
  return find_by_id(fiber_routes, id);
}
const BudgetLink* ScenarioConfig::find_link(std::string_view id) const noexcept {
  return find_by_id(links, id);
}
const geo::OrbitSpec* ScenarioConfig::find_orbit(std::string_view id) const noexcept {
  return find_by_id(orbits, id);
}
const DemandConfig* ScenarioConfig::find_demand(std::string_view id) const noexcept {
  return find_by_id(demands, id);
}

void ScenarioConfig::validate() const {
  if (schema_version != kConfigSchemaVersion) {
    throw ConfigError("schema_version", "unsupported version " + std::to_string(schema_version));
  }
  check_unique(sites, "sites");
  check_unique(fiber_routes, "fiber_routes");
  check_unique(links, "links");
  check_unique(orbits, "orbits");
  check_unique(demands, "demands");
  for (const auto& o : orbits) {
    if (find_site(o.id)) throw ConfigError("orbits", "id '" + o.id + "' is also a site id");
  }

  for (std::size_t i = 0; i < sites.size(); ++i) {
    checked(detail::index_path("sites", i), [&] { sites[i].station().validate(); });
  }
  for (std::size_t i = 0; i < orbits.size(); ++i) {
    checked(detail::index_path("orbits", i), [&] { orbits[i].validate(); });
  }
  auto require_site = [&](const std::string& id, const std::string& where) {
    if (!find_site(id)) throw ConfigError(where, "unknown site '" + id + "'");
  };
  for (std::size_t i = 0; i < fiber_routes.size(); ++i) {
    const auto& r = fiber_routes[i];
    const std::string p = detail::index_path("fiber_routes", i);
    require_site(r.a, p + ".a");
    require_site(r.b, p + ".b");
    if (r.a == r.b) throw ConfigError(p, "route must join two different sites");
    if (!std::isfinite(r.length_km) || r.length_km <= 0.0) {
      throw ConfigError(p + ".length_km", "must be positive");
    }
  }
  for (std::size_t i = 0; i < links.size(); ++i) {
    if (!std::isfinite(links[i].length_km) || links[i].length_km < 0.0) {
      throw ConfigError(detail::index_path("links", i) + ".length_km", "must be non-negative");
    }
  }
  for (std::size_t i = 0; i < demands.size(); ++i) {
    const auto& d = demands[i];
    const std::string p = detail::index_path("demands", i);
    require_site(d.a, p + ".a");
    require_site(d.b, p + ".b");
    if (d.a == d.b) throw ConfigError(p, "demand end points must differ");
    if (d.fiber_route) {
      const FiberRoute* r = find_route(*d.fiber_route);
      if (!r) throw ConfigError(p + ".fiber_route", "unknown fiber route '" + *d.fiber_route + "'");
      if (!((r->a == d.a && r->b == d.b) || (r->a == d.b && r->b == d.a))) {
        throw ConfigError(p + ".fiber_route", "route '" + r->id + "' does not join " + d.a +
                                                  " and " + d.b);
      }
    }
    if (!d.relays.empty() && !d.fiber_route) {
      throw ConfigError(p + ".relays", "relay offsets need a fiber_route");
    }
    for (std::size_t k = 0; k < d.relays.size(); ++k) {
      require_site(d.relays[k].site, detail::index_path(p + ".relays", k) + ".site");
    }
    if (d.orbit && !find_orbit(*d.orbit)) {
      throw ConfigError(p + ".orbit", "unknown orbit '" + *d.orbit + "'");
    }
  }
  const auto resolved = planner_demands();
  for (std::size_t i = 0; i < resolved.size(); ++i) {
    checked(detail::index_path("demands", i), [&] { resolved[i].validate(); });
  }

  checked("parameters", [&] { parameters.validate(); });
  if (!parameters.default_orbit_id.empty() && !find_orbit(parameters.default_orbit_id)) {
    throw ConfigError("parameters.planner.default_orbit",
                      "unknown orbit '" + parameters.default_orbit_id + "'");
  }

  checked("simulation", [&] { simulation.settings().validate(); });
  checked("simulation.traffic", [&] { simulation.traffic.validate(); });
  if (!std::isfinite(simulation.pass_step_s) || simulation.pass_step_s <= 0.0) {
    throw ConfigError("simulation.pass_step_s", "must be positive");
  }
  for (std::size_t i = 0; i < simulation.traffic.pairs.size(); ++i) {
    const auto& id = simulation.traffic.pairs[i].demand_id;
    if (!find_demand(id)) {
      throw ConfigError(detail::index_path("simulation.traffic.pairs", i) + ".demand",
                        "unknown demand '" + id + "'");
    }
  }
  for (std::size_t i = 0; i < simulation.traffic.sites.size(); ++i) {
    const auto& st = simulation.traffic.sites[i];
    const std::string p = detail::index_path("simulation.traffic.sites", i);
    require_site(st.site, p + ".site");
    const DemandConfig* d = find_demand(st.demand_id);
    if (!d) throw ConfigError(p + ".demand", "unknown demand '" + st.demand_id + "'");
    if (d->a != st.site && d->b != st.site) {
      throw ConfigError(p + ".site", "'" + st.site + "' is not an end point of " + d->id);
    }
  }
  for (std::size_t i = 0; i < simulation.compromise_scenarios.size(); ++i) {
    const auto& c = simulation.compromise_scenarios[i];
    const std::string p = detail::index_path("simulation.compromise_scenarios", i);
    if (c.name.empty()) throw ConfigError(p + ".name", "empty name");
    if (c.nodes.empty()) throw ConfigError(p + ".nodes", "no nodes");
  }
}

std::vector<plan::Demand> ScenarioConfig::planner_demands() const {
  std::vector<plan::Demand> out;
  for (const auto& d : demands) {
    plan::Demand p;
    p.id = d.id;
    p.a = d.a;
    p.b = d.b;
    if (d.distance_km) {
      p.distance_km = *d.distance_km;
    } else {
      const Site* a = find_site(d.a);
      const Site* b = find_site(d.b);
      if (a && b) {
        p.distance_km = geo::great_circle_km(a->latitude_deg, a->longitude_deg, b->latitude_deg,
                                             b->longitude_deg);
      }
    }
    if (d.fiber_route) {
      if (const FiberRoute* r = find_route(*d.fiber_route)) {
        p.route_km = r->length_km;
        p.has_fiber = true;
      }
    }
    p.has_los = d.line_of_sight;
    p.transoceanic = d.transoceanic;
    p.untrusted_required = d.untrusted_required;
    if (!d.relays.empty()) {
      std::vector<double> offsets;
      for (const auto& r : d.relays) {
        offsets.push_back(r.offset_km);
        p.relay_ids.push_back(r.site);
      }
      p.relay_offsets_km = std::move(offsets);
    }
    p.orbit_id = d.orbit;
    out.push_back(std::move(p));
  }
  return out;
}

ScenarioConfig parse_config(std::string_view text, const std::string& source) {
  const Json root = detail::parse_text(text, source);
  ScenarioConfig c;
  ObjectReader r(root, "");
  r.into("schema_version", c.schema_version);
  r.into("name", c.name);
  r.into("description", c.description);
  r.each("sites", [&](ObjectReader& s) { c.sites.push_back(read_site(s)); });
  r.each("fiber_routes", [&](ObjectReader& s) {
    c.fiber_routes.push_back({s.required<std::string>("id"), s.required<std::string>("a"),
                              s.required<std::string>("b"), s.required<double>("length_km")});
  });
  r.each("links", [&](ObjectReader& s) {
    c.links.push_back({s.required<std::string>("id"), s.required<double>("length_km")});
  });
  r.each("orbits", [&](ObjectReader& s) { c.orbits.push_back(read_orbit(s)); });
  r.each("demands", [&](ObjectReader& s) { c.demands.push_back(read_demand(s)); });
  r.nested("parameters", [&](ObjectReader& s) { read_parameters(s, c.parameters); });
  r.nested("simulation", [&](ObjectReader& s) { read_simulation(s, c.simulation); });
  r.done();
  c.validate();
  return c;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path.string(), "cannot open file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ScenarioConfig load_config(const std::filesystem::path& path) {
  return parse_config(read_file(path), path.string());
}

std::string serialize_config(const ScenarioConfig& c) {
  Json j;
  j["schema_version"] = c.schema_version;
  j["name"] = c.name;
  j["description"] = c.description;
  Json sites = Json::array();
  for (const auto& s : c.sites) {
    sites.push_back({{"id", s.id},
                     {"role", to_string(s.role)},
                     {"latitude_deg", s.latitude_deg},
                     {"longitude_deg", s.longitude_deg},
                     {"min_elevation_deg", s.min_elevation_deg},
                     {"night", write_night(s.night)}});
  }
  j["sites"] = sites;
  Json routes = Json::array();
  for (const auto& r : c.fiber_routes) {
    routes.push_back({{"id", r.id}, {"a", r.a}, {"b", r.b}, {"length_km", r.length_km}});
  }
  j["fiber_routes"] = routes;
  Json links = Json::array();
  for (const auto& l : c.links) links.push_back({{"id", l.id}, {"length_km", l.length_km}});
  j["links"] = links;
  Json orbits = Json::array();
  for (const auto& o : c.orbits) {
    orbits.push_back({{"id", o.id},
                      {"altitude_km", o.altitude_km},
                      {"inclination_deg", o.inclination_deg},
                      {"raan_deg", o.raan_deg},
                      {"initial_phase_deg", o.initial_phase_deg},
                      {"epoch", format_iso8601(o.epoch)}});
  }
  j["orbits"] = orbits;
  Json demands = Json::array();
  for (const auto& d : c.demands) {
    Json dj = {{"id", d.id}, {"a", d.a}, {"b", d.b}};
    if (d.distance_km) dj["distance_km"] = *d.distance_km;
    if (d.fiber_route) dj["fiber_route"] = *d.fiber_route;
    dj["line_of_sight"] = d.line_of_sight;
    dj["transoceanic"] = d.transoceanic;
    dj["untrusted_required"] = d.untrusted_required;
    if (!d.relays.empty()) {
      Json relays = Json::array();
      for (const auto& r : d.relays) relays.push_back({{"site", r.site}, {"offset_km", r.offset_km}});
      dj["relays"] = relays;
    }
    if (d.orbit) dj["orbit"] = *d.orbit;
    demands.push_back(dj);
  }
  j["demands"] = demands;
  j["parameters"] = write_parameters(c.parameters);
  j["simulation"] = write_simulation(c.simulation);
  return j.dump(2) + "\n";
}

}  // namespace qkdnet::config
