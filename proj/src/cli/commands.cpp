#include "qkdnet/cli.hpp"

#include <unistd.h>

#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "qkdnet/errors.hpp"
#include "qkdnet/serialize.hpp"

namespace qkdnet::cli {

namespace {

struct Globals {
  std::string config_path;
  std::string output_dir;
  std::string format = "table";
  std::uint64_t seed = 0;
  bool seed_set = false;
  bool include_day = false;
};

// Fixed-width text table; numbers are formatted by the caller.
class Table {
 public:
  explicit Table(std::vector<std::string> header) { rows_.push_back(std::move(header)); }
  void add(std::vector<std::string> row) { rows_.push_back(std::move(row)); }

  std::string str() const {
    std::vector<std::size_t> width(rows_.front().size(), 0);
    for (const auto& r : rows_) {
      for (std::size_t i = 0; i < r.size() && i < width.size(); ++i) {
        width[i] = std::max(width[i], r[i].size());
      }
    }
    std::ostringstream os;
    for (const auto& r : rows_) {
      for (std::size_t i = 0; i < r.size(); ++i) {
        os << (i ? "  " : "");
        if (i + 1 < r.size()) {
          os << std::left << std::setw(static_cast<int>(width[i])) << r[i];
        } else {
          os << r[i];
        }
      }
      os << "\n";
    }
    return os.str();
  }

 private:
  std::vector<std::vector<std::string>> rows_;
};

std::string fixed(double v, int digits) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << v;
  return os.str();
}

std::string rate_text(double bps) {
  std::ostringstream os;
  os << std::setprecision(4) << bps;
  return os.str();
}

config::ScenarioConfig load(const Globals& g) {
  std::string path = g.config_path;
  if (path.empty()) {
    if (const char* env = std::getenv(kConfigEnv)) path = env;
  }
  if (path.empty()) {
    throw ConfigError("--config", std::string("no configuration given (use --config or ") +
                                      kConfigEnv + ")");
  }
  return config::load_config(path);
}

// Prints the selected format and, with --output, writes both file forms.
void emit(const Globals& g, std::ostream& out, const std::string& base, const io::Json& json,
          const std::string& csv, const std::string& table) {
  if (!g.output_dir.empty()) {
    const std::filesystem::path dir(g.output_dir);
    std::filesystem::create_directories(dir);
    write_atomic(dir / (base + ".json"), io::dump(json));
    write_atomic(dir / (base + ".csv"), csv);
  }
  if (g.format == "json") {
    out << io::dump(json);
  } else if (g.format == "csv") {
    out << csv;
  } else {
    out << table;
  }
}

// ---- budget

std::string budget_csv(const std::vector<BudgetRow>& rows) {
  std::string out = "technology,length_km,component,loss_db\n";
  for (const auto& r : rows) {
    const std::string head = r.technology + "," + io::format_number(r.length_km) + ",";
    for (const auto& c : r.budget.components()) out += head + c.source + "," + io::format_number(c.db) + "\n";
    out += head + "total," + io::format_number(r.budget.total_db()) + "\n";
  }
  return out;
}

int cmd_budget(const Globals& g, const std::string& selector, std::ostream& out) {
  const auto cfg = load(g);
  double length = 0.0;
  if (const auto* l = cfg.find_link(selector)) {
    length = l->length_km;
  } else if (const auto* r = cfg.find_route(selector)) {
    length = r->length_km;
  } else if (cfg.find_demand(selector)) {
    for (const auto& d : cfg.planner_demands()) {
      if (d.id == selector) length = d.distance_km;
    }
  } else {
    throw ConfigError("--link", "unknown link '" + selector + "'");
  }
  const auto rows = budget_rows(length, cfg.parameters);

  io::Json jrows = io::Json::array();
  Table table({"technology", "length_km", "total_db", "transmittance", "key_rate_bps", "components"});
  for (const auto& r : rows) {
    io::Json j = {{"technology", r.technology}, {"length_km", r.length_km}};
    const io::Json body = io::budget_to_json(r.budget);
    for (const auto& [k, v] : body.items()) j[k] = v;
    j["key_rate_bps"] = r.key_rate_bps;
    jrows.push_back(j);
    std::string comps;
    for (const auto& c : r.budget.components()) {
      comps += (comps.empty() ? "" : " ") + c.source + "=" + fixed(c.db, 2);
    }
    std::ostringstream tr;
    tr << std::setprecision(4) << r.budget.transmittance();
    table.add({r.technology, fixed(r.length_km, 1), fixed(r.budget.total_db(), 2), tr.str(),
               rate_text(r.key_rate_bps), comps});
  }
  const io::Json doc = {{"schema_version", io::kSchemaVersion},
                        {"link", selector},
                        {"length_km", length},
                        {"rows", jrows}};
  emit(g, out, "budget", doc, budget_csv(rows), table.str());
  return kExitOk;
}

// ---- plan

std::string plan_table(const plan::DeploymentPlan& p) {
  Table t({"demand", "distance_km", "segment", "technology", "relays", "key_rate_bps",
           "worst_link_db"});
  for (const auto& e : p.entries) {
    double worst = 0.0;
    for (const auto& b : e.budgets) worst = std::max(worst, b.budget.total_db());
    t.add({e.demand.id, fixed(e.demand.distance_km, 1), std::string(plan::to_string(e.segment)),
           std::string(plan::to_string(e.technology)), std::to_string(e.relay_offsets_km.size()),
           rate_text(e.key_rate_bps), fixed(worst, 2)});
  }
  std::string s = t.str();
  for (const auto& i : p.infeasible) s += "infeasible " + i.demand_id + ": " + i.reason + "\n";
  return s;
}

int cmd_plan(const Globals& g, std::ostream& out, std::ostream& err) {
  const auto cfg = load(g);
  const auto demands = cfg.planner_demands();
  const auto p = plan::select_deployment(demands, cfg.parameters);
  emit(g, out, "plan", io::plan_to_json(p), io::plan_csv(p), plan_table(p));
  if (!p.all_feasible()) {
    for (const auto& i : p.infeasible) err << "infeasible demand " << i.demand_id << ": " << i.reason << "\n";
    return kExitInfeasible;
  }
  return kExitOk;
}

// ---- passes

struct PassOptions {
  std::string orbit;
  std::vector<std::string> stations;
  std::string mode = "auto";
  std::string start;
  double duration_s = -1.0;
};

int cmd_passes(const Globals& g, const PassOptions& o, std::ostream& out) {
  const auto cfg = load(g);
  const auto* orbit = cfg.find_orbit(o.orbit);
  if (!orbit) throw ConfigError("--orbit", "unknown orbit '" + o.orbit + "'");
  std::vector<geo::GroundStation> stations;
  for (const auto& id : o.stations) {
    const auto* s = cfg.find_site(id);
    if (!s) throw ConfigError("--station", "unknown station '" + id + "'");
    stations.push_back(s->station());
  }
  Timestamp start = cfg.simulation.start;
  if (!o.start.empty()) {
    try {
      start = parse_iso8601(o.start);
    } catch (const DomainError& e) {
      throw ConfigError("--start", e.what());
    }
  }
  const double duration = o.duration_s >= 0.0 ? o.duration_s : cfg.simulation.duration_s;
  const geo::TimeSpan span{start, start + duration};
  const bool include_day = g.include_day || cfg.simulation.include_day;
  const double step = cfg.simulation.pass_step_s;

  std::string mode = o.mode;
  if (mode == "auto") mode = stations.size() == 2 ? "simultaneous" : "single";
  std::vector<geo::PassWindow> windows;
  if (mode == "single") {
    if (stations.size() != 1) throw ConfigError("--station", "single mode takes one station");
    windows = geo::pass_windows(*orbit, stations[0], span, step);
    if (!include_day) windows = geo::night_filter(windows, stations[0], *orbit);
  } else if (mode == "simultaneous") {
    if (stations.size() != 2) throw ConfigError("--station", "simultaneous mode takes two stations");
    windows = geo::simultaneous_windows(*orbit, stations[0], stations[1], span, step, include_day);
  } else {
    if (stations.empty()) throw ConfigError("--station", "sequential mode needs stations");
    windows = geo::sequential_contact_plan(*orbit, stations, span, step, include_day);
  }

  Table t({"station", "peer", "start_utc", "end_utc", "duration_s", "max_elev_deg",
           "min_range_km"});
  double total = 0.0;
  for (const auto& w : windows) {
    t.add({w.station_id, w.peer_station_id.empty() ? "-" : w.peer_station_id,
           format_iso8601(w.start), format_iso8601(w.end), fixed(w.duration_s(), 0),
           fixed(w.max_elevation_deg, 2), fixed(w.min_slant_range_km, 1)});
    total += w.duration_s();
  }
  const std::string table = t.str() + std::to_string(windows.size()) + " window(s), " +
                            fixed(total, 0) + " s total" +
                            (include_day ? "" : " (night only)") + "\n";
  emit(g, out, "passes", io::passes_to_json(windows), io::passes_csv(windows), table);
  return kExitOk;
}

// ---- simulate

struct SimOptions {
  std::string plan_path;
  std::string contacts_path;
  double duration_s = -1.0;
};

std::string sim_table(const sim::SimReport& r) {
  Table t({"pool", "level", "generated_bits", "consumed_bits", "available_bits"});
  for (const auto& p : r.pools) {
    t.add({p.id, std::string(sim::to_string(p.level)), std::to_string(p.generated),
           std::to_string(p.consumed), std::to_string(p.available)});
  }
  std::ostringstream os;
  os << t.str() << "total generated " << r.total_generated << " bits, consumed "
     << r.total_consumed << " bits, available " << r.total_available << " bits\n"
     << r.events_processed << " events, " << r.outages.size() << " outage interval(s), "
     << r.announcements.size() << " relay announcement(s)\n";
  for (const auto& l : r.leakage) {
    os << "scenario " << l.scenario << ": " << l.leaked_pairs.size() << " leaked pair(s), "
       << l.exposed_relayed_bits << " relayed bits exposed\n";
  }
  return os.str();
}

int cmd_simulate(const Globals& g, const SimOptions& o, std::ostream& out, std::ostream& err) {
  const auto cfg = load(g);
  plan::DeploymentPlan p;
  if (!o.plan_path.empty()) {
    p = io::parse_plan(config::read_file(o.plan_path), o.plan_path);
    check_plan_matches(cfg, p);
  } else {
    const auto demands = cfg.planner_demands();
    p = plan::select_deployment(demands, cfg.parameters);
  }
  for (const auto& i : p.infeasible) {
    err << "note: demand " << i.demand_id << " is infeasible and not simulated\n";
  }

  sim::SimSettings settings = cfg.simulation.settings();
  if (g.seed_set) settings.seed = g.seed;
  if (o.duration_s >= 0.0) settings.duration_s = o.duration_s;
  config::ScenarioConfig span_cfg = cfg;
  span_cfg.simulation.duration_s = settings.duration_s;

  const bool include_day = g.include_day || cfg.simulation.include_day;
  const sim::ContactPlans contacts =
      o.contacts_path.empty()
          ? compute_contacts(span_cfg, p, include_day)
          : io::parse_contacts(config::read_file(o.contacts_path), o.contacts_path);

  const sim::SimReport report = sim::run(p, cfg.simulation.traffic, contacts, settings);
  const io::Json json = io::report_to_json(report);
  if (!g.output_dir.empty()) {
    const std::filesystem::path dir(g.output_dir);
    std::filesystem::create_directories(dir);
    write_atomic(dir / "report.json", io::dump(json));
    write_atomic(dir / "timeseries.csv", io::timeseries_csv(report));
    write_atomic(dir / "outages.csv", io::outages_csv(report));
    write_atomic(dir / "contacts.json", io::dump(io::contacts_to_json(contacts)));
  }
  if (g.format == "json") {
    out << io::dump(json);
  } else if (g.format == "csv") {
    out << io::timeseries_csv(report);
  } else {
    out << sim_table(report);
  }
  return kExitOk;
}

}  // namespace

std::vector<BudgetRow> budget_rows(double length_km, const plan::PlannerParams& params) {
  params.validate();
  const double source = params.source_rate_hz;
  const double sift = params.sifting_factor;
  std::vector<BudgetRow> rows;
  auto add = [&](std::string tech, link::LinkBudget b) {
    const double rate = link::key_rate_estimate(source, b.total_db(), sift);
    rows.push_back({std::move(tech), length_km, std::move(b), rate});
  };
  add("fiber", link::fiber_loss(length_km, params.fiber));
  add("free_space", link::terrestrial_freespace_loss(length_km, params.freespace));
  if (length_km > 0.0) {
    link::SatLinkParams down = params.satellite;
    down.direction = link::Direction::Downlink;
    link::SatLinkParams up = params.satellite;
    up.direction = link::Direction::Uplink;
    add("satellite_downlink", link::downlink_loss(length_km, down));
    add("satellite_uplink", link::uplink_loss(length_km, up));
  }
  return rows;
}

sim::ContactPlans compute_contacts(const config::ScenarioConfig& cfg,
                                   const plan::DeploymentPlan& p, bool include_day) {
  const geo::TimeSpan span{cfg.simulation.start, cfg.simulation.start + cfg.simulation.duration_s};
  const double step = cfg.simulation.pass_step_s;
  const auto& sat = cfg.parameters.satellite;
  const double source = cfg.parameters.source_rate_hz;
  const double sift = cfg.parameters.sifting_factor;

  auto station_of = [&](const std::string& id) {
    const auto* s = cfg.find_site(id);
    if (!s) throw ConfigError("plan", "site '" + id + "' is not in the configuration");
    return s->station();
  };
  auto entry_of = [&](const std::string& demand) -> const plan::PlannedDemand& {
    for (const auto& e : p.entries) {
      if (e.demand.id == demand) return e;
    }
    throw ConfigError("plan", "no entry for demand '" + demand + "'");
  };

  sim::ContactPlans contacts;
  for (const auto& l : sim::links_for(p)) {
    const auto& e = entry_of(l.demand_id);
    if (e.technology == plan::TechnologyKind::FreeSpaceTerrestrial) {
      if (cfg.simulation.night_gate_free_space && !include_day) {
        auto& windows = contacts[l.id];
        for (const auto& n : geo::night_intervals(station_of(e.demand.a), span)) {
          windows.push_back({n, std::nullopt});
        }
      }
      continue;
    }
    if (!l.windowed) continue;
    const auto* orbit = cfg.find_orbit(e.orbit_id);
    if (!orbit) {
      throw ConfigError("plan", "demand '" + e.demand.id + "' uses orbit '" + e.orbit_id +
                                    "', which the configuration does not declare");
    }
    auto& windows = contacts[l.id];
    if (e.technology == plan::TechnologyKind::SatelliteUntrusted) {
      const auto passes = geo::simultaneous_windows(*orbit, station_of(e.demand.a),
                                                    station_of(e.demand.b), span, step, include_day);
      for (const auto& w : passes) {
        const auto arm = plan::satellite_arm(w.min_slant_range_km, sat);
        const double rate =
            relay::untrusted_establish(arm, arm, plan::untrusted_kind(sat), source, sift).rate_bps;
        windows.push_back({{w.start, w.end}, rate});
      }
    } else {
      const auto station = station_of(l.a == e.orbit_id ? l.b : l.a);
      auto passes = geo::pass_windows(*orbit, station, span, step);
      if (!include_day) passes = geo::night_filter(passes, station, *orbit);
      for (const auto& w : passes) {
        const auto arm = plan::satellite_arm(w.min_slant_range_km, sat);
        windows.push_back({{w.start, w.end}, link::key_rate_estimate(source, arm.total_db(), sift)});
      }
    }
  }
  return contacts;
}

void check_plan_matches(const config::ScenarioConfig& cfg, const plan::DeploymentPlan& p) {
  for (const auto& e : p.entries) {
    const auto* d = cfg.find_demand(e.demand.id);
    if (!d) throw ConfigError("plan", "demand '" + e.demand.id + "' is not in the configuration");
    if (d->a != e.demand.a || d->b != e.demand.b) {
      throw ConfigError("plan", "end points of demand '" + e.demand.id +
                                    "' differ from the configuration");
    }
  }
  for (const auto& i : p.infeasible) {
    if (!cfg.find_demand(i.demand_id)) {
      throw ConfigError("plan", "demand '" + i.demand_id + "' is not in the configuration");
    }
  }
}

void write_atomic(const std::filesystem::path& path, std::string_view content) {
  auto tmp = path;
  tmp += ".tmp-" + std::to_string(::getpid());
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw ConfigError(path.string(), "cannot write output file");
    f.write(content.data(), static_cast<std::streamsize>(content.size()));
    f.close();
    if (!f) {
      std::filesystem::remove(tmp);
      throw ConfigError(path.string(), "cannot write output file");
    }
  }
  std::filesystem::rename(tmp, path);
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"qkdnet: QKD network link budgets, deployment planning, satellite passes and "
               "key-pool simulation"};
  app.fallthrough();
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config_path,
                 std::string("scenario configuration (default: $") + kConfigEnv + ")");
  app.add_option("--output", g.output_dir, "directory for JSON and CSV output files");
  app.add_option("--format", g.format, "stdout format")
      ->check(CLI::IsMember({"json", "csv", "table"}));
  auto* seed = app.add_option("--seed", g.seed, "override the simulation seed");
  app.add_flag("--include-day", g.include_day, "keep daytime pass windows");

  auto* budget = app.add_subcommand("budget", "itemized link budgets per technology");
  std::string link_id;
  budget->add_option("--link", link_id, "link, fiber route or demand id")->required();

  auto* planc = app.add_subcommand("plan", "select a technology for every demand");

  auto* passes = app.add_subcommand("passes", "satellite pass windows");
  PassOptions po;
  passes->add_option("--orbit", po.orbit, "orbit id")->required();
  passes->add_option("--station", po.stations, "station id (repeatable)")->required();
  passes->add_option("--mode", po.mode, "single, simultaneous or sequential")
      ->check(CLI::IsMember({"auto", "single", "simultaneous", "sequential"}));
  passes->add_option("--start", po.start, "span start, YYYY-MM-DDTHH:MM:SSZ");
  passes->add_option("--duration-s", po.duration_s, "span length in seconds")
      ->check(CLI::NonNegativeNumber);

  auto* simulate = app.add_subcommand("simulate", "run the key-pool simulation");
  SimOptions so;
  simulate->add_option("--plan", so.plan_path, "plan JSON (default: plan the configuration)");
  simulate->add_option("--contacts", so.contacts_path,
                       "contact-plan JSON (default: computed from the orbits)");
  simulate->add_option("--duration-s", so.duration_s, "override the simulated duration")
      ->check(CLI::NonNegativeNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInput;
  }
  g.seed_set = seed->count() > 0;

  try {
    if (*budget) return cmd_budget(g, link_id, out);
    if (*planc) return cmd_plan(g, out, err);
    if (*passes) return cmd_passes(g, po, out);
    if (*simulate) return cmd_simulate(g, so, out, err);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const DomainError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitInput;
}

}  // namespace qkdnet::cli
