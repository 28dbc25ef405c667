#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <sstream>

#include "doctest.h"
#include "qkdnet/cli.hpp"
#include "qkdnet/config.hpp"
#include "qkdnet/serialize.hpp"

namespace fs = std::filesystem;
using namespace qkdnet;
using cli::kExitInfeasible;
using cli::kExitInput;
using cli::kExitOk;

namespace {

struct Result {
  int code = -1;
  std::string out;
  std::string err;
};

Result qkdnet_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "qkdnet");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  Result r;
  r.code = cli::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string scenario(const std::string& name) {
  return (fs::path(QKDNET_SCENARIO_DIR) / (name + ".json")).string();
}

// Fresh scratch directory per test case.
struct Scratch {
  fs::path dir;
  Scratch() {
    static int n = 0;
    dir = fs::temp_directory_path() /
          ("qkdnet_cli_" + std::to_string(::getpid()) + "_" + std::to_string(n++));
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  ~Scratch() { fs::remove_all(dir); }
  std::string file(const std::string& name, const std::string& text) const {
    const auto p = dir / name;
    cli::write_atomic(p, text);
    return p.string();
  }
  std::string path(const std::string& name) const { return (dir / name).string(); }
};

io::Json json_of(const std::string& text) { return io::Json::parse(text); }

const char* kFourDemands = R"({
  "sites": [
    {"id": "a1", "latitude_deg": 30, "longitude_deg": 110},
    {"id": "b1", "latitude_deg": 30.3, "longitude_deg": 110},
    {"id": "a2", "latitude_deg": 31, "longitude_deg": 110},
    {"id": "b2", "latitude_deg": 31.05, "longitude_deg": 110},
    {"id": "a3", "latitude_deg": 20, "longitude_deg": 100},
    {"id": "b3", "latitude_deg": 35, "longitude_deg": 105},
    {"id": "a4", "latitude_deg": 40, "longitude_deg": -74},
    {"id": "b4", "latitude_deg": 51.5, "longitude_deg": 0}
  ],
  "fiber_routes": [
    {"id": "f1", "a": "a1", "b": "b1", "length_km": 40},
    {"id": "f3", "a": "a3", "b": "b3", "length_km": 2000}
  ],
  "demands": [
    {"id": "access", "a": "a1", "b": "b1", "distance_km": 40, "fiber_route": "f1"},
    {"id": "rooftop", "a": "a2", "b": "b2", "distance_km": 8, "line_of_sight": true},
    {"id": "backbone", "a": "a3", "b": "b3", "distance_km": 2000, "fiber_route": "f3"},
    {"id": "ocean", "a": "a4", "b": "b4", "distance_km": 8000, "transoceanic": true}
  ]
})";

}  // namespace

TEST_CASE("budget rows") {
  auto r = qkdnet_cli({"--config", scenario("fiber_access"), "--format", "json", "budget", "--link",
                       "fiber_600km"});
  REQUIRE(r.code == kExitOk);
  auto j = json_of(r.out);
  CHECK(j["schema_version"] == 1);
  CHECK(j["rows"][0]["technology"] == "fiber");
  CHECK(j["rows"][0]["total_db"].get<double>() == 120.0);

  r = qkdnet_cli({"budget", "--link", "downlink_1200km", "--config", scenario("fiber_access"),
                  "--format", "json"});
  REQUIRE(r.code == kExitOk);
  j = json_of(r.out);
  bool seen = false;
  for (const auto& row : j["rows"]) {
    if (row["technology"] == "satellite_downlink") {
      seen = true;
      CHECK(row["total_db"].get<double>() <= 30.0);
    }
  }
  CHECK(seen);

  r = qkdnet_cli({"--config", scenario("fiber_access"), "--format", "json", "budget", "--link", "zero"});
  REQUIRE(r.code == kExitOk);
  j = json_of(r.out);
  CHECK(!j["rows"].empty());
  for (const auto& row : j["rows"]) CHECK(row["total_db"].get<double>() == 0.0);

  r = qkdnet_cli({"--config", scenario("fiber_access"), "budget", "--link", "nowhere"});
  CHECK(r.code == kExitInput);
  CHECK(r.err.find("nowhere") != std::string::npos);

  r = qkdnet_cli({"--config", scenario("fiber_access"), "--format", "csv", "budget", "--link",
                  "fiber_600km"});
  CHECK(r.out.rfind("technology,length_km,component,loss_db\n", 0) == 0);
  CHECK(r.out.find("fiber,600,total,120\n") != std::string::npos);
}

TEST_CASE("plan: four-demand mapping, files and exit codes") {
  Scratch s;
  const auto cfg = s.file("four.json", kFourDemands);
  auto r = qkdnet_cli({"--config", cfg, "--output", s.path("out"), "plan"});
  REQUIRE(r.code == kExitOk);
  const auto p = io::parse_plan(config::read_file(s.path("out/plan.json")));
  REQUIRE(p.entries.size() == 4);
  CHECK(p.entries[0].technology == plan::TechnologyKind::FiberDirect);
  CHECK(p.entries[1].technology == plan::TechnologyKind::FreeSpaceTerrestrial);
  CHECK(p.entries[2].technology == plan::TechnologyKind::FiberTrustedRelay);
  CHECK(p.entries[2].relay_offsets_km.size() == 19);
  CHECK(p.entries[3].technology == plan::TechnologyKind::SatelliteTrustedRelay);
  CHECK(fs::exists(s.path("out/plan.csv")));
  for (const auto& e : fs::directory_iterator(s.path("out"))) {
    CHECK(e.path().string().find(".tmp") == std::string::npos);
  }
  CHECK(r.out.find("fiber_trusted_relay") != std::string::npos);

  // Same inputs, same bytes.
  const std::string first = config::read_file(s.path("out/plan.json"));
  REQUIRE(qkdnet_cli({"--config", cfg, "--output", s.path("out"), "plan"}).code == kExitOk);
  CHECK(config::read_file(s.path("out/plan.json")) == first);

  const auto empty = s.file("empty.json", R"({"demands": []})");
  r = qkdnet_cli({"--config", empty, "--format", "json", "plan"});
  CHECK(r.code == kExitOk);
  CHECK(json_of(r.out)["entries"].empty());

  const auto lost = s.file("lost.json", R"({
    "sites": [{"id": "ny", "latitude_deg": 40.7, "longitude_deg": -74.0},
              {"id": "ldn", "latitude_deg": 51.5, "longitude_deg": -0.1}],
    "demands": [{"id": "atlantic", "a": "ny", "b": "ldn", "transoceanic": true,
                 "untrusted_required": true}]})");
  r = qkdnet_cli({"--config", lost, "plan"});
  CHECK(r.code == kExitInfeasible);
  CHECK(r.err.find("atlantic") != std::string::npos);
  CHECK(r.err.find("1000 km") != std::string::npos);
}

TEST_CASE("input errors exit 2 with diagnostics") {
  Scratch s;
  auto r = qkdnet_cli({"--config", s.file("bad.json", "{\n  \"demands\": [\n    oops\n  ]\n}\n"), "plan"});
  CHECK(r.code == kExitInput);
  CHECK(r.err.find("bad.json:3:") != std::string::npos);

  r = qkdnet_cli({"--config", s.file("unknown.json", R"({"demandz": []})"), "plan"});
  CHECK(r.code == kExitInput);
  CHECK(r.err.find("demandz") != std::string::npos);

  r = qkdnet_cli({"--config", s.path("missing.json"), "plan"});
  CHECK(r.code == kExitInput);

  ::unsetenv(cli::kConfigEnv);
  r = qkdnet_cli({"plan"});
  CHECK(r.code == kExitInput);
  CHECK(r.err.find(cli::kConfigEnv) != std::string::npos);

  ::setenv(cli::kConfigEnv, scenario("fiber_access").c_str(), 1);
  r = qkdnet_cli({"plan"});
  ::unsetenv(cli::kConfigEnv);
  CHECK(r.code == kExitOk);

  CHECK(qkdnet_cli({"frobnicate"}).code == kExitInput);
  CHECK(qkdnet_cli({}).code == kExitInput);
  CHECK(qkdnet_cli({"--format", "xml", "plan"}).code == kExitInput);
  r = qkdnet_cli({"--help"});
  CHECK(r.code == kExitOk);
  CHECK(r.out.find("simulate") != std::string::npos);
}

TEST_CASE("passes") {
  Scratch s;
  // A geostationary satellite above the station's meridian is always visible.
  const double alt = geo::geostationary_altitude_km();
  const Timestamp t0 = parse_iso8601("2025-03-01T00:00:00Z");
  const geo::OrbitSpec gso{"gso", alt, 0.0, 0.0, 0.0, t0};
  const double lon = geo::propagate(gso, t0).longitude_deg;
  std::ostringstream geo_cfg;
  geo_cfg.precision(17);
  geo_cfg << R"({"sites": [{"id": "st", "latitude_deg": 20, "longitude_deg": )" << lon
          << R"(}], "orbits": [{"id": "gso", "altitude_km": )" << alt
          << R"(, "epoch": "2025-03-01T00:00:00Z"}], "simulation": {"start": "2025-03-01T00:00:00Z"}})";
  const auto gcfg = s.file("geo.json", geo_cfg.str());
  auto r = qkdnet_cli({"--config", gcfg, "--include-day", "--format", "json", "passes", "--orbit",
                       "gso", "--station", "st", "--duration-s", "43200"});
  REQUIRE(r.code == kExitOk);
  auto j = json_of(r.out);
  REQUIRE(j["windows"].size() == 1);
  CHECK(j["windows"][0]["start"] == "2025-03-01T00:00:00Z");
  CHECK(j["windows"][0]["end"] == "2025-03-01T12:00:00Z");
  CHECK(j["total_duration_s"].get<double>() == 43200.0);

  // 3000 km apart with a 30 degree mask: no common visibility at 500 km.
  const auto far = s.file("far.json", R"({
    "sites": [{"id": "w", "latitude_deg": 0, "longitude_deg": 0, "min_elevation_deg": 30},
              {"id": "e", "latitude_deg": 0, "longitude_deg": 26.979, "min_elevation_deg": 30}],
    "orbits": [{"id": "leo", "altitude_km": 500, "inclination_deg": 0, "epoch": "2025-01-01T00:00:00Z"}]})");
  r = qkdnet_cli({"--config", far, "--include-day", "--format", "json", "passes", "--orbit", "leo",
                  "--station", "w", "--station", "e"});
  REQUIRE(r.code == kExitOk);
  CHECK(json_of(r.out)["windows"].empty());
  r = qkdnet_cli({"--config", far, "--include-day", "--format", "json", "passes", "--orbit", "leo",
                  "--station", "w"});
  CHECK(!json_of(r.out)["windows"].empty());

  // Night-only windows are a subset of all windows.
  const auto m = scenario("micius_untrusted");
  for (const char* station : {"delingha", "lijiang"}) {
    const auto night = json_of(qkdnet_cli({"--config", m, "--format", "json", "passes", "--orbit",
                                           "micius", "--station", station})
                                   .out);
    const auto all = json_of(qkdnet_cli({"--config", m, "--format", "json", "--include-day",
                                         "passes", "--orbit", "micius", "--station", station})
                                 .out);
    CHECK(all["total_duration_s"].get<double>() >= night["total_duration_s"].get<double>());
    CHECK(all["windows"].size() >= night["windows"].size());
  }
  r = qkdnet_cli({"--config", m, "--format", "csv", "passes", "--orbit", "micius", "--station",
                  "delingha", "--station", "lijiang", "--mode", "sequential"});
  CHECK(r.code == kExitOk);
  CHECK(r.out.rfind("station,peer_station,start_utc,end_utc,duration_s,max_elevation_deg,", 0) == 0);

  CHECK(qkdnet_cli({"--config", m, "passes", "--orbit", "micius", "--station", "nowhere"}).code ==
        kExitInput);
  CHECK(qkdnet_cli({"--config", m, "passes", "--orbit", "nothing", "--station", "delingha"}).code ==
        kExitInput);
  CHECK(qkdnet_cli({"--config", m, "passes", "--orbit", "micius", "--station", "delingha",
                    "--mode", "simultaneous"})
            .code == kExitInput);
}

TEST_CASE("simulate: trusted-relay backbone end to end") {
  Scratch s;
  const auto cfg = scenario("beijing_shanghai");
  auto r = qkdnet_cli({"--config", cfg, "--output", s.path("a"), "simulate"});
  REQUIRE(r.code == kExitOk);
  for (const char* f : {"report.json", "timeseries.csv", "outages.csv", "contacts.json"}) {
    CHECK(fs::exists(s.path("a") + "/" + f));
  }
  const auto report = io::report_from_json(json_of(config::read_file(s.path("a/report.json"))));
  CHECK(report.total_generated == report.total_consumed + report.total_available);
  CHECK(report.pools.size() == 33 + 1 + 10);
  CHECK(!report.announcements.empty());
  REQUIRE(report.leakage.size() == 2);
  CHECK(report.leakage[0].leaked_pairs ==
        std::vector<relay::NodePair>{{"beijing", "shanghai"}});
  CHECK(report.leakage[0].exposed_relayed_bits > 0);

  // Byte-identical reruns, also from the written plan and contact files.
  REQUIRE(qkdnet_cli({"--config", cfg, "--output", s.path("b"), "simulate"}).code == kExitOk);
  CHECK(config::read_file(s.path("a/report.json")) == config::read_file(s.path("b/report.json")));
  CHECK(config::read_file(s.path("a/timeseries.csv")) ==
        config::read_file(s.path("b/timeseries.csv")));
  REQUIRE(qkdnet_cli({"--config", cfg, "--output", s.path("p"), "plan"}).code == kExitOk);
  REQUIRE(qkdnet_cli({"--config", cfg, "--output", s.path("c"), "simulate", "--plan",
                      s.path("p/plan.json"), "--contacts", s.path("a/contacts.json")})
              .code == kExitOk);
  CHECK(config::read_file(s.path("a/report.json")) == config::read_file(s.path("c/report.json")));

  r = qkdnet_cli({"--config", cfg, "--format", "json", "simulate", "--duration-s", "0"});
  REQUIRE(r.code == kExitOk);
  CHECK(json_of(r.out)["series"]["t_s"].empty());
}

TEST_CASE("simulate: plan/config mismatch and satellite contacts") {
  Scratch s;
  REQUIRE(qkdnet_cli({"--config", scenario("fiber_access"), "--output", s.path("p"), "plan"}).code ==
          kExitOk);
  auto r = qkdnet_cli({"--config", scenario("beijing_shanghai"), "simulate", "--plan",
                       s.path("p/plan.json")});
  CHECK(r.code == kExitInput);
  CHECK(r.err.find("dc_branch") != std::string::npos);

  const auto m = scenario("micius_untrusted");
  r = qkdnet_cli({"--config", m, "--output", s.path("m"), "--format", "json", "simulate"});
  REQUIRE(r.code == kExitOk);
  const auto report = io::report_from_json(json_of(r.out));
  const auto contacts = io::parse_contacts(config::read_file(s.path("m/contacts.json")));
  REQUIRE(contacts.count("dlh_lj") == 1);
  double expected = 0.0;
  for (const auto& w : contacts.at("dlh_lj")) {
    expected += (w.span.end - w.span.start) * w.rate_bps.value();
  }
  REQUIRE(report.pools.size() == 1);
  CHECK(std::abs(static_cast<double>(report.pools[0].generated) - expected) <= 1.0);
  CHECK(report.leakage[0].leaked_pairs.empty());
}

TEST_CASE("seed only matters in stochastic mode") {
  Scratch s;
  auto cfg = config::load_config(scenario("fiber_access"));
  cfg.simulation.duration_s = 300.0;
  const auto fluid = s.file("fluid.json", config::serialize_config(cfg));
  cfg.simulation.stochastic = true;
  const auto stoch = s.file("stoch.json", config::serialize_config(cfg));

  auto run = [&](const std::string& c, const char* seed) {
    auto r = qkdnet_cli({"--config", c, "--seed", seed, "--format", "json", "simulate"});
    REQUIRE(r.code == kExitOk);
    auto j = json_of(r.out);
    j.erase("seed");
    return j.dump();
  };
  CHECK(run(fluid, "1") == run(fluid, "2"));
  CHECK(run(stoch, "1") == run(stoch, "1"));
  CHECK(run(stoch, "1") != run(stoch, "2"));
}
