#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "etsync/config.hpp"
#include "etsync/errors.hpp"
#include "etsync/io.hpp"
#include "etsync/verify.hpp"
#include "support.hpp"

using namespace etsync;
using namespace etsync::testing;
namespace fs = std::filesystem;

namespace {

struct ShortRun {
  Scenario scenario;
  SimResult result;
};

const ShortRun& short_run() {
  static const ShortRun run = [] {
    ShortRun r{load_scenario(scenario_path("paper_example.toml"), {.horizon = 2.0}), {}};
    r.result = run_scenario(r.scenario);
    return r;
  }();
  return run;
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("etsync_io_" + name);
  fs::remove_all(p);
  return p;
}

CheckStatus status_of(const VerifyReport& rep, const std::string& name) {
  const auto* c = rep.find(name);
  REQUIRE(c != nullptr);
  return c->status;
}

}  // namespace

TEST_SUITE("number format") {
  TEST_CASE("17 significant digits round-trip") {
    CHECK(io::format_number(0.1) == "0.10000000000000001");
    CHECK(io::format_number(1.0) == "1");
    CHECK(io::format_number(-2.5e-20) == "-2.4999999999999999e-20");
    CHECK(io::format_number(std::numeric_limits<double>::quiet_NaN()).empty());
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-1e6, 1e6);
    for (int k = 0; k < 1000; ++k) {
      const double x = u(rng) * std::pow(10.0, k % 40 - 20);
      CHECK(std::stod(io::format_number(x)) == x);
    }
  }
}

TEST_SUITE("csv round trip") {
  TEST_CASE("trajectory") {
    const auto& tr = short_run().result.trace;
    std::stringstream ss;
    io::write_trace_csv(ss, tr);
    const auto back = io::read_trace_csv(ss);
    CHECK(back.columns == tr.columns);
    CHECK(back.rows == tr.rows);
  }

  TEST_CASE("events keep the NaN interval of the initial events") {
    const auto& log = short_run().result.log;
    std::stringstream ss;
    io::write_events_csv(ss, log);
    std::string header;
    std::getline(ss, header);
    CHECK(header == "agent,family,k,t,dt");
    std::string first;
    std::getline(ss, first);
    CHECK(first == "1,consensus,0,0,");
    ss.seekg(0);
    const auto back = io::read_events_csv(ss);
    REQUIRE(back.events.size() == log.events.size());
    for (std::size_t k = 0; k < log.events.size(); ++k) {
      const auto& a = log.events[k];
      const auto& b = back.events[k];
      CHECK(a.agent == b.agent);
      CHECK(a.family == b.family);
      CHECK(a.k == b.k);
      CHECK(a.t == b.t);
      CHECK((std::isnan(a.dt) ? std::isnan(b.dt) : a.dt == b.dt));
    }
  }

  TEST_CASE("windows") {
    const auto& log = short_run().result.log;
    std::stringstream ss;
    io::write_windows_csv(ss, log);
    const auto back = io::read_windows_csv(ss);
    REQUIRE(back.windows.size() == log.windows.size());
    for (std::size_t k = 0; k < log.windows.size(); ++k) {
      CHECK(back.windows[k].t_start == log.windows[k].t_start);
      CHECK(back.windows[k].t_end == log.windows[k].t_end);
      CHECK(back.windows[k].tau == log.windows[k].tau);
      CHECK(back.windows[k].closed == log.windows[k].closed);
    }
  }

  TEST_CASE("malformed files are parse errors") {
    std::stringstream bad_header("agent,kind,k,t,dt\n");
    CHECK_THROWS_AS(io::read_events_csv(bad_header), Error);
    std::stringstream bad_row("agent,family,k,t,dt\n1,consensus,x,0,\n");
    CHECK_THROWS_AS(io::read_events_csv(bad_row), Error);
    std::stringstream ragged("t,a\n0,1\n1\n");
    CHECK_THROWS_AS(io::read_trace_csv(ragged), Error);
  }

  TEST_CASE("key-value metrics") {
    std::stringstream ss;
    io::write_metrics(ss, short_run().result.metrics, short_run().scenario);
    const auto kv = io::read_key_values(ss);
    CHECK(kv.count("p_norm_initial") == 1);
    CHECK(kv.count("dwell_time_floor") == 1);
    CHECK(kv.count("consensus.agent1.count") == 1);
    CHECK(kv.count("regulation.agent4.max_per_unit_time") == 1);
  }
}

TEST_SUITE("run directory") {
  TEST_CASE("write, reload and verify") {
    const auto dir = scratch("dir");
    const std::string text = read_text_file(scenario_path("paper_example.toml"));
    const ScenarioOverrides ov{.horizon = 2.0};
    io::write_run(dir, short_run().result, short_run().scenario, text, ov);
    for (const char* f : {io::kTrajectoryFile, io::kEventsFile, io::kWindowsFile, io::kMetricsFile, io::kRunInfoFile,
                          io::kScenarioFile})
      CHECK(fs::exists(dir / f));
    CHECK(fs::exists(dir / io::kPlotDir / "y_inf.csv"));
    CHECK(fs::exists(dir / io::kPlotDir / "v1_1.csv"));
    CHECK(fs::exists(dir / io::kPlotDir / "intervals_regulation_3.csv"));

    std::ifstream plot(dir / io::kPlotDir / "y2.csv");
    std::string line;
    std::getline(plot, line);
    CHECK(line == "t,y2");

    const auto loaded = io::load_run(dir);
    CHECK(loaded.scenario.horizon == 2.0);
    CHECK(loaded.trace.rows == short_run().result.trace.rows);
    const auto direct = verify_run(short_run().scenario, short_run().result.trace, short_run().result.log);
    const auto reloaded = verify_run(loaded.scenario, loaded.trace, loaded.log);
    REQUIRE(direct.checks.size() == reloaded.checks.size());
    for (std::size_t k = 0; k < direct.checks.size(); ++k) {
      CHECK(direct.checks[k].status == reloaded.checks[k].status);
      CHECK(direct.checks[k].detail == reloaded.checks[k].detail);
    }
    fs::remove_all(dir);
  }

  TEST_CASE("missing directory contents") {
    const auto dir = scratch("empty");
    fs::create_directories(dir);
    CHECK_THROWS_AS(io::load_run(dir), Error);
    fs::remove_all(dir);
  }
}

TEST_SUITE("verify") {
  TEST_CASE("short run passes the local invariants") {
    const auto rep = verify_run(short_run().scenario, short_run().result.trace, short_run().result.log);
    for (const char* name : {"dwell_time", "inter_event_error_bound", "trigger_safety", "zeno"}) {
      CAPTURE(name);
      CHECK(status_of(rep, name) == CheckStatus::Pass);
    }
    CHECK(status_of(rep, "lyapunov_decrease") == CheckStatus::NotApplicable);
  }

  TEST_CASE("corrupted held input is caught") {
    auto trace = short_run().result.trace;
    const auto cu = trace.column("uheld2");
    for (std::size_t r = trace.rows.size() / 2; r < trace.rows.size(); ++r) trace.rows[r][cu] += 0.05;
    const auto rep = verify_run(short_run().scenario, trace, short_run().result.log);
    CHECK(status_of(rep, "trigger_safety") == CheckStatus::Fail);
    CHECK_FALSE(rep.passed());
  }

  TEST_CASE("held input and varpi shifted together still violate the trigger bound") {
    auto trace = short_run().result.trace;
    const auto cu = trace.column("uheld2");
    const auto cw = trace.column("varpi2");
    for (std::size_t r = trace.rows.size() / 2; r < trace.rows.size(); ++r) {
      trace.rows[r][cu] += 0.05;
      trace.rows[r][cw] += 0.05;
    }
    const auto rep = verify_run(short_run().scenario, trace, short_run().result.log);
    const auto* c = rep.find("trigger_safety");
    REQUIRE(c != nullptr);
    CHECK(c->status == CheckStatus::Fail);
    CHECK(c->detail.find("sigma") != std::string::npos);
  }

  TEST_CASE("an event closer than the dwell time is caught") {
    auto log = short_run().result.log;
    for (auto& e : log.events) {
      if (e.family == EventFamily::Consensus && e.k == 2) {
        e.t -= e.dt - 0.5 * short_run().scenario.design.b;
        e.dt = 0.5 * short_run().scenario.design.b;
        break;
      }
    }
    const auto rep = verify_run(short_run().scenario, short_run().result.trace, log);
    CHECK(status_of(rep, "dwell_time") == CheckStatus::Fail);
  }

  TEST_CASE("inflated measurement error breaks the inter-event bound") {
    auto trace = short_run().result.trace;
    const auto ce = trace.column("eps1_1");
    for (auto& row : trace.rows) row[ce] += 1.0;
    const auto rep = verify_run(short_run().scenario, trace, short_run().result.log);
    CHECK(status_of(rep, "inter_event_error_bound") == CheckStatus::Fail);
  }

  TEST_CASE("status labels") {
    CHECK(to_string(CheckStatus::Pass) == std::string("PASS"));
    CHECK(to_string(CheckStatus::Fail) == std::string("FAIL"));
    CHECK(to_string(CheckStatus::NotApplicable) == std::string("N/A"));
  }
}
