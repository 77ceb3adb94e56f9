#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "etsync/config.hpp"
#include "etsync/sim.hpp"

namespace etsync::io {

/// 17 significant digits; NaN becomes an empty field.
std::string format_number(double x);

/// Files written by `write_run`, relative to the output directory.
inline constexpr const char* kTrajectoryFile = "trajectory.csv";
inline constexpr const char* kEventsFile = "events.csv";
inline constexpr const char* kWindowsFile = "consensus_windows.csv";
inline constexpr const char* kMetricsFile = "metrics.txt";
inline constexpr const char* kRunInfoFile = "run_info.txt";
inline constexpr const char* kScenarioFile = "scenario.toml";
inline constexpr const char* kPlotDir = "plots";

void write_trace_csv(std::ostream& os, const SimTrace& trace);
void write_events_csv(std::ostream& os, const EventLog& log);
void write_windows_csv(std::ostream& os, const EventLog& log);
void write_metrics(std::ostream& os, const Metrics& metrics, const Scenario& scenario);

/// Two-column plot files: v components, y_i and y_inf, and inter-event
/// intervals per agent and family. Returns the paths written.
std::vector<std::filesystem::path> write_plot_data(const std::filesystem::path& dir, const SimResult& result,
                                                   const Scenario& scenario);

/// Writes the full documented file set into `dir` (created if missing).
void write_run(const std::filesystem::path& dir, const SimResult& result, const Scenario& scenario,
               const std::string& scenario_text, const ScenarioOverrides& overrides);

SimTrace read_trace_csv(std::istream& is);
EventLog read_events_csv(std::istream& is, EventLog log = {});
EventLog read_windows_csv(std::istream& is, EventLog log = {});
std::map<std::string, std::string> read_key_values(std::istream& is);

struct LoadedRun {
  std::string scenario_text;
  ScenarioOverrides overrides;
  Scenario scenario;
  SimTrace trace;
  EventLog log;
};

/// Reads a directory produced by `write_run` and rebuilds its scenario.
LoadedRun load_run(const std::filesystem::path& dir);

}  // namespace etsync::io
