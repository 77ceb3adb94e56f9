#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "etsync/consensus.hpp"
#include "etsync/graph.hpp"
#include "etsync/kernels.hpp"
#include "etsync/regulation.hpp"

namespace etsync {

struct AgentInitialState {
  std::vector<double> v;
  std::vector<double> z;
  std::vector<double> x;
  std::vector<double> eta;  // all eta_j concatenated
};

struct Scenario {
  std::string name = "scenario";
  DirectedGraph graph{Matrix{{0.0, 1.0}, {1.0, 0.0}}};
  GraphSpectra spectra;
  ReferenceModelSpec model;
  ConsensusDesign design;
  std::vector<std::optional<RegulationPlant>> plants;  // nullopt: consensus-only agent
  std::vector<AgentInitialState> initial;
  double horizon = 0.0;
  double step = 0.0;
  std::uint64_t seed = 0;
  KernelMode kernel = KernelMode::Serial;

  std::size_t agents() const { return graph.size(); }
  bool has_plants() const;
  /// Throws ValidationError; checks h > 0, horizon >= h, h <= b/4 and shapes.
  void validate() const;
};

enum class EventFamily { Consensus, Regulation };
std::string_view to_string(EventFamily f);

struct EventRecord {
  std::size_t agent = 0;
  EventFamily family = EventFamily::Consensus;
  std::size_t k = 0;  // 0 for the initial event at t = 0
  double t = 0.0;
  double dt = 0.0;  // NaN for k = 0
};

/// One consensus inter-event window [t_start, t_end) with the tau_ik that
/// applied to it; branch "tau" when tau >= b, otherwise "timer".
struct ConsensusWindow {
  std::size_t agent = 0;
  std::size_t k = 0;
  double t_start = 0.0;
  double t_end = 0.0;
  double tau = 0.0;
  bool closed = true;  // false for the window still open at the horizon
};

struct EventLog {
  std::vector<EventRecord> events;
  std::vector<ConsensusWindow> windows;
};

/// Sampled trajectory: one row per grid point, named columns.
struct SimTrace {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  std::optional<std::size_t> find(const std::string& name) const;
  std::size_t column(const std::string& name) const;  // throws when absent
};

struct FamilyStats {
  std::size_t count = 0;  // events after the initial one
  double min_interval = 0.0;
  double mean_interval = 0.0;
  std::size_t max_per_unit_time = 0;  // most events in any window [t, t + 1)
};

struct Metrics {
  double p_norm_initial = 0.0;
  double p_norm_final = 0.0;
  std::optional<double> sync_error_final;
  std::optional<double> sync_error_tail_max;  // max over the final 10% of the horizon
  std::vector<FamilyStats> consensus;          // per agent
  std::vector<std::optional<FamilyStats>> regulation;
  std::size_t v_increase_count = 0;  // adjacent samples where V(p) grew
  std::size_t samples = 0;
};

struct SimResult {
  SimTrace trace;
  EventLog log;
  Metrics metrics;
};

inline constexpr std::size_t kZenoGuardEvents = 1'000'000;

/// Bisection for the first upward crossing of g in (lo, hi], given g(lo) <= 0
/// and g(hi) > 0. Returns a time within `tol` above the crossing.
double locate_crossing(const std::function<double(double)>& g, double lo, double hi, double tol);

SimResult run_scenario(const Scenario& scenario);

Metrics compute_metrics(const SimTrace& trace, const EventLog& log, std::size_t agents, double horizon);

}  // namespace etsync
