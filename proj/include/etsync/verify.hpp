#pragma once

#include <string>
#include <vector>

#include "etsync/sim.hpp"

namespace etsync {

struct VerifyTolerances {
  double error_bound_slack = 1e-9;      // relative to 1 + eta_i |p_i|
  double combined_slack = 1e-12;        // relative to 1 + |p|^2
  double v_decrease_slack = 1e-3;       // times max |p|^2 over the sample pair
  double trigger_safety_slack = 1e-6;   // absolute, on |varpi| - sigma(|q|)
  double varpi_consistency = 1e-9;      // recomputed vs logged varpi, relative to 1 + |u_held|
  double consensus_ratio = 1e-3;        // |p(T)| <= ratio |p(0)|
  double sync_error_tail = 5e-2;        // final 10% of the horizon
  double iss_mu_threshold = 1e-3;
  double iss_window = 5.0;
  double iss_peak_floor = 1e-10;        // peaks both below this are not compared
  double event_resolution = 1e-10;      // times (1 + T), the localization tolerance
};

enum class CheckStatus { Pass, Fail, NotApplicable };
std::string_view to_string(CheckStatus s);

struct CheckResult {
  std::string name;
  CheckStatus status = CheckStatus::Pass;
  std::string detail;
};

struct VerifyReport {
  std::vector<CheckResult> checks;

  bool passed() const;  // no check failed
  const CheckResult* find(const std::string& name) const;
};

/// Runs every trajectory invariant against a completed run. The trace must
/// carry the columns written by the simulator; `log.windows` is needed for the
/// inter-event error bound.
VerifyReport verify_run(const Scenario& scenario, const SimTrace& trace, const EventLog& log,
                        const VerifyTolerances& tol = {});

}  // namespace etsync
