#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "etsync/graph.hpp"
#include "etsync/numerics.hpp"

namespace etsync {

/// Reference model v' = A v + B mu shared by all agents.
struct ReferenceModelSpec {
  Matrix A;  // q x q, simple eigenvalues on the imaginary axis
  Matrix B;  // q x 1, nonzero

  std::size_t dim() const noexcept { return A.rows(); }
  /// Throws ValidationError naming the violated condition.
  void validate() const;
};

struct ConsensusDesignInputs {
  double lambda = 0.0;
  std::vector<double> eta_i;
  double eta = 0.0;
  double phi = 0.0;
  std::vector<double> g;
  bool unchecked = false;
  /// Only honored in unchecked mode; otherwise beta = 1 / lambda_min(G R).
  std::optional<double> beta_override;
};

struct ConsensusDesign {
  Matrix P;
  Matrix K;    // 1 x q, K = B^T P
  Matrix BBtP; // B B^T P, cached for the trigger quantities
  std::vector<double> g;
  double lambda = 0.0;
  double beta = 0.0;
  double beta_theory = 0.0;  // 1 / lambda_min(G R), whatever beta was used
  std::vector<double> eta_i;
  double eta = 0.0;
  double phi = 0.0;
  std::optional<double> rho;     // absent when lambda >= lambda2_hat / N
  std::optional<double> varphi;  // rho^2 eta^2 + N rho^2 phi^2
  double b1 = 0.0;
  double b2 = 0.0;
  double b = 0.0;  // dwell-time floor
  double lambda_LG_norm = 0.0;
  double norm_A = 0.0;
  double norm_BBtP = 0.0;
  double lambda_bound = 0.0;  // lambda2_hat / N

  bool unchecked = false;
  bool lambda_in_range = false;
  bool varphi_below_one = false;
  bool g_dominates_r = false;
};

/// b = ln(1 + phi) / (b1 + b2 max(eta, phi) sqrt(n)).
double dwell_time_floor(double b1, double b2, double eta, double phi, std::size_t n);

ConsensusDesign design_consensus(const ReferenceModelSpec& model, const GraphSpectra& spectra,
                                 const ConsensusDesignInputs& inputs);

/// mu_i = g_i K p_held.
double consensus_control(const ConsensusDesign& design, std::size_t agent, std::span<const double> p_held);

/// p_i = sum_j a_ij (v_j - v_i); v_all is n rows of length q, row-major.
std::vector<double> relative_measurement(std::span<const double> v_all, std::size_t q, const DirectedGraph& g,
                                         std::size_t agent);

/// V(p) = 1/2 p^T (G R (x) P) p with p stacked agent-major.
double lyapunov_V(std::span<const double> p, const ConsensusDesign& design, const GraphSpectra& spectra);

/// Bookkeeping for one agent's broadcast trigger. The integrand
/// ||A|| s_ik + w_ik + w_i(t) is piecewise constant between neighbor
/// broadcasts, so the running integral is tracked exactly.
struct AgentTriggerState {
  std::size_t agent = 0;
  double t_last = 0.0;
  std::vector<double> p_held_self;
  double s_ik = 0.0;
  double w_ik = 0.0;
  double w_i = 0.0;
  double integral_acc = 0.0;
  double t_acc = 0.0;
  /// Absolute time at which the integral first reached s_ik, once known.
  std::optional<double> crossing;
  std::vector<std::vector<double>> neighbor_holds;  // indexed by agent, zero if never heard
  std::size_t k = 0;  // number of own events so far

  double rate(double norm_A) const { return norm_A * s_ik + w_ik + w_i; }
};

struct BroadcastPayload {
  std::size_t from = 0;
  std::vector<double> p;
};

AgentTriggerState make_trigger_state(std::size_t agent, std::size_t n_agents, std::size_t q);

/// Advances the running integral to time t under the current rate.
void accrue_integral(AgentTriggerState& state, double t, double norm_A);

BroadcastPayload on_own_event(AgentTriggerState& state, double t, std::span<const double> p_now,
                              const ConsensusDesign& design, const ReferenceModelSpec& model,
                              const DirectedGraph& graph);

void on_neighbor_broadcast(AgentTriggerState& state, double t, std::size_t from, std::span<const double> p_j_c,
                           const ConsensusDesign& design, const DirectedGraph& graph);

/// Provisional tau_ik measured from t_last (may be +inf when the rate is zero).
double provisional_tau(const AgentTriggerState& state, double norm_A);

/// t_last + max(tau_ik, b). Must be re-queried after every neighbor broadcast.
double next_consensus_trigger(const AgentTriggerState& state, const ConsensusDesign& design, double norm_A);

}  // namespace etsync
