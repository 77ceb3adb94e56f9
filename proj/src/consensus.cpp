#include "etsync/consensus.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>

#include "etsync/errors.hpp"

namespace etsync {

void ReferenceModelSpec::validate() const {
  if (A.empty() || !A.is_square()) throw Error(ErrorKind::ValidationError, "reference model A must be square");
  if (B.rows() != A.rows() || B.cols() != 1) {
    throw Error(ErrorKind::ValidationError, "reference model B must be a q x 1 column");
  }
  if (!A.all_finite() || !B.all_finite()) throw Error(ErrorKind::ValidationError, "reference model not finite");
  if (B.max_abs() == 0.0) throw Error(ErrorKind::ValidationError, "reference model B must be nonzero");

  const auto eig = general_eigenvalues(A);
  for (const auto& e : eig) {
    if (std::abs(e.real()) > 1e-6) {
      std::ostringstream os;
      os << "reference model assumption: eigenvalue " << e.real() << (e.imag() < 0 ? "-" : "+")
         << std::abs(e.imag()) << "i of A has nonzero real part";
      throw Error(ErrorKind::ValidationError, os.str());
    }
  }
  for (std::size_t i = 0; i < eig.size(); ++i)
    for (std::size_t j = i + 1; j < eig.size(); ++j)
      if (std::abs(eig[i] - eig[j]) <= 1e-6) {
        throw Error(ErrorKind::ValidationError, "reference model assumption: eigenvalues of A are not simple");
      }

  // Every mode sits on the imaginary axis, so stabilizable means controllable.
  const std::size_t q = A.rows();
  Matrix ctrb(q, q);
  Matrix col = B;
  for (std::size_t k = 0; k < q; ++k) {
    ctrb.set_block(0, k, col);
    col = A * col;
  }
  if (rank(ctrb) < q) {
    throw Error(ErrorKind::ValidationError, "reference model assumption: (A, B) is not stabilizable");
  }
}

double dwell_time_floor(double b1, double b2, double eta, double phi, std::size_t n) {
  return std::log1p(phi) / (b1 + b2 * std::max(eta, phi) * std::sqrt(static_cast<double>(n)));
}

ConsensusDesign design_consensus(const ReferenceModelSpec& model, const GraphSpectra& spectra,
                                 const ConsensusDesignInputs& in) {
  const std::size_t n = spectra.r.size();
  const auto nd = static_cast<double>(n);
  if (in.g.size() != n) throw Error(ErrorKind::ValidationError, "g must have one entry per agent");
  if (in.eta_i.size() != n) throw Error(ErrorKind::ValidationError, "eta_i must have one entry per agent");

  ConsensusDesign d;
  d.g = in.g;
  d.lambda = in.lambda;
  d.eta_i = in.eta_i;
  d.eta = in.eta;
  d.phi = in.phi;
  d.unchecked = in.unchecked;
  d.lambda_bound = spectra.lambda2_hat / nd;

  d.g_dominates_r = true;
  for (std::size_t i = 0; i < n; ++i) {
    if (!(in.g[i] >= spectra.r[i])) {
      d.g_dominates_r = false;
      std::ostringstream os;
      os << "gain condition g_i >= r_i violated for agent " << i + 1 << ": g=" << in.g[i] << " < r=" << spectra.r[i];
      throw Error(ErrorKind::ValidationError, os.str());
    }
    if (!(in.eta_i[i] > 0.0) || in.eta_i[i] > in.eta) {
      std::ostringstream os;
      os << "need eta >= eta_i > 0; agent " << i + 1 << " has eta_i=" << in.eta_i[i] << ", eta=" << in.eta;
      throw Error(ErrorKind::ValidationError, os.str());
    }
  }
  if (!(in.phi > 0.0)) throw Error(ErrorKind::ValidationError, "phi must be positive");

  if (!(in.lambda > 0.0)) {
    std::ostringstream os;
    os << "need 0 < lambda; got lambda=" << in.lambda;
    throw Error(ErrorKind::LambdaOutOfRange, os.str());
  }
  d.lambda_in_range = in.lambda < d.lambda_bound;
  if (!d.lambda_in_range && !in.unchecked) {
    std::ostringstream os;
    os.precision(10);
    os << "need lambda < lambda2_hat/N: " << in.lambda << " >= " << d.lambda_bound;
    throw Error(ErrorKind::LambdaOutOfRange, os.str());
  }

  std::vector<double> gr(n);
  for (std::size_t i = 0; i < n; ++i) gr[i] = in.g[i] * spectra.r[i];
  d.beta_theory = 1.0 / symmetric_eigenvalues(Matrix::diagonal(gr)).front();
  if (in.beta_override && !in.unchecked) {
    throw Error(ErrorKind::ValidationError, "beta override is only accepted in unchecked mode");
  }
  d.beta = in.beta_override.value_or(d.beta_theory);

  d.P = solve_are(model.A, model.B, d.lambda, d.beta);
  d.K = model.B.transpose() * d.P;
  d.BBtP = model.B * d.K;

  const Matrix G = Matrix::diagonal(in.g);
  const Matrix LG = spectra.laplacian * G;
  d.norm_A = spectral_norm(model.A);
  d.norm_BBtP = spectral_norm(d.BBtP);
  d.lambda_LG_norm = spectral_norm(LG);
  d.b1 = d.norm_A + d.lambda_LG_norm * d.norm_BBtP;
  d.b2 = d.lambda_LG_norm * d.norm_BBtP;
  d.b = dwell_time_floor(d.b1, d.b2, d.eta, d.phi, spectra.laplacian.rows());

  const double gap = d.lambda_bound - d.lambda;
  if (gap > 0.0) {
    d.rho = spectral_norm(kron(spectra.R * LG, d.K)) / std::sqrt(gap);
    d.varphi = (*d.rho) * (*d.rho) * (d.eta * d.eta + nd * d.phi * d.phi);
    d.varphi_below_one = *d.varphi < 1.0;
  }
  if (!in.unchecked && !d.varphi_below_one) {
    std::ostringstream os;
    os.precision(10);
    os << "need varphi = rho^2 eta^2 + N rho^2 phi^2 < 1: " << d.varphi.value_or(0.0) << " >= 1";
    throw Error(ErrorKind::VarphiNotLessThanOne, os.str());
  }
  return d;
}

double consensus_control(const ConsensusDesign& design, std::size_t agent, std::span<const double> p_held) {
  double s = 0.0;
  for (std::size_t k = 0; k < p_held.size(); ++k) s += design.K(0, k) * p_held[k];
  return design.g[agent] * s;
}

std::vector<double> relative_measurement(std::span<const double> v_all, std::size_t q, const DirectedGraph& g,
                                         std::size_t agent) {
  std::vector<double> p(q, 0.0);
  const auto vi = v_all.subspan(agent * q, q);
  for (std::size_t j = 0; j < g.size(); ++j) {
    const double a = g.weight(agent, j);
    if (a == 0.0) continue;
    const auto vj = v_all.subspan(j * q, q);
    for (std::size_t k = 0; k < q; ++k) p[k] += a * (vj[k] - vi[k]);
  }
  return p;
}

double lyapunov_V(std::span<const double> p, const ConsensusDesign& design, const GraphSpectra& spectra) {
  const std::size_t q = design.P.rows();
  double v = 0.0;
  for (std::size_t i = 0; i < spectra.r.size(); ++i) {
    const auto pi = p.subspan(i * q, q);
    double quad = 0.0;
    for (std::size_t a = 0; a < q; ++a)
      for (std::size_t b = 0; b < q; ++b) quad += pi[a] * design.P(a, b) * pi[b];
    v += design.g[i] * spectra.r[i] * quad;
  }
  return 0.5 * v;
}

AgentTriggerState make_trigger_state(std::size_t agent, std::size_t n_agents, std::size_t q) {
  AgentTriggerState s;
  s.agent = agent;
  s.p_held_self.assign(q, 0.0);
  s.neighbor_holds.assign(n_agents, std::vector<double>(q, 0.0));
  return s;
}

void accrue_integral(AgentTriggerState& state, double t, double norm_A) {
  if (t <= state.t_acc) return;
  const double c = state.rate(norm_A);
  const double added = c * (t - state.t_acc);
  if (!state.crossing && c > 0.0 && state.integral_acc + added >= state.s_ik) {
    state.crossing = state.t_acc + (state.s_ik - state.integral_acc) / c;
  }
  state.integral_acc += added;
  state.t_acc = t;
}

namespace {

double neighbor_term(const AgentTriggerState& state, const ConsensusDesign& design, const DirectedGraph& graph) {
  const std::size_t q = design.P.rows();
  std::vector<double> sum(q, 0.0);
  for (std::size_t j = 0; j < graph.size(); ++j) {
    const double a = graph.weight(state.agent, j);
    if (a == 0.0) continue;
    for (std::size_t k = 0; k < q; ++k) sum[k] += a * design.g[j] * state.neighbor_holds[j][k];
  }
  return vector_norm(design.BBtP * std::span<const double>(sum));
}

}  // namespace

BroadcastPayload on_own_event(AgentTriggerState& state, double t, std::span<const double> p_now,
                              const ConsensusDesign& design, const ReferenceModelSpec& model,
                              const DirectedGraph& graph) {
  const std::size_t i = state.agent;
  state.t_last = t;
  state.t_acc = t;
  state.p_held_self.assign(p_now.begin(), p_now.end());
  state.k += 1;
  state.integral_acc = 0.0;
  state.crossing.reset();

  const double eta_i = design.eta_i[i];
  state.s_ik = eta_i / (1.0 + eta_i) * vector_norm(p_now);
  const Matrix closed = model.A - (design.g[i] * graph.in_degree(i)) * design.BBtP;
  state.w_ik = vector_norm(closed * p_now);
  state.w_i = neighbor_term(state, design, graph);
  if (state.s_ik == 0.0) state.crossing = t;
  return BroadcastPayload{i, std::vector<double>(p_now.begin(), p_now.end())};
}

void on_neighbor_broadcast(AgentTriggerState& state, double t, std::size_t from, std::span<const double> p_j_c,
                           const ConsensusDesign& design, const DirectedGraph& graph) {
  if (graph.weight(state.agent, from) == 0.0) return;
  accrue_integral(state, t, design.norm_A);
  state.neighbor_holds[from].assign(p_j_c.begin(), p_j_c.end());
  state.w_i = neighbor_term(state, design, graph);
}

double provisional_tau(const AgentTriggerState& state, double norm_A) {
  if (state.crossing) return *state.crossing - state.t_last;
  const double c = state.rate(norm_A);
  if (!(c > 0.0)) return std::numeric_limits<double>::infinity();
  return state.t_acc + (state.s_ik - state.integral_acc) / c - state.t_last;
}

double next_consensus_trigger(const AgentTriggerState& state, const ConsensusDesign& design, double norm_A) {
  double next = state.t_last + std::max(provisional_tau(state, norm_A), design.b);
  // The logged interval next - t_last must not round below b.
  while (next - state.t_last < design.b) next = std::nextafter(next, std::numeric_limits<double>::infinity());
  return next;
}

}  // namespace etsync
