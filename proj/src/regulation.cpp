#include "etsync/regulation.hpp"

#include <cmath>
#include <sstream>
#include <string>

#include "etsync/errors.hpp"

namespace etsync {

double CubicFeedback::value(std::span<const double> x_bar) const {
  const double e = x_bar[0];
  return -k1_ * e - k3_ * e * e * e;
}

std::vector<double> CubicFeedback::gradient(std::span<const double> x_bar) const {
  std::vector<double> g(x_bar.size(), 0.0);
  g[0] = -k1_ - 3.0 * k3_ * x_bar[0] * x_bar[0];
  return g;
}

double LinearFeedback::value(std::span<const double> x_bar) const {
  double s = 0.0;
  for (std::size_t j = 0; j < gains_.size(); ++j) s -= gains_[j] * x_bar[j];
  return s;
}

std::vector<double> LinearFeedback::gradient(std::span<const double> x_bar) const {
  std::vector<double> g(x_bar.size(), 0.0);
  for (std::size_t j = 0; j < gains_.size(); ++j) g[j] = -gains_[j];
  return g;
}

SmallGain SmallGain::linear(double c, double gamma0) {
  if (!(c > 0.0 && c < 1.0)) throw Error(ErrorKind::ValidationError, "small-gain constant c must lie in (0, 1)");
  if (!(gamma0 > 0.0)) throw Error(ErrorKind::ValidationError, "IOS gain gamma0 must be positive");
  const double slope = c / gamma0;
  return SmallGain{[slope](double s) { return slope * s; }, c, gamma0};
}

GeneratorBlock build_generator_block(const GeneratorData& data) {
  const std::size_t l = data.Phi.rows();
  if (!data.Phi.is_square() || data.Psi.rows() != 1 || data.Psi.cols() != l || data.M.rows() != l ||
      !data.M.is_square() || data.N.rows() != l || data.N.cols() != 1) {
    throw Error(ErrorKind::ValidationError, "generator matrices have inconsistent shapes");
  }

  Matrix obs(l, l);
  Matrix row = data.Psi;
  for (std::size_t k = 0; k < l; ++k) {
    obs.set_block(k, 0, row);
    row = row * data.Phi;
  }
  if (rank(obs) < l) throw Error(ErrorKind::NotObservable, "(Psi, Phi) is not observable");

  Matrix ctrb(l, l);
  Matrix col = data.N;
  for (std::size_t k = 0; k < l; ++k) {
    ctrb.set_block(0, k, col);
    col = data.M * col;
  }
  if (rank(ctrb) < l) throw Error(ErrorKind::NotControllable, "(M, N) is not controllable");
  if (!is_hurwitz(data.M)) throw Error(ErrorKind::NotHurwitz, "M is not Hurwitz");

  GeneratorBlock blk;
  blk.Psi = data.Psi;
  blk.Phi = data.Phi;
  blk.M = data.M;
  blk.N = data.N;
  // M T + N Psi = T Phi  <=>  M T + T (-Phi) = -N Psi
  blk.T = solve_sylvester(data.M, -data.Phi, -(data.N * data.Psi));
  blk.sylvester_residual = (data.M * blk.T + data.N * data.Psi - blk.T * data.Phi).norm_inf();
  if (blk.sylvester_residual > Tolerances::kSylvesterResidual * (1.0 + (data.N * data.Psi).norm_inf())) {
    throw Error(ErrorKind::SingularT, "Sylvester residual too large");
  }
  const double det = determinant(blk.T);
  double scale = 1.0;
  for (std::size_t i = 0; i < l; ++i) scale *= std::max(1e-300, vector_norm(blk.T.block(i, 0, 1, l).data()));
  if (!(std::abs(det) > 1e-10 * scale)) {
    std::ostringstream os;
    os << "T is singular (det " << det << ")";
    throw Error(ErrorKind::SingularT, os.str());
  }
  blk.T_inv = inverse(blk.T);
  blk.Psi_T_inv = blk.Psi * blk.T_inv;
  return blk;
}

SteadyStateGenerator build_generator(const std::vector<GeneratorData>& data) {
  SteadyStateGenerator g;
  for (const auto& d : data) g.blocks.push_back(build_generator_block(d));
  return g;
}

RegulationPlant::RegulationPlant(std::shared_ptr<const AgentModel> model, SteadyStateGenerator generator,
                                 std::shared_ptr<const FeedbackLaw> kappa, SmallGain sigma)
    : model_(std::move(model)), generator_(std::move(generator)), kappa_(std::move(kappa)), sigma_(std::move(sigma)) {
  m_ = model_->z_dim();
  r_ = model_->relative_degree();
  if (generator_.blocks.size() != r_) {
    throw Error(ErrorKind::ValidationError, "model " + model_->name() + " needs " + std::to_string(r_) +
                                                " generator blocks, got " + std::to_string(generator_.blocks.size()));
  }
  std::size_t off = m_ + r_;
  for (const auto& blk : generator_.blocks) {
    eta_offsets_.push_back(off);
    off += blk.dim();
  }
  dim_ = off;
  x_bar_held.assign(r_, 0.0);
}

double applied_input(const RegulationPlant& plant, std::span<const double> state) {
  const std::size_t r = plant.relative_degree();
  const auto& blk = plant.generator().blocks[r - 1];
  const auto eta = state.subspan(plant.eta_offset(r), blk.dim());
  double u = plant.u_bar_held;
  for (std::size_t k = 0; k < blk.dim(); ++k) u += blk.Psi_T_inv(0, k) * eta[k];
  return u;
}

void closed_loop_derivative(const RegulationPlant& plant, std::span<const double> state, std::span<double> dstate) {
  const AgentModel& model = plant.model();
  const std::size_t m = plant.z_dim();
  const std::size_t r = plant.relative_degree();
  const auto z = state.subspan(0, m);
  const auto x = state.subspan(m, r);
  const double u = applied_input(plant, state);

  model.f0(z, x[0], dstate.subspan(0, m));
  for (std::size_t j = 1; j <= r; ++j) {
    const double next = (j < r) ? x[j] : u;
    dstate[m + j - 1] = model.f(j, z, x) + model.b(j) * next;
  }
  for (std::size_t j = 1; j <= r; ++j) {
    const auto& blk = plant.generator().blocks[j - 1];
    const std::size_t l = blk.dim();
    const std::size_t off = plant.eta_offset(j);
    const double drive = (j < r) ? x[j] : u;
    for (std::size_t a = 0; a < l; ++a) {
      double s = blk.N(a, 0) * drive;
      for (std::size_t c = 0; c < l; ++c) s += blk.M(a, c) * state[off + c];
      dstate[off + a] = s;
    }
  }
  for (std::size_t k = 0; k < plant.state_dim(); ++k) {
    if (!std::isfinite(dstate[k])) {
      throw Error(ErrorKind::NonFiniteState, "non-finite derivative in component " + std::to_string(k) +
                                                 " of model " + model.name());
    }
  }
}

double tracking_error(double x1, std::span<const double> v, const AgentModel& model) { return x1 - model.output(v); }

std::vector<double> sensor_bar_x(const RegulationPlant& plant, std::span<const double> state, double e) {
  const std::size_t m = plant.z_dim();
  const std::size_t r = plant.relative_degree();
  std::vector<double> xb(r);
  xb[0] = e;
  for (std::size_t j = 2; j <= r; ++j) {
    const auto& blk = plant.generator().blocks[j - 2];
    const std::size_t off = plant.eta_offset(j - 1);
    double s = state[m + j - 1];
    for (std::size_t k = 0; k < blk.dim(); ++k) s -= blk.Psi_T_inv(0, k) * state[off + k];
    xb[j - 1] = s;
  }
  return xb;
}

std::vector<double> sensor_bar_x_dot(const RegulationPlant& plant, std::span<const double> dstate, double e_dot) {
  // x_bar is linear in the state apart from e, so the same map applies.
  return sensor_bar_x(plant, dstate, e_dot);
}

VarpiQ varpi_and_q(const RegulationPlant& plant, std::span<const double> x_bar, std::span<const double> x_bar_dot) {
  VarpiQ out;
  out.varpi = plant.kappa().value(plant.x_bar_held) - plant.kappa().value(x_bar);
  const auto grad = plant.kappa().gradient(x_bar);
  for (std::size_t j = 0; j < grad.size(); ++j) out.q += grad[j] * x_bar_dot[j];
  return out;
}

TriggerValue regulation_trigger_value(const RegulationPlant& plant, std::span<const double> x_bar,
                                      std::span<const double> x_bar_dot) {
  const VarpiQ vq = varpi_and_q(plant, x_bar, x_bar_dot);
  TriggerValue tv;
  tv.value = std::abs(vq.varpi) - plant.sigma()(std::abs(vq.q));
  tv.exempt = std::abs(vq.varpi) <= kTriggerExemption && std::abs(vq.q) <= kTriggerExemption;
  return tv;
}

void on_regulation_event(RegulationPlant& plant, double t, std::span<const double> x_bar) {
  plant.x_bar_held.assign(x_bar.begin(), x_bar.end());
  plant.u_bar_held = plant.kappa().value(plant.x_bar_held);
  plant.t_last = t;
  plant.k += 1;
}

TransformedCoordinates transformed_coordinates(const RegulationPlant& plant, std::span<const double> state,
                                               std::span<const double> v) {
  const AgentModel& model = plant.model();
  const std::size_t m = plant.z_dim();
  const std::size_t r = plant.relative_degree();
  TransformedCoordinates tc;

  const auto zs = model.z_ss(v);
  tc.z0.resize(m);
  for (std::size_t k = 0; k < m; ++k) tc.z0[k] = state[k] - zs[k];

  const double e = tracking_error(state[m], v, model);
  tc.x_bar = sensor_bar_x(plant, state, e);

  for (std::size_t j = 1; j <= r; ++j) {
    const auto& blk = plant.generator().blocks[j - 1];
    const auto theta = blk.T * std::span<const double>(model.vartheta(j, v));
    const double inv_b = 1.0 / model.b(j);
    std::vector<double> zj(blk.dim());
    for (std::size_t k = 0; k < blk.dim(); ++k) {
      zj[k] = state[plant.eta_offset(j) + k] - theta[k] - inv_b * blk.N(k, 0) * tc.x_bar[j - 1];
    }
    tc.z.push_back(std::move(zj));
  }
  return tc;
}

void validate_model(const AgentModel& model) {
  const std::size_t m = model.z_dim();
  const std::size_t r = model.relative_degree();
  if (r == 0) throw Error(ErrorKind::ValidationError, "relative degree must be at least one");
  const std::vector<double> z(m, 0.0);
  const std::vector<double> x(r, 0.0);
  std::vector<double> dz(m, 0.0);
  model.f0(z, 0.0, dz);
  for (double d : dz)
    if (std::abs(d) > 1e-12) throw Error(ErrorKind::ValidationError, "f0(0, 0, w) must vanish");
  for (std::size_t j = 1; j <= r; ++j) {
    if (std::abs(model.f(j, z, x)) > 1e-12) {
      throw Error(ErrorKind::ValidationError, "f_" + std::to_string(j) + "(0, .., 0, w) must vanish");
    }
    if (!(model.b(j) > 0.0)) {
      throw Error(ErrorKind::ValidationError,
                  "high-frequency gain assumption: b_" + std::to_string(j) + "(w) must be positive");
    }
  }
}

}  // namespace etsync
