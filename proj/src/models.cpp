#include "etsync/models.hpp"

#include <cmath>

#include "etsync/errors.hpp"

namespace etsync {

HarmonicTrackingAgent::HarmonicTrackingAgent(double w) : w_(w) {
  if (!(std::abs(w) <= 1.0)) throw Error(ErrorKind::ValidationError, "paper_example requires |w| <= 1");
}

void HarmonicTrackingAgent::f0(std::span<const double> z, double x1, std::span<double> dz) const {
  dz[0] = -z[0];
  dz[1] = -z[1] + 2.0 * x1;
}

double HarmonicTrackingAgent::f(std::size_t, std::span<const double> z, std::span<const double> x) const {
  return -z[1] + z[0] * x[0] + w_ * x[0];
}

std::vector<double> HarmonicTrackingAgent::output_gradient(std::span<const double> v) const {
  std::vector<double> g(v.size(), 0.0);
  g[0] = 1.0;
  return g;
}

std::vector<double> HarmonicTrackingAgent::z_ss(std::span<const double> v) const { return {0.0, v[0] + v[1]}; }

double HarmonicTrackingAgent::x_ss(std::size_t j, std::span<const double> v) const {
  return j == 1 ? v[0] : (1.0 - w_) * v[0];
}

std::vector<double> HarmonicTrackingAgent::vartheta(std::size_t, std::span<const double> v) const {
  // u(v, w) = (1 - w) v_1 = Psi vartheta with Psi = [1 0], Phi = A.
  return {(1.0 - w_) * v[0], (1.0 - w_) * v[1]};
}

void ChainTwoAgent::f0(std::span<const double> z, double x1, std::span<double> dz) const { dz[0] = -z[0] + x1; }

double ChainTwoAgent::f(std::size_t j, std::span<const double>, std::span<const double> x) const {
  return j == 1 ? 0.0 : w_ * x[0];
}

std::vector<double> ChainTwoAgent::output_gradient(std::span<const double> v) const {
  std::vector<double> g(v.size(), 0.0);
  g[0] = 1.0;
  return g;
}

std::vector<double> ChainTwoAgent::z_ss(std::span<const double> v) const { return {0.5 * (v[0] + v[1])}; }

double ChainTwoAgent::x_ss(std::size_t j, std::span<const double> v) const {
  switch (j) {
    case 1: return v[0];
    case 2: return -v[1];
    default: return -(1.0 + w_) * v[0];
  }
}

std::vector<double> ChainTwoAgent::vartheta(std::size_t j, std::span<const double> v) const {
  // x2 = [0 -1] v, u = [1 0] (-(1 + w) v); both generated by Phi = A.
  if (j == 1) return {v[0], v[1]};
  return {-(1.0 + w_) * v[0], -(1.0 + w_) * v[1]};
}

std::shared_ptr<const AgentModel> make_builtin_model(const std::string& name, double w) {
  if (name == "paper_example") return std::make_shared<HarmonicTrackingAgent>(w);
  if (name == "chain2") return std::make_shared<ChainTwoAgent>(w);
  throw Error(ErrorKind::ValidationError, "unknown agent model '" + name + "'");
}

std::vector<std::string> builtin_model_names() { return {"paper_example", "chain2"}; }

}  // namespace etsync
