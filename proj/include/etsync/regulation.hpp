#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "etsync/numerics.hpp"

namespace etsync {

/// Plugin contract for one agent's lower-triangular nonlinear plant
///
///   z'   = f0(z, x1, w)
///   x_j' = f_j(z, x_1..x_j, w) + b_j(w) x_{j+1},   j = 1..r,  x_{r+1} = u
///   y    = x1
///
/// together with its regulator-equation solution and the internal-model
/// coordinates vartheta_j with x_{j+1}(v, w) = Psi_j vartheta_j(v, w).
/// The uncertain parameter w is fixed when the model is constructed.
class AgentModel {
 public:
  virtual ~AgentModel() = default;

  virtual std::string name() const = 0;
  virtual std::size_t z_dim() const = 0;
  virtual std::size_t relative_degree() const = 0;

  virtual void f0(std::span<const double> z, double x1, std::span<double> dz) const = 0;
  /// j in 1..r; x holds x_1..x_r (only x_1..x_j may be read).
  virtual double f(std::size_t j, std::span<const double> z, std::span<const double> x) const = 0;
  virtual double b(std::size_t j) const = 0;

  /// Tracked output map c(v) and its gradient.
  virtual double output(std::span<const double> v) const = 0;
  virtual std::vector<double> output_gradient(std::span<const double> v) const = 0;

  virtual std::vector<double> z_ss(std::span<const double> v) const = 0;
  /// j in 1..r+1; x_{r+1} is the steady-state input.
  virtual double x_ss(std::size_t j, std::span<const double> v) const = 0;
  /// j in 1..r.
  virtual std::vector<double> vartheta(std::size_t j, std::span<const double> v) const = 0;
};

/// kappa and its gradient, both functions of x_bar.
class FeedbackLaw {
 public:
  virtual ~FeedbackLaw() = default;
  virtual std::string name() const = 0;
  virtual double value(std::span<const double> x_bar) const = 0;
  virtual std::vector<double> gradient(std::span<const double> x_bar) const = 0;
};

/// kappa(x_bar) = -k1 x_bar_1 - k3 x_bar_1^3.
class CubicFeedback final : public FeedbackLaw {
 public:
  CubicFeedback(double k1, double k3) : k1_(k1), k3_(k3) {}
  std::string name() const override { return "cubic"; }
  double value(std::span<const double> x_bar) const override;
  std::vector<double> gradient(std::span<const double> x_bar) const override;

 private:
  double k1_;
  double k3_;
};

/// kappa(x_bar) = -k . x_bar.
class LinearFeedback final : public FeedbackLaw {
 public:
  explicit LinearFeedback(std::vector<double> gains) : gains_(std::move(gains)) {}
  std::string name() const override { return "linear"; }
  double value(std::span<const double> x_bar) const override;
  std::vector<double> gradient(std::span<const double> x_bar) const override;

 private:
  std::vector<double> gains_;
};

/// Trigger gain sigma. For a linear IOS gain gamma(s) = gamma0 s the small
/// gain condition gamma(sigma(s)) = c s gives sigma(s) = (c / gamma0) s.
struct SmallGain {
  std::function<double(double)> sigma;
  double c = 0.0;
  double gamma0 = 0.0;

  static SmallGain linear(double c, double gamma0);
  double operator()(double s) const { return sigma(s); }
};

struct GeneratorBlock {
  Matrix Psi;  // 1 x l
  Matrix Phi;  // l x l
  Matrix M;    // l x l, Hurwitz
  Matrix N;    // l x 1
  Matrix T;    // M T + N Psi = T Phi
  Matrix T_inv;
  Matrix Psi_T_inv;  // 1 x l
  double sylvester_residual = 0.0;

  std::size_t dim() const noexcept { return Phi.rows(); }
};

struct SteadyStateGenerator {
  std::vector<GeneratorBlock> blocks;  // blocks[j-1] for j = 1..r
};

struct GeneratorData {
  Matrix Psi;
  Matrix Phi;
  Matrix M;
  Matrix N;
};

GeneratorBlock build_generator_block(const GeneratorData& data);
SteadyStateGenerator build_generator(const std::vector<GeneratorData>& data);

/// Configuration and held samples of one agent's regulation loop. The
/// continuous state (z, x, eta_1..eta_r) is stored by the caller in the flat
/// layout described by `offsets`.
class RegulationPlant {
 public:
  RegulationPlant(std::shared_ptr<const AgentModel> model, SteadyStateGenerator generator,
                  std::shared_ptr<const FeedbackLaw> kappa, SmallGain sigma);

  const AgentModel& model() const { return *model_; }
  const SteadyStateGenerator& generator() const { return generator_; }
  const FeedbackLaw& kappa() const { return *kappa_; }
  const SmallGain& sigma() const { return sigma_; }

  std::size_t z_dim() const { return m_; }
  std::size_t relative_degree() const { return r_; }
  std::size_t state_dim() const { return dim_; }
  std::size_t x_offset() const { return m_; }
  /// Offset of eta_j, j in 1..r.
  std::size_t eta_offset(std::size_t j) const { return eta_offsets_[j - 1]; }

  double u_bar_held = 0.0;
  std::vector<double> x_bar_held;
  double t_last = 0.0;
  std::size_t k = 0;

 private:
  std::shared_ptr<const AgentModel> model_;
  SteadyStateGenerator generator_;
  std::shared_ptr<const FeedbackLaw> kappa_;
  SmallGain sigma_;
  std::size_t m_ = 0;
  std::size_t r_ = 0;
  std::size_t dim_ = 0;
  std::vector<std::size_t> eta_offsets_;
};

/// Applied input u = u_bar_held + Psi_r T_r^{-1} eta_r.
double applied_input(const RegulationPlant& plant, std::span<const double> state);

/// Derivative of (z, x, eta_1..eta_r) with the sampled input held.
void closed_loop_derivative(const RegulationPlant& plant, std::span<const double> state, std::span<double> dstate);

double tracking_error(double x1, std::span<const double> v, const AgentModel& model);

/// x_bar_1 = e, x_bar_j = x_j - Psi_{j-1} T_{j-1}^{-1} eta_{j-1}.
std::vector<double> sensor_bar_x(const RegulationPlant& plant, std::span<const double> state, double e);

/// Time derivative of x_bar by the chain rule; e_dot = x1' - grad c(v) . v'.
std::vector<double> sensor_bar_x_dot(const RegulationPlant& plant, std::span<const double> dstate, double e_dot);

struct VarpiQ {
  double varpi = 0.0;
  double q = 0.0;
};

VarpiQ varpi_and_q(const RegulationPlant& plant, std::span<const double> x_bar, std::span<const double> x_bar_dot);

/// Both |varpi| and |q| at or below this are exempt from triggering.
inline constexpr double kTriggerExemption = 1e-12;

struct TriggerValue {
  double value = 0.0;  // |varpi| - sigma(|q|)
  bool exempt = false;
};

TriggerValue regulation_trigger_value(const RegulationPlant& plant, std::span<const double> x_bar,
                                      std::span<const double> x_bar_dot);

void on_regulation_event(RegulationPlant& plant, double t, std::span<const double> x_bar);

struct TransformedCoordinates {
  std::vector<double> z0;
  std::vector<std::vector<double>> z;  // z_1..z_r
  std::vector<double> x_bar;
};

/// Diagnostic only: z0 = z - z_ss(v), z_j = eta_j - T_j vartheta_j(v) - b_j^{-1} N_j x_bar_j.
TransformedCoordinates transformed_coordinates(const RegulationPlant& plant, std::span<const double> state,
                                               std::span<const double> v);

/// Checks f_j(0, .., 0) = 0 and b_j > 0 for a model; throws ValidationError.
void validate_model(const AgentModel& model);

}  // namespace etsync
