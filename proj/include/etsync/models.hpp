#pragma once

#include <memory>
#include <string>
#include <vector>

#include "etsync/regulation.hpp"

namespace etsync {

/// Two-dimensional zero dynamics, relative degree one:
///   z' = -z + [0; 2] x
///   x' = -[0 1] z + [1 0] z x + w x + u,  y = x,  |w| <= 1,
/// tracking c(v) = v_1 of a harmonic reference model.
class HarmonicTrackingAgent final : public AgentModel {
 public:
  explicit HarmonicTrackingAgent(double w);

  std::string name() const override { return "paper_example"; }
  std::size_t z_dim() const override { return 2; }
  std::size_t relative_degree() const override { return 1; }
  void f0(std::span<const double> z, double x1, std::span<double> dz) const override;
  double f(std::size_t j, std::span<const double> z, std::span<const double> x) const override;
  double b(std::size_t) const override { return 1.0; }
  double output(std::span<const double> v) const override { return v[0]; }
  std::vector<double> output_gradient(std::span<const double> v) const override;
  std::vector<double> z_ss(std::span<const double> v) const override;
  double x_ss(std::size_t j, std::span<const double> v) const override;
  std::vector<double> vartheta(std::size_t j, std::span<const double> v) const override;

  double w() const { return w_; }

 private:
  double w_;
};

/// Relative-degree-two linear chain used to exercise the sensor compensator:
///   z' = -z + x1,  x1' = x2,  x2' = w x1 + u,  tracking c(v) = v_1.
class ChainTwoAgent final : public AgentModel {
 public:
  explicit ChainTwoAgent(double w) : w_(w) {}

  std::string name() const override { return "chain2"; }
  std::size_t z_dim() const override { return 1; }
  std::size_t relative_degree() const override { return 2; }
  void f0(std::span<const double> z, double x1, std::span<double> dz) const override;
  double f(std::size_t j, std::span<const double> z, std::span<const double> x) const override;
  double b(std::size_t) const override { return 1.0; }
  double output(std::span<const double> v) const override { return v[0]; }
  std::vector<double> output_gradient(std::span<const double> v) const override;
  std::vector<double> z_ss(std::span<const double> v) const override;
  double x_ss(std::size_t j, std::span<const double> v) const override;
  std::vector<double> vartheta(std::size_t j, std::span<const double> v) const override;

 private:
  double w_;
};

/// Built-in model registry keyed by name ("paper_example", "chain2").
std::shared_ptr<const AgentModel> make_builtin_model(const std::string& name, double w);
std::vector<std::string> builtin_model_names();

}  // namespace etsync
