#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "etsync/consensus.hpp"
#include "etsync/regulation.hpp"

namespace etsync {

/// Flat layout of the coupled network state: agent i owns
/// [v_i (q) | z_i (m) | x_i (r) | eta_i,1 .. eta_i,r] starting at offset(i).
struct NetworkLayout {
  std::size_t q = 0;
  std::vector<std::size_t> offsets;
  std::vector<std::size_t> plant_dims;  // 0 for consensus-only agents
  std::size_t total = 0;

  std::size_t agents() const noexcept { return offsets.size(); }
  std::size_t plant_offset(std::size_t i) const noexcept { return offsets[i] + q; }
};

NetworkLayout make_layout(std::size_t q, const std::vector<std::optional<RegulationPlant>>& plants);

/// Right-hand side of the coupled network with every sampled input held:
/// v_i' = A v_i + B mu_i plus each agent's regulation closed loop.
struct NetworkDynamics {
  const ReferenceModelSpec* model = nullptr;
  const std::vector<std::optional<RegulationPlant>>* plants = nullptr;
  const NetworkLayout* layout = nullptr;
  std::vector<double> mu;  // held consensus inputs

  void agent_derivative(std::size_t i, std::span<const double> x, std::span<double> dx) const;
};

/// Reference implementation: agents evaluated in order on one thread.
void derivative_serial(const NetworkDynamics& dyn, std::span<const double> x, std::span<double> dx);
/// OpenMP implementation, bit-identical to the serial reference.
void derivative_parallel(const NetworkDynamics& dyn, std::span<const double> x, std::span<double> dx);

enum class KernelMode { Serial, Parallel };

/// Scratch buffers for one classical RK4 step.
struct Rk4Workspace {
  std::vector<double> k1, k2, k3, k4, tmp;
  void resize(std::size_t n);
};

/// out = x advanced by one classical RK4 step of length h.
void rk4_step(const NetworkDynamics& dyn, std::span<const double> x, double h, std::span<double> out,
              Rk4Workspace& ws, KernelMode mode);

}  // namespace etsync
