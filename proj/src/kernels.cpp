#include "etsync/kernels.hpp"

#include <cmath>
#include <exception>
#include <string>

#include "etsync/errors.hpp"

namespace etsync {

NetworkLayout make_layout(std::size_t q, const std::vector<std::optional<RegulationPlant>>& plants) {
  NetworkLayout lay;
  lay.q = q;
  std::size_t off = 0;
  for (const auto& p : plants) {
    lay.offsets.push_back(off);
    const std::size_t d = p ? p->state_dim() : 0;
    lay.plant_dims.push_back(d);
    off += q + d;
  }
  lay.total = off;
  return lay;
}

void NetworkDynamics::agent_derivative(std::size_t i, std::span<const double> x, std::span<double> dx) const {
  const std::size_t q = layout->q;
  const std::size_t off = layout->offsets[i];
  const Matrix& A = model->A;
  const Matrix& B = model->B;
  for (std::size_t a = 0; a < q; ++a) {
    double s = B(a, 0) * mu[i];
    for (std::size_t c = 0; c < q; ++c) s += A(a, c) * x[off + c];
    dx[off + a] = s;
  }
  const auto& plant = (*plants)[i];
  if (plant) {
    const std::size_t po = layout->plant_offset(i);
    const std::size_t d = layout->plant_dims[i];
    closed_loop_derivative(*plant, x.subspan(po, d), dx.subspan(po, d));
  }
}

void derivative_serial(const NetworkDynamics& dyn, std::span<const double> x, std::span<double> dx) {
  for (std::size_t i = 0; i < dyn.layout->agents(); ++i) dyn.agent_derivative(i, x, dx);
}

void derivative_parallel(const NetworkDynamics& dyn, std::span<const double> x, std::span<double> dx) {
  const auto n = static_cast<long>(dyn.layout->agents());
  std::exception_ptr failure;
#pragma omp parallel for schedule(static)
  for (long i = 0; i < n; ++i) {
    try {
      dyn.agent_derivative(static_cast<std::size_t>(i), x, dx);
    } catch (...) {
#pragma omp critical(etsync_kernel_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
}

void Rk4Workspace::resize(std::size_t n) {
  k1.resize(n);
  k2.resize(n);
  k3.resize(n);
  k4.resize(n);
  tmp.resize(n);
}

void rk4_step(const NetworkDynamics& dyn, std::span<const double> x, double h, std::span<double> out,
              Rk4Workspace& ws, KernelMode mode) {
  const std::size_t n = x.size();
  ws.resize(n);
  auto eval = [&](std::span<const double> in, std::vector<double>& k) {
    if (mode == KernelMode::Parallel) {
      derivative_parallel(dyn, in, k);
    } else {
      derivative_serial(dyn, in, k);
    }
  };
  eval(x, ws.k1);
  for (std::size_t j = 0; j < n; ++j) ws.tmp[j] = x[j] + 0.5 * h * ws.k1[j];
  eval(ws.tmp, ws.k2);
  for (std::size_t j = 0; j < n; ++j) ws.tmp[j] = x[j] + 0.5 * h * ws.k2[j];
  eval(ws.tmp, ws.k3);
  for (std::size_t j = 0; j < n; ++j) ws.tmp[j] = x[j] + h * ws.k3[j];
  eval(ws.tmp, ws.k4);
  for (std::size_t j = 0; j < n; ++j) {
    out[j] = x[j] + (h / 6.0) * (ws.k1[j] + 2.0 * ws.k2[j] + 2.0 * ws.k3[j] + ws.k4[j]);
    if (!std::isfinite(out[j])) {
      throw Error(ErrorKind::NonFiniteState, "state component " + std::to_string(j) + " became non-finite");
    }
  }
}

}  // namespace etsync
