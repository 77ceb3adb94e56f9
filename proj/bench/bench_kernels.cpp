#include <benchmark/benchmark.h>

#include <memory>
#include <random>

#include "etsync/kernels.hpp"
#include "etsync/models.hpp"

using namespace etsync;

namespace {

// Mixed network: relative-degree-one and -two plants plus consensus-only agents.
struct Network {
  ReferenceModelSpec model{Matrix{{0, -1}, {1, 0}}, Matrix{{0}, {1}}};
  std::vector<std::optional<RegulationPlant>> plants;
  NetworkLayout layout;
  std::vector<double> state;
  NetworkDynamics dyn;

  explicit Network(std::size_t n) {
    const Matrix phi{{0, -1}, {1, 0}};
    const GeneratorData gen{Matrix{{1, 0}}, phi, Matrix{{-1, 0}, {0, -2}}, Matrix{{1}, {2}}};
    const auto g1 = build_generator({gen});
    const auto g2 = build_generator({GeneratorData{Matrix{{0, -1}}, phi, gen.M, gen.N}, gen});
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (std::size_t i = 0; i < n; ++i) {
      if (i % 5 == 4) {
        plants.emplace_back(std::nullopt);
      } else if (i % 2 == 0) {
        plants.emplace_back(RegulationPlant(std::make_shared<HarmonicTrackingAgent>(u(rng)), g1,
                                            std::make_shared<CubicFeedback>(30, 1), SmallGain::linear(0.99, 40)));
      } else {
        plants.emplace_back(RegulationPlant(std::make_shared<ChainTwoAgent>(u(rng)), g2,
                                            std::make_shared<LinearFeedback>(std::vector<double>{20, 8}),
                                            SmallGain::linear(0.5, 40)));
      }
    }
    layout = make_layout(2, plants);
    state.resize(layout.total);
    for (double& x : state) x = u(rng);
    dyn = NetworkDynamics{&model, &plants, &layout, std::vector<double>(n, 0.1)};
  }
};

template <KernelMode Mode>
void BM_Derivative(benchmark::State& st) {
  const Network net(static_cast<std::size_t>(st.range(0)));
  std::vector<double> d(net.layout.total);
  for (auto _ : st) {
    if constexpr (Mode == KernelMode::Serial) {
      derivative_serial(net.dyn, net.state, d);
    } else {
      derivative_parallel(net.dyn, net.state, d);
    }
    benchmark::DoNotOptimize(d.data());
  }
  st.SetItemsProcessed(st.iterations() * st.range(0));
}

template <KernelMode Mode>
void BM_Rk4Step(benchmark::State& st) {
  const Network net(static_cast<std::size_t>(st.range(0)));
  Rk4Workspace ws;
  ws.resize(net.layout.total);
  std::vector<double> out(net.layout.total);
  for (auto _ : st) {
    rk4_step(net.dyn, net.state, 1e-4, out, ws, Mode);
    benchmark::DoNotOptimize(out.data());
  }
  st.SetItemsProcessed(st.iterations() * st.range(0));
}

}  // namespace

BENCHMARK(BM_Derivative<KernelMode::Serial>)->RangeMultiplier(8)->Range(8, 1 << 15)->UseRealTime();
BENCHMARK(BM_Derivative<KernelMode::Parallel>)->RangeMultiplier(8)->Range(8, 1 << 15)->UseRealTime();
BENCHMARK(BM_Rk4Step<KernelMode::Serial>)->RangeMultiplier(8)->Range(8, 1 << 15)->UseRealTime();
BENCHMARK(BM_Rk4Step<KernelMode::Parallel>)->RangeMultiplier(8)->Range(8, 1 << 15)->UseRealTime();

BENCHMARK_MAIN();
