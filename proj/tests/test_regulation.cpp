#include <doctest.h>

#include <cmath>
#include <memory>

#include "etsync/errors.hpp"
#include "etsync/models.hpp"
#include "etsync/regulation.hpp"
#include "support.hpp"

using namespace etsync;
using namespace etsync::testing;

namespace {

GeneratorData example_generator() {
  return GeneratorData{Matrix{{1, 0}}, harmonic_A(), Matrix{{-1, 0}, {0, -2}}, Matrix{{1}, {2}}};
}

GeneratorData shifted_generator() {
  return GeneratorData{Matrix{{0, -1}}, harmonic_A(), Matrix{{-1, 0}, {0, -2}}, Matrix{{1}, {2}}};
}

RegulationPlant example_plant(double w) {
  return RegulationPlant(std::make_shared<HarmonicTrackingAgent>(w), build_generator({example_generator()}),
                         std::make_shared<CubicFeedback>(30.0, 1.0), SmallGain::linear(0.99, 40.0));
}

RegulationPlant chain_plant(double w) {
  return RegulationPlant(std::make_shared<ChainTwoAgent>(w),
                         build_generator({shifted_generator(), example_generator()}),
                         std::make_shared<LinearFeedback>(std::vector<double>{20.0, 8.0}),
                         SmallGain::linear(0.5, 40.0));
}

// Directional derivative of f along v' = A v by central differences.
template <class F>
std::vector<double> flow_derivative(F f, const std::vector<double>& v) {
  const double h = 1e-6;
  const auto av = harmonic_A() * std::span<const double>(v);
  std::vector<double> vp = v, vm = v;
  for (std::size_t k = 0; k < v.size(); ++k) {
    vp[k] += h * av[k];
    vm[k] -= h * av[k];
  }
  const auto fp = f(vp);
  const auto fm = f(vm);
  std::vector<double> d(fp.size());
  for (std::size_t k = 0; k < d.size(); ++k) d[k] = (fp[k] - fm[k]) / (2.0 * h);
  return d;
}

// Steady-state full state (z, x, eta) for reference v.
std::vector<double> steady_state(const RegulationPlant& plant, const std::vector<double>& v) {
  const auto& model = plant.model();
  std::vector<double> s(plant.state_dim(), 0.0);
  const auto zs = model.z_ss(v);
  std::copy(zs.begin(), zs.end(), s.begin());
  for (std::size_t j = 1; j <= plant.relative_degree(); ++j) {
    s[plant.x_offset() + j - 1] = model.x_ss(j, v);
    const auto& blk = plant.generator().blocks[j - 1];
    const auto eta = blk.T * std::span<const double>(model.vartheta(j, v));
    std::copy(eta.begin(), eta.end(), s.begin() + static_cast<long>(plant.eta_offset(j)));
  }
  return s;
}

}  // namespace

TEST_SUITE("generator") {
  TEST_CASE("example Sylvester solution") {
    const auto blk = build_generator_block(example_generator());
    CHECK(max_diff(blk.T, Matrix{{0.5, 0.5}, {0.8, 0.4}}) <= 1e-12);
    CHECK(determinant(blk.T) == doctest::Approx(-0.2).epsilon(1e-12));
    CHECK(blk.sylvester_residual <= 1e-9);
    CHECK(max_diff(blk.T * blk.T_inv, Matrix::identity(2)) <= 1e-12);
  }

  TEST_CASE("scalar case") {
    const auto blk = build_generator_block(GeneratorData{Matrix{{1}}, Matrix{{0}}, Matrix{{-1}}, Matrix{{1}}});
    CHECK(blk.T(0, 0) == doctest::Approx(1.0).epsilon(1e-14));
  }

  TEST_CASE("matches a Kronecker solve on random stable data") {
    std::mt19937_64 rng(12);
    for (int trial = 0; trial < 20; ++trial) {
      GeneratorData g = example_generator();
      g.M = Matrix{{-1.0 - trial * 0.1, 0.3}, {0.0, -2.5}};
      g.N = random_matrix(rng, 2, 1, 0.5, 2.0);
      GeneratorBlock blk;
      try {
        blk = build_generator_block(g);
      } catch (const Error&) {
        continue;  // singular T for this draw
      }
      // vec(M T - T Phi) = (I (x) M - Phi^T (x) I) vec(T) = -vec(N Psi)
      const Eigen::MatrixXd M = to_eigen(g.M), Phi = to_eigen(g.Phi), I = Eigen::MatrixXd::Identity(2, 2);
      Eigen::MatrixXd big(4, 4);
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) big.block(2 * a, 2 * b, 2, 2) = I(a, b) * M - Phi(b, a) * I;
      const Eigen::MatrixXd rhs_m = -to_eigen(g.N * g.Psi);
      const Eigen::VectorXd rhs = Eigen::Map<const Eigen::VectorXd>(rhs_m.data(), 4);
      const Eigen::VectorXd vecT = big.partialPivLu().solve(rhs);
      const Eigen::MatrixXd T = Eigen::Map<const Eigen::MatrixXd>(vecT.data(), 2, 2);
      CHECK(max_diff(blk.T, from_eigen(T)) <= 1e-10);
    }
  }

  TEST_CASE("M with an unstable eigenvalue") {
    GeneratorData g = example_generator();
    g.M = Matrix{{1, 0}, {0, -2}};
    try {
      build_generator_block(g);
      FAIL("expected NotHurwitz");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::NotHurwitz);
    }
  }

  TEST_CASE("unobservable output row") {
    GeneratorData g = example_generator();
    g.Psi = Matrix{{0, 0}};
    try {
      build_generator_block(g);
      FAIL("expected NotObservable");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::NotObservable);
    }
  }

  TEST_CASE("uncontrollable filter") {
    GeneratorData g = example_generator();
    g.N = Matrix{{1}, {0}};
    try {
      build_generator_block(g);
      FAIL("expected NotControllable");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::NotControllable);
    }
  }

  TEST_CASE("block count must match the relative degree") {
    CHECK_THROWS_AS(RegulationPlant(std::make_shared<ChainTwoAgent>(0.0), build_generator({example_generator()}),
                                    std::make_shared<CubicFeedback>(1, 1), SmallGain::linear(0.5, 1.0)),
                    Error);
  }
}

TEST_SUITE("feedback laws and gains") {
  TEST_CASE("cubic law and gradient") {
    const CubicFeedback k(30.0, 1.0);
    const std::vector<double> e{0.2};
    CHECK(k.value(e) == doctest::Approx(-6.008).epsilon(1e-14));
    CHECK(k.gradient(std::vector<double>{1.0})[0] == -33.0);
  }

  TEST_CASE("linear law") {
    const LinearFeedback k({20.0, 8.0});
    CHECK(k.value(std::vector<double>{1.0, -0.5}) == -16.0);
    CHECK(k.gradient(std::vector<double>{3.0, 4.0}) == std::vector<double>{-20.0, -8.0});
  }

  TEST_CASE("small-gain sigma") {
    const auto s = SmallGain::linear(0.99, 40.0);
    CHECK(s(1.0) == doctest::Approx(0.02475).epsilon(1e-14));
    CHECK(s(0.0) == 0.0);
    CHECK_THROWS_AS(SmallGain::linear(1.0, 40.0), Error);
    CHECK_THROWS_AS(SmallGain::linear(0.5, 0.0), Error);
  }
}

TEST_SUITE("sensor and trigger") {
  TEST_CASE("relative degree one: x_bar is the tracking error") {
    const auto plant = example_plant(0.3);
    std::vector<double> state(plant.state_dim(), 0.7);
    CHECK(sensor_bar_x(plant, state, 0.25) == std::vector<double>{0.25});
  }

  TEST_CASE("relative degree two with T = I") {
    GeneratorBlock identity;
    identity.Psi = Matrix{{1, 0}};
    identity.Phi = harmonic_A();
    identity.M = Matrix{{-1, 0}, {0, -2}};
    identity.N = Matrix{{1}, {2}};
    identity.T = identity.T_inv = Matrix::identity(2);
    identity.Psi_T_inv = identity.Psi;
    SteadyStateGenerator gen;
    gen.blocks = {identity, build_generator_block(example_generator())};
    const RegulationPlant plant(std::make_shared<ChainTwoAgent>(0.0), gen,
                                std::make_shared<LinearFeedback>(std::vector<double>{1.0, 1.0}),
                                SmallGain::linear(0.5, 1.0));
    std::vector<double> state(plant.state_dim(), 0.0);
    state[plant.x_offset() + 1] = 1.0;
    state[plant.eta_offset(1)] = 0.3;
    const auto xb = sensor_bar_x(plant, state, 0.1);
    CHECK(xb[0] == 0.1);
    CHECK(xb[1] == doctest::Approx(0.7).epsilon(1e-15));

    state[plant.eta_offset(1)] = 0.0;
    CHECK(sensor_bar_x(plant, state, 0.1)[1] == 1.0);
  }

  TEST_CASE("q from the cubic gradient") {
    auto plant = example_plant(0.0);
    const std::vector<double> xb{1.0}, xbd{0.5};
    plant.x_bar_held = xb;
    const auto vq = varpi_and_q(plant, xb, xbd);
    CHECK(vq.q == doctest::Approx(-16.5).epsilon(1e-15));
    CHECK(vq.varpi == 0.0);
  }

  TEST_CASE("q for a linear law is -k e_dot") {
    auto plant = chain_plant(0.0);
    const std::vector<double> xb{0.4, -0.1}, xbd{0.25, 0.0};
    CHECK(varpi_and_q(plant, xb, xbd).q == doctest::Approx(-20.0 * 0.25));
  }

  TEST_CASE("trigger value with varpi = 0.1 and q = 1") {
    auto plant = example_plant(0.0);
    // kappa(held) - kappa(x_bar) = 0.1 with a purely linear section: k3 = 0.
    plant = RegulationPlant(std::make_shared<HarmonicTrackingAgent>(0.0), build_generator({example_generator()}),
                            std::make_shared<LinearFeedback>(std::vector<double>{1.0}),
                            SmallGain::linear(0.99, 40.0));
    plant.x_bar_held = {-0.1};
    const std::vector<double> xb{0.0}, xbd{-1.0};
    const auto tv = regulation_trigger_value(plant, xb, xbd);
    CHECK(tv.value == doctest::Approx(0.07525).epsilon(1e-14));
    CHECK_FALSE(tv.exempt);
  }

  TEST_CASE("no trigger immediately after an event") {
    auto plant = example_plant(0.0);
    const std::vector<double> xb{0.37}, xbd{-2.0};
    on_regulation_event(plant, 1.5, xb);
    const auto tv = regulation_trigger_value(plant, xb, xbd);
    CHECK(tv.value <= 0.0);
    CHECK(tv.value == doctest::Approx(-plant.sigma()(std::abs(varpi_and_q(plant, xb, xbd).q))));
  }

  TEST_CASE("exemption when both sides vanish") {
    auto plant = example_plant(0.0);
    const std::vector<double> zero{0.0};
    on_regulation_event(plant, 0.0, zero);
    CHECK(regulation_trigger_value(plant, zero, zero).exempt);
    const std::vector<double> small{1e-3};
    CHECK_FALSE(regulation_trigger_value(plant, zero, small).exempt);
  }

  TEST_CASE("event updates the held input and is idempotent") {
    auto plant = example_plant(0.0);
    const std::vector<double> xb{0.2};
    on_regulation_event(plant, 2.0, xb);
    CHECK(plant.u_bar_held == doctest::Approx(-6.008).epsilon(1e-14));
    CHECK(plant.t_last == 2.0);
    CHECK(plant.k == 1);
    const double held = plant.u_bar_held;
    on_regulation_event(plant, 2.0, xb);
    CHECK(plant.u_bar_held == held);
    CHECK(plant.x_bar_held == xb);
  }
}

TEST_SUITE("closed loop") {
  TEST_CASE("origin is an equilibrium") {
    for (auto plant : {example_plant(0.7), chain_plant(-0.4)}) {
      std::vector<double> s(plant.state_dim(), 0.0), ds(plant.state_dim(), 1.0);
      closed_loop_derivative(plant, s, ds);
      for (double d : ds) CHECK(d == 0.0);
    }
  }

  TEST_CASE("plant equation with x = 1 and the held input") {
    auto plant = example_plant(0.0);
    const std::vector<double> xb{1.0};
    on_regulation_event(plant, 0.0, xb);
    std::vector<double> s(plant.state_dim(), 0.0), ds(plant.state_dim());
    s[plant.x_offset()] = 1.0;
    closed_loop_derivative(plant, s, ds);
    CHECK(ds[plant.x_offset()] == doctest::Approx(-31.0));
    CHECK(applied_input(plant, s) == doctest::Approx(-31.0));
  }

  TEST_CASE("filter equilibrium under a constant input") {
    auto plant = example_plant(0.0);
    const double c0 = 0.8;
    plant.u_bar_held = c0;
    const auto& blk = plant.generator().blocks[0];
    // With u held at c0 the filter rests where M eta + N u = 0, with u = c0 + Psi T^-1 eta.
    const Matrix closed = blk.M + blk.N * blk.Psi_T_inv;
    const auto eta = solve_linear(closed, -(c0 * blk.N));
    std::vector<double> s(plant.state_dim(), 0.0), ds(plant.state_dim());
    std::copy(eta.data().begin(), eta.data().end(), s.begin() + static_cast<long>(plant.eta_offset(1)));
    closed_loop_derivative(plant, s, ds);
    for (std::size_t k = 0; k < blk.dim(); ++k) CHECK(std::abs(ds[plant.eta_offset(1) + k]) <= 1e-12);
  }

  TEST_CASE("non-finite state is reported") {
    const auto plant = example_plant(0.0);
    std::vector<double> s(plant.state_dim(), 0.0), ds(plant.state_dim());
    s[0] = std::numeric_limits<double>::infinity();
    try {
      closed_loop_derivative(plant, s, ds);
      FAIL("expected NonFiniteState");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::NonFiniteState);
    }
  }

  TEST_CASE("steady-state manifold is invariant and maps to zero transformed coordinates") {
    const std::vector<std::vector<double>> refs{{1.0, 0.0}, {-0.3, 0.8}, {0.05, -1.7}};
    for (auto plant : {example_plant(-0.8), example_plant(0.9), chain_plant(0.5), chain_plant(-1.0)}) {
      const std::size_t r = plant.relative_degree();
      for (const auto& v : refs) {
        const auto s = steady_state(plant, v);
        const auto expected = flow_derivative([&](const std::vector<double>& vv) { return steady_state(plant, vv); }, v);
        std::vector<double> ds(plant.state_dim());
        closed_loop_derivative(plant, s, ds);
        for (std::size_t k = 0; k < ds.size(); ++k) CHECK(ds[k] == doctest::Approx(expected[k]).epsilon(1e-7).scale(1.0));

        CHECK(tracking_error(s[plant.x_offset()], v, plant.model()) == doctest::Approx(0.0).scale(1.0));
        const auto tc = transformed_coordinates(plant, s, v);
        for (double x : tc.z0) CHECK(std::abs(x) <= 1e-12);
        for (const auto& zj : tc.z)
          for (double x : zj) CHECK(std::abs(x) <= 1e-12);
        for (double x : tc.x_bar) CHECK(std::abs(x) <= 1e-12);
        CHECK(plant.model().x_ss(r + 1, v) ==
              doctest::Approx((plant.generator().blocks[r - 1].Psi * std::span<const double>(plant.model().vartheta(r, v)))[0]));
      }
    }
  }
}

TEST_SUITE("models") {
  TEST_CASE("built-in registry") {
    CHECK(make_builtin_model("paper_example", 0.1)->name() == "paper_example");
    CHECK(make_builtin_model("chain2", 0.1)->relative_degree() == 2);
    CHECK_THROWS_AS(make_builtin_model("nope", 0.0), Error);
    CHECK(builtin_model_names().size() == 2);
  }

  TEST_CASE("built-in models vanish at the origin") {
    for (const auto& name : builtin_model_names()) CHECK_NOTHROW(validate_model(*make_builtin_model(name, 0.6)));
  }

  TEST_CASE("a model with a drift at the origin is rejected") {
    struct Drifting final : AgentModel {
      std::string name() const override { return "drift"; }
      std::size_t z_dim() const override { return 1; }
      std::size_t relative_degree() const override { return 1; }
      void f0(std::span<const double>, double, std::span<double> dz) const override { dz[0] = 0.0; }
      double f(std::size_t, std::span<const double>, std::span<const double>) const override { return 1.0; }
      double b(std::size_t) const override { return 1.0; }
      double output(std::span<const double> v) const override { return v[0]; }
      std::vector<double> output_gradient(std::span<const double>) const override { return {1.0, 0.0}; }
      std::vector<double> z_ss(std::span<const double>) const override { return {0.0}; }
      double x_ss(std::size_t, std::span<const double>) const override { return 0.0; }
      std::vector<double> vartheta(std::size_t, std::span<const double>) const override { return {0.0, 0.0}; }
    };
    CHECK_THROWS_AS(validate_model(Drifting{}), Error);
  }
}
