#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>
#include <string>

#include "etsync/graph.hpp"
#include "etsync/numerics.hpp"

namespace etsync::testing {

inline Eigen::MatrixXd to_eigen(const Matrix& m) {
  Eigen::MatrixXd e(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) e(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = m(i, j);
  return e;
}

inline Matrix from_eigen(const Eigen::MatrixXd& e) {
  Matrix m(static_cast<std::size_t>(e.rows()), static_cast<std::size_t>(e.cols()));
  for (Eigen::Index i = 0; i < e.rows(); ++i)
    for (Eigen::Index j = 0; j < e.cols(); ++j) m(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) = e(i, j);
  return m;
}

inline double max_diff(const Matrix& a, const Matrix& b) { return (a - b).max_abs(); }

inline Matrix random_matrix(std::mt19937_64& rng, std::size_t r, std::size_t c, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> d(lo, hi);
  Matrix m(r, c);
  for (double& x : m.data()) x = d(rng);
  return m;
}

/// Directed 4-cycle 4 -> 1 -> 2 -> 3 -> 4 with unit weights.
inline DirectedGraph example_cycle() {
  return DirectedGraph(Matrix{{0, 0, 0, 1}, {1, 0, 0, 0}, {0, 1, 0, 0}, {0, 0, 1, 0}});
}

inline Matrix harmonic_A() { return Matrix{{0, -1}, {1, 0}}; }
inline Matrix input_B() { return Matrix{{0}, {1}}; }

inline std::string scenario_path(const std::string& name) { return std::string(ETSYNC_SCENARIO_DIR) + "/" + name; }

}  // namespace etsync::testing

namespace etsync::testing {

/// Reachability closure by Floyd-Warshall; independent of the graph module.
inline bool brute_force_strongly_connected(const Matrix& w) {
  const std::size_t n = w.rows();
  std::vector<std::vector<bool>> reach(n, std::vector<bool>(n, false));
  for (std::size_t i = 0; i < n; ++i) {
    reach[i][i] = true;
    for (std::size_t j = 0; j < n; ++j)
      if (w(i, j) > 0.0) reach[j][i] = true;  // edge j -> i
  }
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (reach[i][k] && reach[k][j]) reach[i][j] = true;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (!reach[i][j]) return false;
  return true;
}

/// Random weight matrix with about `density` of off-diagonal edges present.
inline Matrix random_weights(std::mt19937_64& rng, std::size_t n, double density) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_real_distribution<double> w(0.2, 2.0);
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j && u(rng) < density) m(i, j) = w(rng);
  return m;
}

/// Sorted roots of the characteristic polynomial of a symmetric 3x3 matrix,
/// by the trigonometric solution of the depressed cubic.
inline std::array<double, 3> symmetric_3x3_eigen_by_charpoly(const Matrix& s) {
  const double tr = s.trace();
  const double minors = s(0, 0) * s(1, 1) - s(0, 1) * s(1, 0) + s(0, 0) * s(2, 2) - s(0, 2) * s(2, 0) +
                        s(1, 1) * s(2, 2) - s(1, 2) * s(2, 1);
  const double det = s(0, 0) * (s(1, 1) * s(2, 2) - s(1, 2) * s(2, 1)) -
                     s(0, 1) * (s(1, 0) * s(2, 2) - s(1, 2) * s(2, 0)) +
                     s(0, 2) * (s(1, 0) * s(2, 1) - s(1, 1) * s(2, 0));
  // x^3 + a x^2 + b x + c with a = -tr, b = minors, c = -det; x = t - a/3.
  const double a = -tr, b = minors, c = -det;
  const double p = b - a * a / 3.0;
  const double q = 2.0 * a * a * a / 27.0 - a * b / 3.0 + c;
  std::array<double, 3> roots{};
  if (std::abs(p) < 1e-300) {
    roots.fill(std::cbrt(-q) - a / 3.0);
  } else {
    const double m = 2.0 * std::sqrt(-p / 3.0);
    const double arg = std::clamp(3.0 * q / (p * m), -1.0, 1.0);
    const double theta = std::acos(arg) / 3.0;
    for (int k = 0; k < 3; ++k) roots[static_cast<std::size_t>(k)] = m * std::cos(theta - 2.0 * M_PI * k / 3.0) - a / 3.0;
  }
  std::sort(roots.begin(), roots.end());
  return roots;
}

/// Fixed-seed random strongly connected 3-agent graph.
inline Matrix random_strongly_connected_3(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (;;) {
    Matrix w = random_weights(rng, 3, 0.6);
    if (brute_force_strongly_connected(w)) return w;
  }
}

}  // namespace etsync::testing
