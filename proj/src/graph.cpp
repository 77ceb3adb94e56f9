#include "etsync/graph.hpp"

#include <cmath>
#include <string>

#include "etsync/errors.hpp"

namespace etsync {

DirectedGraph::DirectedGraph(Matrix weights) : weights_(std::move(weights)) {
  if (!weights_.is_square()) throw Error(ErrorKind::ValidationError, "graph weight table must be square");
  if (weights_.rows() < 2) throw Error(ErrorKind::ValidationError, "graph needs at least two agents");
  for (std::size_t i = 0; i < size(); ++i) {
    for (std::size_t j = 0; j < size(); ++j) {
      const double a = weights_(i, j);
      const std::string where = "a[" + std::to_string(i + 1) + "][" + std::to_string(j + 1) + "]";
      if (!std::isfinite(a)) throw Error(ErrorKind::ValidationError, where + " is not finite");
      if (a < 0.0) throw Error(ErrorKind::ValidationError, where + " is negative");
      if (i == j && a != 0.0) throw Error(ErrorKind::ValidationError, where + " must be zero (no self loops)");
    }
  }
}

std::vector<std::size_t> DirectedGraph::in_neighbors(std::size_t i) const {
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < size(); ++j)
    if (weights_(i, j) > 0.0) out.push_back(j);
  return out;
}

std::vector<std::size_t> DirectedGraph::out_neighbors(std::size_t i) const {
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < size(); ++j)
    if (weights_(j, i) > 0.0) out.push_back(j);
  return out;
}

double DirectedGraph::in_degree(std::size_t i) const {
  double s = 0.0;
  for (std::size_t j = 0; j < size(); ++j) s += weights_(i, j);
  return s;
}

Matrix laplacian(const DirectedGraph& g) {
  const std::size_t n = g.size();
  Matrix l(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    double diag = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      l(i, j) = -g.weight(i, j);
      diag -= l(i, j);
    }
    l(i, i) = diag;
  }
  return l;
}

namespace {

// Reachability from node 0 along edges (forward: j -> i when a_ij > 0).
std::vector<bool> reach(const DirectedGraph& g, bool forward) {
  const std::size_t n = g.size();
  std::vector<bool> seen(n, false);
  std::vector<std::size_t> stack{0};
  seen[0] = true;
  while (!stack.empty()) {
    const std::size_t u = stack.back();
    stack.pop_back();
    for (std::size_t v = 0; v < n; ++v) {
      const double w = forward ? g.weight(v, u) : g.weight(u, v);
      if (w > 0.0 && !seen[v]) {
        seen[v] = true;
        stack.push_back(v);
      }
    }
  }
  return seen;
}

}  // namespace

bool is_strongly_connected(const DirectedGraph& g) {
  for (bool forward : {true, false}) {
    const auto seen = reach(g, forward);
    for (bool s : seen)
      if (!s) return false;
  }
  return true;
}

std::vector<double> left_eigenvector(const Matrix& l) {
  const std::size_t n = l.rows();
  // Pin r_n = 1 and solve the leading (n-1) block of L^T r = 0; that block is
  // a principal submatrix of an irreducible singular M-matrix, hence
  // nonsingular exactly when the graph is strongly connected.
  const Matrix lt = l.transpose();
  const Matrix m = lt.block(0, 0, n - 1, n - 1);
  Matrix rhs = -lt.block(0, n - 1, n - 1, 1);
  Matrix sol;
  try {
    sol = solve_linear(m, rhs);
  } catch (const Error&) {
    throw Error(ErrorKind::NotStronglyConnected, "zero eigenvalue of the Laplacian is not simple");
  }
  std::vector<double> r(n, 1.0);
  for (std::size_t i = 0; i + 1 < n; ++i) r[i] = sol(i, 0);
  double total = 0.0;
  for (double v : r) total += v;
  for (std::size_t i = 0; i < n; ++i) {
    r[i] /= total;
    if (!(r[i] > 1e-12)) {
      throw Error(ErrorKind::NotStronglyConnected,
                  "left eigenvector entry " + std::to_string(i + 1) + " is not positive");
    }
  }
  return r;
}

Matrix symmetrized_laplacian(const Matrix& l, const std::vector<double>& r) {
  const Matrix rr = Matrix::diagonal(r);
  Matrix lh = rr * l + l.transpose() * rr;
  // Exact symmetry; the two products differ only by rounding.
  for (std::size_t i = 0; i < lh.rows(); ++i)
    for (std::size_t j = i + 1; j < lh.cols(); ++j) lh(i, j) = lh(j, i) = 0.5 * (lh(i, j) + lh(j, i));
  return lh;
}

double lambda2_hat(const Matrix& l, const std::vector<double>& r) {
  const Matrix lh = symmetrized_laplacian(l, r);
  const auto eig = symmetric_eigenvalues(lh);
  if (std::abs(eig.front()) > 1e-8 * std::max(1.0, lh.norm_inf())) {
    throw Error(ErrorKind::SpectralGapViolation,
                "smallest eigenvalue of R L + L^T R is " + std::to_string(eig.front()) + ", expected 0");
  }
  if (!(eig[1] > 1e-10)) {
    throw Error(ErrorKind::SpectralGapViolation, "second eigenvalue of R L + L^T R is not positive");
  }
  return eig[1];
}

GraphSpectra compute_spectra(const DirectedGraph& g) {
  if (!is_strongly_connected(g)) {
    throw Error(ErrorKind::NotStronglyConnected, "strong connectivity assumption: graph not strongly connected");
  }
  GraphSpectra s;
  s.laplacian = laplacian(g);
  s.r = left_eigenvector(s.laplacian);
  s.R = Matrix::diagonal(s.r);
  s.l_hat = symmetrized_laplacian(s.laplacian, s.r);
  s.lambda2_hat = lambda2_hat(s.laplacian, s.r);
  return s;
}

}  // namespace etsync
