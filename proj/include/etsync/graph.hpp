#pragma once

#include <cstddef>
#include <vector>

#include "etsync/numerics.hpp"

namespace etsync {

/// Weighted directed topology. weights(i, j) = a_ij is the weight of the edge
/// j -> i, i.e. agent i listens to agent j.
class DirectedGraph {
 public:
  explicit DirectedGraph(Matrix weights);

  std::size_t size() const noexcept { return weights_.rows(); }
  const Matrix& weights() const noexcept { return weights_; }
  double weight(std::size_t i, std::size_t j) const { return weights_(i, j); }

  /// {j : a_ij > 0}, ascending.
  std::vector<std::size_t> in_neighbors(std::size_t i) const;
  /// {j : a_ji > 0}, ascending.
  std::vector<std::size_t> out_neighbors(std::size_t i) const;
  double in_degree(std::size_t i) const;

 private:
  Matrix weights_;
};

struct GraphSpectra {
  Matrix laplacian;
  std::vector<double> r;  // positive, sums to one
  Matrix R;               // diag(r)
  Matrix l_hat;           // R L + L^T R
  double lambda2_hat = 0.0;
};

Matrix laplacian(const DirectedGraph& g);
bool is_strongly_connected(const DirectedGraph& g);
std::vector<double> left_eigenvector(const Matrix& laplacian);
double lambda2_hat(const Matrix& laplacian, const std::vector<double>& r);
Matrix symmetrized_laplacian(const Matrix& laplacian, const std::vector<double>& r);

/// Full spectral bundle; throws NotStronglyConnected up front.
GraphSpectra compute_spectra(const DirectedGraph& g);

}  // namespace etsync
