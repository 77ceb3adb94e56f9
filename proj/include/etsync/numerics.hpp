#pragma once

#include <complex>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace etsync {

/// Fixed numerical tolerances of the design stage. Tests reference these
/// directly instead of repeating literals.
struct Tolerances {
  static constexpr double kPivot = 1e-12;            // relative to ||A||_inf
  static constexpr double kSymmetry = 1e-10;         // relative to ||S||_inf
  static constexpr double kJacobiOffDiagonal = 1e-12;  // relative to ||S||_F
  static constexpr int kJacobiMaxSweeps = 100;
  static constexpr double kPowerIteration = 1e-10;
  static constexpr int kPowerIterationMax = 10000;
  static constexpr double kSignIteration = 1e-13;
  static constexpr int kSignIterationMax = 100;
  static constexpr double kAreResidual = 1e-8;
  static constexpr double kSylvesterResidual = 1e-9;
};

/// Dense row-major real matrix. Sized for the small systems of the design
/// stage (tens of rows), not for large-scale work.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  static Matrix identity(std::size_t n);
  static Matrix column(std::span<const double> values);
  static Matrix row(std::span<const double> values);
  static Matrix diagonal(std::span<const double> values);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool empty() const noexcept { return data_.empty(); }
  bool is_square() const noexcept { return rows_ == cols_; }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

  Matrix transpose() const;
  Matrix block(std::size_t r0, std::size_t c0, std::size_t nr, std::size_t nc) const;
  void set_block(std::size_t r0, std::size_t c0, const Matrix& b);

  /// Column vector entries as a std::vector (requires cols()==1 or rows()==1).
  std::vector<double> to_vector() const;

  double norm_inf() const;  // max absolute row sum
  double norm_fro() const;
  double max_abs() const;
  double trace() const;
  bool all_finite() const;

  Matrix& operator+=(const Matrix& o);
  Matrix& operator-=(const Matrix& o);
  Matrix& operator*=(double s);

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Matrix operator+(Matrix a, const Matrix& b);
Matrix operator-(Matrix a, const Matrix& b);
Matrix operator-(Matrix a);
Matrix operator*(const Matrix& a, const Matrix& b);
Matrix operator*(Matrix a, double s);
Matrix operator*(double s, Matrix a);
std::vector<double> operator*(const Matrix& a, std::span<const double> x);

Matrix kron(const Matrix& a, const Matrix& b);

double vector_norm(std::span<const double> x);

/// Gaussian elimination with partial pivoting. `b` may hold several columns.
/// Throws SingularMatrix when a pivot falls below kPivot * ||A||_inf.
Matrix solve_linear(const Matrix& a, const Matrix& b);
Matrix inverse(const Matrix& a);
double determinant(const Matrix& a);
/// Numerical rank by elimination with the same relative pivot threshold.
std::size_t rank(const Matrix& a);

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending.
std::vector<double> symmetric_eigenvalues(const Matrix& s);

/// Largest singular value by power iteration on M^T M.
double spectral_norm(const Matrix& m);

/// Solves A X + X B = C through the Kronecker-vectorized system.
Matrix solve_sylvester(const Matrix& a, const Matrix& b, const Matrix& c);

/// Stabilizing solution of P A + A^T P - lambda P B B^T P + beta I = 0 via the
/// matrix sign function of the associated Hamiltonian.
Matrix solve_are(const Matrix& a, const Matrix& b, double lambda, double beta);

/// Residual ||P A + A^T P - lambda P B B^T P + beta I||_inf.
double are_residual(const Matrix& p, const Matrix& a, const Matrix& b, double lambda, double beta);

/// Eigenvalues of a small general matrix (characteristic polynomial by
/// Faddeev-LeVerrier, roots by Durand-Kerner). Used only for structural
/// checks on n <= 8 systems.
std::vector<std::complex<double>> general_eigenvalues(const Matrix& m);

/// True when every eigenvalue of `m` has real part below zero; decided by the
/// Lyapunov test M^T X + X M = -I with X > 0.
bool is_hurwitz(const Matrix& m);

}  // namespace etsync
