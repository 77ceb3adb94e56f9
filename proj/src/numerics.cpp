#include "etsync/numerics.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <numeric>
#include <string>

#include "etsync/errors.hpp"

namespace etsync {

namespace {

void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw std::invalid_argument(std::string("matrix shape mismatch in ") + op);
  }
}

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = rows.size();
  cols_ = rows_ == 0 ? 0 : rows.begin()->size();
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) throw std::invalid_argument("ragged matrix initializer");
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::column(std::span<const double> values) {
  Matrix m(values.size(), 1);
  std::copy(values.begin(), values.end(), m.data_.begin());
  return m;
}

Matrix Matrix::row(std::span<const double> values) {
  Matrix m(1, values.size());
  std::copy(values.begin(), values.end(), m.data_.begin());
  return m;
}

Matrix Matrix::diagonal(std::span<const double> values) {
  Matrix m(values.size(), values.size());
  for (std::size_t i = 0; i < values.size(); ++i) m(i, i) = values[i];
  return m;
}

Matrix Matrix::transpose() const {
  Matrix t(cols_, rows_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
  return t;
}

Matrix Matrix::block(std::size_t r0, std::size_t c0, std::size_t nr, std::size_t nc) const {
  assert(r0 + nr <= rows_ && c0 + nc <= cols_);
  Matrix b(nr, nc);
  for (std::size_t i = 0; i < nr; ++i)
    for (std::size_t j = 0; j < nc; ++j) b(i, j) = (*this)(r0 + i, c0 + j);
  return b;
}

void Matrix::set_block(std::size_t r0, std::size_t c0, const Matrix& b) {
  assert(r0 + b.rows() <= rows_ && c0 + b.cols() <= cols_);
  for (std::size_t i = 0; i < b.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) (*this)(r0 + i, c0 + j) = b(i, j);
}

std::vector<double> Matrix::to_vector() const {
  if (rows_ != 1 && cols_ != 1) throw std::invalid_argument("to_vector on a non-vector matrix");
  return data_;
}

double Matrix::norm_inf() const {
  double best = 0.0;
  for (std::size_t i = 0; i < rows_; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < cols_; ++j) s += std::abs((*this)(i, j));
    best = std::max(best, s);
  }
  return best;
}

double Matrix::norm_fro() const {
  double s = 0.0;
  for (double v : data_) s += v * v;
  return std::sqrt(s);
}

double Matrix::max_abs() const {
  double m = 0.0;
  for (double v : data_) m = std::max(m, std::abs(v));
  return m;
}

double Matrix::trace() const {
  double s = 0.0;
  for (std::size_t i = 0; i < std::min(rows_, cols_); ++i) s += (*this)(i, i);
  return s;
}

bool Matrix::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

Matrix& Matrix::operator+=(const Matrix& o) {
  require_same_shape(*this, o, "+=");
  for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += o.data_[k];
  return *this;
}

Matrix& Matrix::operator-=(const Matrix& o) {
  require_same_shape(*this, o, "-=");
  for (std::size_t k = 0; k < data_.size(); ++k) data_[k] -= o.data_[k];
  return *this;
}

Matrix& Matrix::operator*=(double s) {
  for (double& v : data_) v *= s;
  return *this;
}

Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
Matrix operator-(Matrix a) { return a *= -1.0; }
Matrix operator*(Matrix a, double s) { return a *= s; }
Matrix operator*(double s, Matrix a) { return a *= s; }

Matrix operator*(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) throw std::invalid_argument("matrix shape mismatch in *");
  Matrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += aik * b(k, j);
    }
  return c;
}

std::vector<double> operator*(const Matrix& a, std::span<const double> x) {
  if (a.cols() != x.size()) throw std::invalid_argument("matrix-vector shape mismatch");
  std::vector<double> y(a.rows(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < a.cols(); ++j) s += a(i, j) * x[j];
    y[i] = s;
  }
  return y;
}

Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix k(a.rows() * b.rows(), a.cols() * b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) {
      const double aij = a(i, j);
      for (std::size_t p = 0; p < b.rows(); ++p)
        for (std::size_t q = 0; q < b.cols(); ++q)
          k(i * b.rows() + p, j * b.cols() + q) = aij * b(p, q);
    }
  return k;
}

double vector_norm(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return std::sqrt(s);
}

Matrix solve_linear(const Matrix& a, const Matrix& b) {
  if (!a.is_square()) throw std::invalid_argument("solve_linear: A must be square");
  if (b.rows() != a.rows()) throw std::invalid_argument("solve_linear: b not conformable");
  const std::size_t n = a.rows();
  const std::size_t m = b.cols();
  const double threshold = Tolerances::kPivot * a.norm_inf();

  Matrix lu = a;
  Matrix x = b;
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t piv = k;
    double best = std::abs(lu(k, k));
    for (std::size_t i = k + 1; i < n; ++i) {
      if (std::abs(lu(i, k)) > best) {
        best = std::abs(lu(i, k));
        piv = i;
      }
    }
    if (best < threshold || best == 0.0) {
      throw Error(ErrorKind::SingularMatrix,
                  "pivot " + std::to_string(best) + " below threshold at column " + std::to_string(k));
    }
    if (piv != k) {
      for (std::size_t j = 0; j < n; ++j) std::swap(lu(k, j), lu(piv, j));
      for (std::size_t j = 0; j < m; ++j) std::swap(x(k, j), x(piv, j));
    }
    for (std::size_t i = k + 1; i < n; ++i) {
      const double f = lu(i, k) / lu(k, k);
      if (f == 0.0) continue;
      lu(i, k) = 0.0;
      for (std::size_t j = k + 1; j < n; ++j) lu(i, j) -= f * lu(k, j);
      for (std::size_t j = 0; j < m; ++j) x(i, j) -= f * x(k, j);
    }
  }
  for (std::size_t kk = n; kk-- > 0;) {
    for (std::size_t j = 0; j < m; ++j) {
      double s = x(kk, j);
      for (std::size_t c = kk + 1; c < n; ++c) s -= lu(kk, c) * x(c, j);
      x(kk, j) = s / lu(kk, kk);
    }
  }
  return x;
}

Matrix inverse(const Matrix& a) { return solve_linear(a, Matrix::identity(a.rows())); }

double determinant(const Matrix& a) {
  if (!a.is_square()) throw std::invalid_argument("determinant: square matrix required");
  Matrix lu = a;
  const std::size_t n = a.rows();
  double det = 1.0;
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t piv = k;
    for (std::size_t i = k + 1; i < n; ++i)
      if (std::abs(lu(i, k)) > std::abs(lu(piv, k))) piv = i;
    if (lu(piv, k) == 0.0) return 0.0;
    if (piv != k) {
      for (std::size_t j = 0; j < n; ++j) std::swap(lu(k, j), lu(piv, j));
      det = -det;
    }
    det *= lu(k, k);
    for (std::size_t i = k + 1; i < n; ++i) {
      const double f = lu(i, k) / lu(k, k);
      for (std::size_t j = k; j < n; ++j) lu(i, j) -= f * lu(k, j);
    }
  }
  return det;
}

std::size_t rank(const Matrix& a) {
  Matrix w = a;
  const double threshold = Tolerances::kPivot * std::max(a.norm_inf(), 1e-300);
  std::size_t r = 0;
  for (std::size_t c = 0; c < w.cols() && r < w.rows(); ++c) {
    std::size_t piv = r;
    for (std::size_t i = r + 1; i < w.rows(); ++i)
      if (std::abs(w(i, c)) > std::abs(w(piv, c))) piv = i;
    if (std::abs(w(piv, c)) <= threshold) continue;
    for (std::size_t j = 0; j < w.cols(); ++j) std::swap(w(r, j), w(piv, j));
    for (std::size_t i = r + 1; i < w.rows(); ++i) {
      const double f = w(i, c) / w(r, c);
      for (std::size_t j = c; j < w.cols(); ++j) w(i, j) -= f * w(r, j);
    }
    ++r;
  }
  return r;
}

std::vector<double> symmetric_eigenvalues(const Matrix& s) {
  if (!s.is_square()) throw Error(ErrorKind::NotSymmetric, "matrix is not square");
  const std::size_t n = s.rows();
  const double scale = s.norm_inf();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (std::abs(s(i, j) - s(j, i)) > Tolerances::kSymmetry * scale) {
        throw Error(ErrorKind::NotSymmetric, "asymmetry at (" + std::to_string(i) + "," +
                                                 std::to_string(j) + ")");
      }

  Matrix a = s;
  // Work on the exactly symmetric part.
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) a(i, j) = a(j, i) = 0.5 * (s(i, j) + s(j, i));

  const double target = Tolerances::kJacobiOffDiagonal * a.norm_fro();
  auto off_norm = [&] {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (i != j) acc += a(i, j) * a(i, j);
    return std::sqrt(acc);
  };

  for (int sweep = 0; sweep < Tolerances::kJacobiMaxSweeps && off_norm() > target; ++sweep) {
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double sn = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - sn * akq;
          a(k, q) = sn * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - sn * aqk;
          a(q, k) = sn * apk + c * aqk;
        }
      }
    }
  }
  if (off_norm() > target) throw Error(ErrorKind::NoConvergence, "Jacobi sweeps exhausted");

  std::vector<double> eig(n);
  for (std::size_t i = 0; i < n; ++i) eig[i] = a(i, i);
  std::sort(eig.begin(), eig.end());
  return eig;
}

double spectral_norm(const Matrix& m) {
  if (m.max_abs() == 0.0) return 0.0;
  const Matrix gram = m.transpose() * m;
  const std::size_t n = gram.rows();

  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = 1.0 + std::fmod(std::sqrt(2.0) * static_cast<double>(i + 1), 1.0);
  double nx = vector_norm(x);
  for (double& v : x) v /= nx;

  for (int it = 0; it < Tolerances::kPowerIterationMax; ++it) {
    const std::vector<double> y = gram * std::span<const double>(x);
    const double rayleigh = std::inner_product(x.begin(), x.end(), y.begin(), 0.0);
    double res = 0.0;
    for (std::size_t i = 0; i < n; ++i) res += (y[i] - rayleigh * x[i]) * (y[i] - rayleigh * x[i]);
    res = std::sqrt(res);
    const double ny = vector_norm(y);
    if (ny == 0.0) return 0.0;
    if (res <= Tolerances::kPowerIteration * rayleigh) return std::sqrt(rayleigh);
    for (std::size_t i = 0; i < n; ++i) x[i] = y[i] / ny;
  }
  throw Error(ErrorKind::NoConvergence, "power iteration did not converge");
}

Matrix solve_sylvester(const Matrix& a, const Matrix& b, const Matrix& c) {
  if (!a.is_square() || !b.is_square() || c.rows() != a.rows() || c.cols() != b.rows()) {
    throw std::invalid_argument("solve_sylvester: shape mismatch");
  }
  const std::size_t m = a.rows();
  const std::size_t n = b.rows();
  // vec is column-major: vec(AX) = (I_n (x) A) vec X, vec(XB) = (B^T (x) I_m) vec X.
  Matrix system = kron(Matrix::identity(n), a) + kron(b.transpose(), Matrix::identity(m));
  Matrix rhs(m * n, 1);
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t i = 0; i < m; ++i) rhs(j * m + i, 0) = c(i, j);

  Matrix vec_x;
  try {
    vec_x = solve_linear(system, rhs);
  } catch (const Error& e) {
    throw Error(ErrorKind::SingularMatrix,
                std::string("Sylvester operator singular (spectra of A and -B intersect): ") + e.what());
  }
  Matrix x(m, n);
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t i = 0; i < m; ++i) x(i, j) = vec_x(j * m + i, 0);
  return x;
}

double are_residual(const Matrix& p, const Matrix& a, const Matrix& b, double lambda, double beta) {
  const Matrix bbt = b * b.transpose();
  Matrix r = p * a + a.transpose() * p - lambda * (p * bbt * p) + beta * Matrix::identity(a.rows());
  return r.norm_inf();
}

Matrix solve_are(const Matrix& a, const Matrix& b, double lambda, double beta) {
  if (!a.is_square() || b.rows() != a.rows()) throw std::invalid_argument("solve_are: shape mismatch");
  if (!(lambda > 0.0) || !(beta > 0.0)) throw std::invalid_argument("solve_are: lambda and beta must be positive");
  const std::size_t n = a.rows();
  const Matrix g = lambda * (b * b.transpose());
  const Matrix id = Matrix::identity(n);

  Matrix h(2 * n, 2 * n);
  h.set_block(0, 0, a);
  h.set_block(0, n, -g);
  h.set_block(n, 0, -beta * id);
  h.set_block(n, n, -a.transpose());

  Matrix z = h;
  bool converged = false;
  bool scaling = true;
  for (int it = 0; it < Tolerances::kSignIterationMax; ++it) {
    Matrix zinv;
    try {
      zinv = inverse(z);
    } catch (const Error&) {
      throw Error(ErrorKind::NoConvergence, "Hamiltonian has eigenvalues on the imaginary axis");
    }
    double c = 1.0;
    if (scaling) {
      const double det = std::abs(determinant(z));
      if (det > 0.0 && std::isfinite(det)) c = std::pow(det, -1.0 / static_cast<double>(2 * n));
    }
    Matrix next = 0.5 * (c * z + (1.0 / c) * zinv);
    const double change = (next - z).norm_fro();
    const double size = next.norm_fro();
    z = std::move(next);
    if (!z.all_finite()) throw Error(ErrorKind::NoConvergence, "sign iteration diverged");
    if (change < 1e-2 * size) scaling = false;
    if (change <= Tolerances::kSignIteration * size) {
      converged = true;
      break;
    }
  }
  if (!converged) throw Error(ErrorKind::NoConvergence, "matrix sign iteration stalled");

  // sign(H) [I; P] = -[I; P] on the stable invariant subspace.
  Matrix lhs(2 * n, n);
  lhs.set_block(0, 0, z.block(0, n, n, n));
  lhs.set_block(n, 0, z.block(n, n, n, n) + id);
  Matrix rhs(2 * n, n);
  rhs.set_block(0, 0, -(z.block(0, 0, n, n) + id));
  rhs.set_block(n, 0, -z.block(n, 0, n, n));
  const Matrix lhs_t = lhs.transpose();
  Matrix p;
  try {
    p = solve_linear(lhs_t * lhs, lhs_t * rhs);
  } catch (const Error&) {
    throw Error(ErrorKind::NotStabilizable, "stable invariant subspace is not a graph over the state space");
  }
  p = 0.5 * (p + p.transpose());

  // Kleinman refinement from the sign-function solution (already stabilizing).
  for (int polish = 0; polish < 3 && are_residual(p, a, b, lambda, beta) > 0.1 * Tolerances::kAreResidual; ++polish) {
    const Matrix closed = a - g * p;
    Matrix candidate;
    try {
      candidate = solve_sylvester(closed.transpose(), closed, -(beta * id + p * g * p));
    } catch (const Error&) {
      break;
    }
    candidate = 0.5 * (candidate + candidate.transpose());
    if (are_residual(candidate, a, b, lambda, beta) >= are_residual(p, a, b, lambda, beta)) break;
    p = std::move(candidate);
  }

  const double residual = are_residual(p, a, b, lambda, beta);
  if (!(residual <= Tolerances::kAreResidual)) {
    throw Error(ErrorKind::NotStabilizable, "ARE residual " + std::to_string(residual) + " exceeds tolerance");
  }
  const auto eig = symmetric_eigenvalues(p);
  if (eig.front() <= 0.0) throw Error(ErrorKind::NotStabilizable, "ARE solution is not positive definite");
  return p;
}

std::vector<std::complex<double>> general_eigenvalues(const Matrix& m) {
  if (!m.is_square()) throw std::invalid_argument("general_eigenvalues: square matrix required");
  const std::size_t n = m.rows();
  if (n == 0) return {};

  // Faddeev-LeVerrier: coeff[k] multiplies s^k, coeff[n] = 1.
  std::vector<double> coeff(n + 1, 0.0);
  coeff[n] = 1.0;
  Matrix mk(n, n);
  const Matrix id = Matrix::identity(n);
  for (std::size_t k = 1; k <= n; ++k) {
    mk = m * mk + coeff[n - k + 1] * id;
    coeff[n - k] = -(m * mk).trace() / static_cast<double>(k);
  }

  double radius = 0.0;
  for (std::size_t k = 0; k < n; ++k) radius = std::max(radius, std::abs(coeff[k]));
  radius = 1.0 + radius;

  auto poly = [&](std::complex<double> s) {
    std::complex<double> acc = coeff[n];
    for (std::size_t k = n; k-- > 0;) acc = acc * s + coeff[k];
    return acc;
  };

  std::vector<std::complex<double>> roots(n);
  const std::complex<double> seed(0.4, 0.9);
  std::complex<double> pw = 1.0;
  for (std::size_t i = 0; i < n; ++i) {
    roots[i] = pw * std::min(radius, 2.0);
    pw *= seed;
  }
  for (int it = 0; it < 2000; ++it) {
    double delta = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      std::complex<double> denom = 1.0;
      for (std::size_t j = 0; j < n; ++j)
        if (j != i) denom *= roots[i] - roots[j];
      if (std::abs(denom) == 0.0) denom = 1e-300;
      const std::complex<double> step = poly(roots[i]) / denom;
      roots[i] -= step;
      delta = std::max(delta, std::abs(step));
    }
    if (delta < 1e-15 * radius) break;
  }
  std::sort(roots.begin(), roots.end(), [](auto x, auto y) {
    return x.real() != y.real() ? x.real() < y.real() : x.imag() < y.imag();
  });
  return roots;
}

bool is_hurwitz(const Matrix& m) {
  const std::size_t n = m.rows();
  Matrix x;
  try {
    x = solve_sylvester(m.transpose(), m, -Matrix::identity(n));
  } catch (const Error&) {
    return false;
  }
  x = 0.5 * (x + x.transpose());
  return symmetric_eigenvalues(x).front() > 0.0;
}

}  // namespace etsync
