/**
 * @file numkit.cpp
 * @brief Matrix arithmetic and Jacobi eigensolvers.
 */
#include "csifb/numkit.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include "csifb/errors.hpp"

namespace csifb {

namespace {

constexpr int kMaxSweeps = 100;
constexpr double kConvergenceRtol = 1e-12;
constexpr double kHermitianRtol = 1e-10;

double conj_if_complex(double x) { return x; }
cplx conj_if_complex(cplx x) { return std::conj(x); }

double magnitude_sq(double x) { return x * x; }
double magnitude_sq(cplx x) { return std::norm(x); }

std::int64_t wrap(std::int64_t i, std::size_t n) {
  const auto len = static_cast<std::int64_t>(n);
  const std::int64_t r = i % len;
  return r < 0 ? r + len : r;
}

// Jacobi rotation for the 2x2 block [[app, apq], [apq*, aqq]] with |apq| > 0.
// Returns (c, s) of the real rotation that annihilates the modulus |apq|.
std::pair<double, double> jacobi_angle(double app, double aqq, double mag) {
  const double theta = (aqq - app) / (2.0 * mag);
  double t;
  if (std::abs(theta) > 1e150) {
    t = 0.5 / theta;
  } else {
    t = (theta >= 0.0 ? 1.0 : -1.0) /
        (std::abs(theta) + std::sqrt(theta * theta + 1.0));
  }
  const double c = 1.0 / std::sqrt(t * t + 1.0);
  return {c, t * c};
}

template <typename T>
double off_diagonal_norm(const Matrix<T>& a) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j)
      if (i != j) acc += magnitude_sq(a(i, j));
  return std::sqrt(acc);
}

// Indices of eigenvalues sorted descending (stable).
std::vector<std::size_t> descending_order(const std::vector<double>& values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    return values[x] > values[y];
  });
  return order;
}

template <typename T>
std::pair<std::vector<double>, Matrix<T>> sort_eigenpairs(const Matrix<T>& a,
                                                          const Matrix<T>& v) {
  const std::size_t n = a.rows();
  std::vector<double> diag(n);
  for (std::size_t i = 0; i < n; ++i) diag[i] = std::real(a(i, i));
  const auto order = descending_order(diag);
  std::vector<double> values(n);
  Matrix<T> vectors(n, n);
  for (std::size_t k = 0; k < n; ++k) {
    values[k] = diag[order[k]];
    for (std::size_t r = 0; r < n; ++r) vectors(r, k) = v(r, order[k]);
  }
  return {std::move(values), std::move(vectors)};
}

void require_symmetric(const RealMatrix& m) {
  if (m.rows() != m.cols() || m.rows() == 0)
    throw ContractError("symmetric_eig: matrix must be square and non-empty");
  const double norm = m.frobenius_norm();
  double diff = 0.0;
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j)
      diff += magnitude_sq(m(i, j) - m(j, i));
  if (std::sqrt(diff) > kHermitianRtol * norm)
    throw ContractError("symmetric_eig: matrix is not symmetric");
}

}  // namespace

// ---------------------------------------------------------------------------
// Matrix

template <typename T>
Matrix<T>::Matrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), data_(rows * cols, T{}) {}

template <typename T>
Matrix<T>::Matrix(std::size_t rows, std::size_t cols, std::vector<T> entries)
    : rows_(rows), cols_(cols), data_(std::move(entries)) {
  if (data_.size() != rows * cols)
    throw ContractError("Matrix: expected " + std::to_string(rows * cols) +
                        " entries, got " + std::to_string(data_.size()));
}

template <typename T>
Matrix<T> Matrix<T>::identity(std::size_t n) {
  Matrix out(n, n);
  for (std::size_t i = 0; i < n; ++i) out(i, i) = T{1};
  return out;
}

template <typename T>
std::vector<T> Matrix<T>::column(std::size_t c) const {
  std::vector<T> out(rows_);
  for (std::size_t r = 0; r < rows_; ++r) out[r] = (*this)(r, c);
  return out;
}

template <typename T>
bool Matrix<T>::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](const T& x) {
    return std::isfinite(std::real(x)) && std::isfinite(std::imag(x));
  });
}

template <typename T>
double Matrix<T>::frobenius_norm() const {
  double acc = 0.0;
  for (const T& x : data_) acc += magnitude_sq(x);
  return std::sqrt(acc);
}

template <typename T>
Matrix<T> Matrix<T>::adjoint() const {
  Matrix out(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c)
      out(c, r) = conj_if_complex((*this)(r, c));
  return out;
}

template class Matrix<cplx>;
template class Matrix<double>;

namespace {
template <typename T>
Matrix<T> multiply(const Matrix<T>& a, const Matrix<T>& b) {
  if (a.cols() != b.rows())
    throw ContractError("matrix product: inner dimensions differ");
  Matrix<T> out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto out_row = out.row(i);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const T aik = a(i, k);
      const auto b_row = b.row(k);
      for (std::size_t j = 0; j < b.cols(); ++j) out_row[j] += aik * b_row[j];
    }
  }
  return out;
}
}  // namespace

ComplexMatrix operator*(const ComplexMatrix& a, const ComplexMatrix& b) {
  return multiply(a, b);
}

RealMatrix operator*(const RealMatrix& a, const RealMatrix& b) {
  return multiply(a, b);
}

ComplexMatrix operator-(const ComplexMatrix& a, const ComplexMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw ContractError("matrix difference: shapes differ");
  ComplexMatrix out = a;
  auto dst = out.data();
  const auto src = b.data();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] -= src[i];
  return out;
}

ComplexVector operator*(const ComplexMatrix& a, std::span<const cplx> x) {
  if (a.cols() != x.size())
    throw ContractError("matrix-vector product: dimensions differ");
  ComplexVector out(a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const auto row = a.row(i);
    cplx acc{};
    for (std::size_t j = 0; j < x.size(); ++j) acc += row[j] * x[j];
    out[i] = acc;
  }
  return out;
}

double norm2(std::span<const cplx> v) {
  double acc = 0.0;
  for (const cplx& x : v) acc += std::norm(x);
  return std::sqrt(acc);
}

cplx inner(std::span<const cplx> x, std::span<const cplx> y) {
  if (x.size() != y.size()) throw ContractError("inner: lengths differ");
  cplx acc{};
  for (std::size_t i = 0; i < x.size(); ++i) acc += std::conj(x[i]) * y[i];
  return acc;
}

// ---------------------------------------------------------------------------

ComplexMatrix dft_matrix(std::size_t n) {
  if (n == 0) throw ContractError("dft_matrix: n must be >= 1");
  ComplexMatrix f(n, n);
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < n; ++b) {
      // Reduce a*b mod n first so the angle stays in [0, 2pi).
      const double angle = -2.0 * std::numbers::pi *
                           static_cast<double>((a * b) % n) /
                           static_cast<double>(n);
      f(a, b) = std::polar(scale, angle);
    }
  }
  return f;
}

ComplexMatrix cyclic_shift(const ComplexMatrix& m, std::int64_t row_shift,
                           std::int64_t col_shift) {
  ComplexMatrix out(m.rows(), m.cols());
  if (m.empty()) return out;
  const auto dr = static_cast<std::size_t>(wrap(row_shift, m.rows()));
  const auto dc = static_cast<std::size_t>(wrap(col_shift, m.cols()));
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const auto src = m.row(i);
    auto dst = out.row((i + dr) % m.rows());
    for (std::size_t j = 0; j < m.cols(); ++j) dst[(j + dc) % m.cols()] = src[j];
  }
  return out;
}

// ---------------------------------------------------------------------------
// Hermitian Jacobi

EigenResult hermitian_eig(const ComplexMatrix& m, double degeneracy_rtol) {
  if (m.rows() != m.cols() || m.rows() == 0)
    throw ContractError("hermitian_eig: matrix must be square and non-empty");
  const std::size_t n = m.rows();
  const double norm = m.frobenius_norm();
  if ((m - m.adjoint()).frobenius_norm() > kHermitianRtol * norm)
    throw ContractError("hermitian_eig: matrix is not Hermitian");

  ComplexMatrix a(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      a(i, j) = 0.5 * (m(i, j) + std::conj(m(j, i)));
  ComplexMatrix v = ComplexMatrix::identity(n);

  const double tol = kConvergenceRtol * norm;
  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    if (off_diagonal_norm(a) <= tol) break;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const cplx apq = a(p, q);
        const double mag = std::abs(apq);
        if (mag == 0.0) continue;
        const cplx phase = apq / mag;
        const auto [c, s] = jacobi_angle(a(p, p).real(), a(q, q).real(), mag);
        // U = [[c, s e^{i phi}], [-s e^{-i phi}, c]] on the (p, q) plane.
        const cplx upq = s * phase;
        const cplx uqp = -s * std::conj(phase);
        for (std::size_t r = 0; r < n; ++r) {
          const cplx arp = a(r, p), arq = a(r, q);
          a(r, p) = c * arp + uqp * arq;
          a(r, q) = upq * arp + c * arq;
        }
        for (std::size_t col = 0; col < n; ++col) {
          const cplx ap = a(p, col), aq = a(q, col);
          a(p, col) = c * ap + std::conj(uqp) * aq;
          a(q, col) = std::conj(upq) * ap + c * aq;
        }
        a(p, q) = a(q, p) = 0.0;
        a(p, p) = a(p, p).real();
        a(q, q) = a(q, q).real();
        for (std::size_t r = 0; r < n; ++r) {
          const cplx vrp = v(r, p), vrq = v(r, q);
          v(r, p) = c * vrp + uqp * vrq;
          v(r, q) = upq * vrp + c * vrq;
        }
      }
    }
  }

  auto [values, vectors] = sort_eigenpairs(a, v);
  EigenResult out;
  out.max_eigenvalue = values.front();
  const double cutoff = degeneracy_rtol * std::abs(out.max_eigenvalue);
  std::size_t dim = 0;
  while (dim < n && out.max_eigenvalue - values[dim] <= cutoff) ++dim;
  out.eigenbasis = ComplexMatrix(n, dim);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t k = 0; k < dim; ++k) out.eigenbasis(r, k) = vectors(r, k);
  out.eigenvalues = std::move(values);
  out.eigenvectors = std::move(vectors);
  return out;
}

// ---------------------------------------------------------------------------
// Real symmetric Jacobi

SymmetricEigen symmetric_eig_serial(const RealMatrix& m) {
  require_symmetric(m);
  const std::size_t n = m.rows();
  RealMatrix a = m;
  RealMatrix v = RealMatrix::identity(n);
  const double tol = kConvergenceRtol * m.frobenius_norm();
  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    if (off_diagonal_norm(a) <= tol) break;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double sign = apq > 0.0 ? 1.0 : -1.0;
        auto [c, s] = jacobi_angle(a(p, p), a(q, q), std::abs(apq));
        s *= sign;
        for (std::size_t r = 0; r < n; ++r) {
          const double arp = a(r, p), arq = a(r, q);
          a(r, p) = c * arp - s * arq;
          a(r, q) = s * arp + c * arq;
        }
        for (std::size_t col = 0; col < n; ++col) {
          const double ap = a(p, col), aq = a(q, col);
          a(p, col) = c * ap - s * aq;
          a(q, col) = s * ap + c * aq;
        }
        a(p, q) = a(q, p) = 0.0;
        for (std::size_t r = 0; r < n; ++r) {
          const double vrp = v(r, p), vrq = v(r, q);
          v(r, p) = c * vrp - s * vrq;
          v(r, q) = s * vrp + c * vrq;
        }
      }
    }
  }
  auto [values, vectors] = sort_eigenpairs(a, v);
  return {std::move(values), std::move(vectors)};
}

namespace {

struct Rotation {
  std::size_t p;
  std::size_t q;
  double c;
  double s;
};

// Pairs for one round of the circle-method tournament over `slots` players
// (slots is even; indices >= n are byes).
void tournament_round(const std::vector<std::size_t>& seats, std::size_t n,
                      std::vector<std::pair<std::size_t, std::size_t>>& pairs) {
  pairs.clear();
  const std::size_t slots = seats.size();
  for (std::size_t i = 0; i < slots / 2; ++i) {
    std::size_t p = seats[i], q = seats[slots - 1 - i];
    if (p >= n || q >= n) continue;
    if (p > q) std::swap(p, q);
    pairs.emplace_back(p, q);
  }
}

}  // namespace

SymmetricEigen symmetric_eig(const RealMatrix& m) {
  require_symmetric(m);
  const std::size_t n = m.rows();
  RealMatrix a = m;
  RealMatrix v = RealMatrix::identity(n);
  const double tol = kConvergenceRtol * m.frobenius_norm();

  const std::size_t slots = n + (n % 2);
  std::vector<std::size_t> seats(slots);
  std::iota(seats.begin(), seats.end(), std::size_t{0});
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  std::vector<Rotation> rots;

  for (int sweep = 0; sweep < kMaxSweeps && n > 1; ++sweep) {
    if (off_diagonal_norm(a) <= tol) break;
    for (std::size_t round = 0; round + 1 < slots; ++round) {
      tournament_round(seats, n, pairs);
      // Rotate seats[1..] by one for the next round.
      std::rotate(seats.begin() + 1, seats.end() - 1, seats.end());

      rots.clear();
      for (const auto& [p, q] : pairs) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        auto [c, s] = jacobi_angle(a(p, p), a(q, q), std::abs(apq));
        rots.push_back({p, q, c, apq > 0.0 ? s : -s});
      }
      if (rots.empty()) continue;
      const auto nrot = static_cast<std::ptrdiff_t>(rots.size());
      const auto nrows = static_cast<std::ptrdiff_t>(n);

      // Disjoint pairs commute, so A J_1 ... J_r can be applied row by row.
#pragma omp parallel for schedule(static)
      for (std::ptrdiff_t r = 0; r < nrows; ++r) {
        auto arow = a.row(static_cast<std::size_t>(r));
        auto vrow = v.row(static_cast<std::size_t>(r));
        for (const Rotation& rot : rots) {
          const double arp = arow[rot.p], arq = arow[rot.q];
          arow[rot.p] = rot.c * arp - rot.s * arq;
          arow[rot.q] = rot.s * arp + rot.c * arq;
          const double vrp = vrow[rot.p], vrq = vrow[rot.q];
          vrow[rot.p] = rot.c * vrp - rot.s * vrq;
          vrow[rot.q] = rot.s * vrp + rot.c * vrq;
        }
      }
#pragma omp parallel for schedule(static)
      for (std::ptrdiff_t k = 0; k < nrot; ++k) {
        const Rotation& rot = rots[static_cast<std::size_t>(k)];
        auto prow = a.row(rot.p);
        auto qrow = a.row(rot.q);
        for (std::size_t col = 0; col < n; ++col) {
          const double ap = prow[col], aq = qrow[col];
          prow[col] = rot.c * ap - rot.s * aq;
          qrow[col] = rot.s * ap + rot.c * aq;
        }
        prow[rot.q] = 0.0;
        qrow[rot.p] = 0.0;
      }
    }
  }
  auto [values, vectors] = sort_eigenpairs(a, v);
  return {std::move(values), std::move(vectors)};
}

}  // namespace csifb
