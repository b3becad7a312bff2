/**
 * @file numkit.hpp
 * @brief Dense complex/real matrices, unitary DFT matrices, Jacobi
 * eigensolvers and cyclic shifts.
 *
 * Sizes in this project are small (K = 13 subbands, N_t = 32 ports) so every
 * routine is a direct O(n^3) method without blocking.
 */
#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace csifb {

using cplx = std::complex<double>;
using ComplexVector = std::vector<cplx>;

/// Row-major dense matrix.
template <typename T>
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols);
  Matrix(std::size_t rows, std::size_t cols, std::vector<T> entries);

  static Matrix identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  T& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  const T& operator()(std::size_t r, std::size_t c) const {
    return data_[r * cols_ + c];
  }

  std::span<T> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const T> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }
  std::vector<T> column(std::size_t c) const;

  std::span<T> data() { return data_; }
  std::span<const T> data() const { return data_; }

  bool all_finite() const;
  double frobenius_norm() const;
  /// Conjugate transpose (plain transpose for real T).
  Matrix adjoint() const;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<T> data_;
};

using ComplexMatrix = Matrix<cplx>;
using RealMatrix = Matrix<double>;

extern template class Matrix<cplx>;
extern template class Matrix<double>;

ComplexMatrix operator*(const ComplexMatrix& a, const ComplexMatrix& b);
ComplexMatrix operator-(const ComplexMatrix& a, const ComplexMatrix& b);
RealMatrix operator*(const RealMatrix& a, const RealMatrix& b);
ComplexVector operator*(const ComplexMatrix& a, std::span<const cplx> x);

double norm2(std::span<const cplx> v);
/// x^H y
cplx inner(std::span<const cplx> x, std::span<const cplx> y);

/// n x n unitary DFT, entry (a, b) = exp(-j 2 pi a b / n) / sqrt(n).
ComplexMatrix dft_matrix(std::size_t n);

/// Out(i, j) = In((i - m) mod rows, (j - n) mod cols); i.e. A^m M (A^T)^n
/// with A the down-shift permutation sized to each axis.
ComplexMatrix cyclic_shift(const ComplexMatrix& m, std::int64_t row_shift,
                           std::int64_t col_shift);

inline constexpr double kDefaultDegeneracyRtol = 1e-9;

struct EigenResult {
  double max_eigenvalue = 0.0;
  /// Orthonormal columns spanning the eigenspace of max_eigenvalue.
  ComplexMatrix eigenbasis;
  /// Descending.
  std::vector<double> eigenvalues;
  /// Column i pairs with eigenvalues[i].
  ComplexMatrix eigenvectors;
};

/// Cyclic Jacobi on a Hermitian matrix. The returned eigenbasis spans every
/// eigenvector with lambda_max - lambda <= degeneracy_rtol * lambda_max.
/// Throws ContractError if m is not square or not Hermitian to 1e-10
/// (relative Frobenius).
EigenResult hermitian_eig(const ComplexMatrix& m,
                          double degeneracy_rtol = kDefaultDegeneracyRtol);

struct SymmetricEigen {
  std::vector<double> eigenvalues;  ///< descending
  RealMatrix eigenvectors;          ///< columns
};

/// Real symmetric Jacobi with round-robin (tournament) ordering: each round
/// rotates n/2 disjoint index pairs at once, which is what the OpenMP loops
/// parallelize. Results do not depend on the thread count.
SymmetricEigen symmetric_eig(const RealMatrix& m);

/// Classic row-cyclic Jacobi; single-threaded reference for symmetric_eig.
SymmetricEigen symmetric_eig_serial(const RealMatrix& m);

}  // namespace csifb
