/**
 * @file standardizer.hpp
 * @brief Angular-delay transform and benchmark-aligned cyclic-shift
 * standardization.
 *
 * Orientation: a precoding matrix is stored K x N_t. After the 2D DFT
 *   W_spar = F_d^H W F_h   (F_d: K x K, F_h: N_t x N_t)
 * rows index delay and columns index angle. Standardization circularly
 * shifts W_spar so that its strongest component lands where the benchmark's
 * does: delay row ceil(K/5) - 1 and the central angle column floor(N_t/2).
 * The row and column shifts are found independently by maximizing the
 * circular correlation of the magnitude row/column sums with the benchmark's.
 * The shift pair is the control information fed back with the codeword.
 */
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "csifb/bits.hpp"
#include "csifb/channelgen.hpp"
#include "csifb/numkit.hpp"
#include "csifb/precoder.hpp"

namespace csifb {

ComplexMatrix sparse_transform(const ComplexMatrix& w);
inline ComplexMatrix sparse_transform(const PrecodingMatrix& w) {
  return sparse_transform(w.rows);
}
ComplexMatrix inverse_sparse_transform(const ComplexMatrix& m);

/// Entry i = sum_j |M_ij|.
std::vector<double> row_profile(const ComplexMatrix& m);
/// Entry j = sum_i |M_ij|.
std::vector<double> col_profile(const ComplexMatrix& m);
std::vector<double> row_profile(const RealMatrix& magnitude);
std::vector<double> col_profile(const RealMatrix& magnitude);

/// argmax over m in [0, n) of sum_i profile[(i - m) mod n] * benchmark[i];
/// the smallest m wins ties. Throws ContractError on length mismatch or n = 0.
std::size_t optimal_shift(std::span<const double> profile,
                          std::span<const double> benchmark_profile);

struct Benchmark {
  RealMatrix magnitude;  ///< |W_Ben|, K x N_t
  std::vector<double> row_profile;
  std::vector<double> col_profile;
  std::size_t target_row = 0;
  std::size_t target_col = 0;

  std::size_t k_subbands() const { return magnitude.rows(); }
  std::size_t n_t() const { return magnitude.cols(); }
};

/// ceil(K/5) - 1.
std::size_t default_target_row(std::size_t k_subbands);
/// floor(N_t/2).
std::size_t default_target_col(std::size_t n_t);

/// Benchmark from a fixed single-LoS-path channel, EigJO-precoded,
/// transformed and shifted so its peak sits at (target_row, target_col).
Benchmark build_benchmark(const SystemConfig& config,
                          std::optional<std::size_t> target_row = std::nullopt);

/// Recomputes the profiles from a magnitude matrix.
Benchmark make_benchmark(RealMatrix magnitude, std::size_t target_row,
                         std::size_t target_col);

inline constexpr std::uint16_t kBenchmarkVersion = 1;
std::vector<std::uint8_t> encode_benchmark(const Benchmark& bench);
Benchmark decode_benchmark(std::span<const std::uint8_t> bytes);
void write_benchmark(const std::filesystem::path& path, const Benchmark& bench);
Benchmark read_benchmark(const std::filesystem::path& path);

struct ControlInfo {
  std::uint32_t m_star = 0;  ///< row (delay) shift, [0, K)
  std::uint32_t n_star = 0;  ///< column (angle) shift, [0, N_t)

  friend bool operator==(const ControlInfo&, const ControlInfo&) = default;
};

struct Standardized {
  ComplexMatrix matrix;  ///< W_std
  ControlInfo ctrl;
};

/// Standardizes an already-transformed (sparse domain) matrix.
Standardized standardize_sparse(const ComplexMatrix& w_spar, const Benchmark& bench);
/// sparse_transform followed by standardize_sparse.
Standardized standardize(const ComplexMatrix& w, const Benchmark& bench);
inline Standardized standardize(const PrecodingMatrix& w, const Benchmark& bench) {
  return standardize(w.rows, bench);
}

/// inverse_sparse_transform(cyclic_shift(W_std, -m*, -n*)). Rows are returned
/// as computed, without renormalization. Throws DecodeError when ctrl is out
/// of range for the matrix shape.
ComplexMatrix destandardize(const ComplexMatrix& w_std, const ControlInfo& ctrl);

/// ceil(log2 K) + ceil(log2 N_t).
unsigned control_bits_width(std::size_t k_subbands, std::size_t n_t);
BitString encode_control(const ControlInfo& ctrl, std::size_t k_subbands, std::size_t n_t);
/// Reads the first control_bits_width bits. Throws DecodeError when the
/// string is short or a decoded shift is out of range.
ControlInfo decode_control(const BitString& bits, std::size_t k_subbands, std::size_t n_t);

}  // namespace csifb
