/**
 * @file standardizer.cpp
 * @brief 2D DFT, benchmark construction and shift search.
 */
#include "csifb/standardizer.hpp"

#include <cmath>
#include <string>

#include "byte_io.hpp"
#include "csifb/errors.hpp"

namespace csifb {

namespace {

// Canonical LoS channel for the benchmark: one path, zero delay, off-grid
// departure angles so the angular image shows realistic leakage.
constexpr double kBenchmarkAzimuth = 0.3;
constexpr double kBenchmarkZenith = 1.35;

template <typename Abs>
std::vector<double> rows_of(std::size_t rows, std::size_t cols, Abs abs_at) {
  std::vector<double> out(rows, 0.0);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) out[i] += abs_at(i, j);
  return out;
}

template <typename Abs>
std::vector<double> cols_of(std::size_t rows, std::size_t cols, Abs abs_at) {
  std::vector<double> out(cols, 0.0);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) out[j] += abs_at(i, j);
  return out;
}

RealMatrix magnitude_of(const ComplexMatrix& m) {
  RealMatrix out(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) out(i, j) = std::abs(m(i, j));
  return out;
}

}  // namespace

ComplexMatrix sparse_transform(const ComplexMatrix& w) {
  const ComplexMatrix fd = dft_matrix(w.rows());
  const ComplexMatrix fh = dft_matrix(w.cols());
  return fd.adjoint() * w * fh;
}

ComplexMatrix inverse_sparse_transform(const ComplexMatrix& m) {
  const ComplexMatrix fd = dft_matrix(m.rows());
  const ComplexMatrix fh = dft_matrix(m.cols());
  return fd * m * fh.adjoint();
}

std::vector<double> row_profile(const ComplexMatrix& m) {
  return rows_of(m.rows(), m.cols(), [&](auto i, auto j) { return std::abs(m(i, j)); });
}

std::vector<double> col_profile(const ComplexMatrix& m) {
  return cols_of(m.rows(), m.cols(), [&](auto i, auto j) { return std::abs(m(i, j)); });
}

std::vector<double> row_profile(const RealMatrix& magnitude) {
  return rows_of(magnitude.rows(), magnitude.cols(),
                 [&](auto i, auto j) { return std::abs(magnitude(i, j)); });
}

std::vector<double> col_profile(const RealMatrix& magnitude) {
  return cols_of(magnitude.rows(), magnitude.cols(),
                 [&](auto i, auto j) { return std::abs(magnitude(i, j)); });
}

std::size_t optimal_shift(std::span<const double> profile,
                          std::span<const double> benchmark_profile) {
  const std::size_t n = profile.size();
  if (n == 0 || benchmark_profile.size() != n)
    throw ContractError("optimal_shift: profiles must be non-empty and of equal length");
  std::size_t best = 0;
  double best_score = -INFINITY;
  for (std::size_t m = 0; m < n; ++m) {
    double score = 0.0;
    // rotate(profile, m)[i] = profile[(i - m) mod n]
    for (std::size_t i = 0; i < n; ++i) score += profile[(i + n - m) % n] * benchmark_profile[i];
    if (score > best_score) {
      best_score = score;
      best = m;
    }
  }
  return best;
}

std::size_t default_target_row(std::size_t k_subbands) {
  return (k_subbands + 4) / 5 - 1;
}

std::size_t default_target_col(std::size_t n_t) { return n_t / 2; }

Benchmark make_benchmark(RealMatrix magnitude, std::size_t target_row,
                         std::size_t target_col) {
  if (target_row >= magnitude.rows() || target_col >= magnitude.cols())
    throw ContractError("benchmark: target position outside the matrix");
  Benchmark b;
  b.row_profile = row_profile(magnitude);
  b.col_profile = col_profile(magnitude);
  b.magnitude = std::move(magnitude);
  b.target_row = target_row;
  b.target_col = target_col;
  return b;
}

Benchmark build_benchmark(const SystemConfig& config, std::optional<std::size_t> target_row) {
  config.validate();
  const std::size_t k_count = config.k_subbands;
  const std::size_t n_t = config.n_t();
  const std::size_t row = target_row.value_or(default_target_row(k_count));
  const std::size_t col = default_target_col(n_t);
  if (row >= k_count) throw ContractError("build_benchmark: target row out of range");

  const Path los{cplx(1.0, 0.0), 0.0, kBenchmarkAzimuth, kBenchmarkZenith, 0.0};
  const ChannelSample sample = synthesize(config, std::span<const Path>(&los, 1));
  const PrecodingMatrix pm = precode(sample, /*use_eigjo=*/true);
  const ComplexMatrix spar = sparse_transform(pm.rows);

  std::size_t peak_row = 0, peak_col = 0;
  double peak = -1.0;
  for (std::size_t i = 0; i < k_count; ++i)
    for (std::size_t j = 0; j < n_t; ++j)
      if (const double mag = std::abs(spar(i, j)); mag > peak) {
        peak = mag;
        peak_row = i;
        peak_col = j;
      }
  const ComplexMatrix aligned =
      cyclic_shift(spar, static_cast<std::int64_t>(row) - static_cast<std::int64_t>(peak_row),
                   static_cast<std::int64_t>(col) - static_cast<std::int64_t>(peak_col));
  return make_benchmark(magnitude_of(aligned), row, col);
}

std::vector<std::uint8_t> encode_benchmark(const Benchmark& bench) {
  detail::ByteWriter w;
  w.magic("CSIB");
  w.u16(kBenchmarkVersion);
  w.u16(static_cast<std::uint16_t>(bench.k_subbands()));
  w.u16(static_cast<std::uint16_t>(bench.n_t()));
  w.u16(static_cast<std::uint16_t>(bench.target_row));
  w.u16(static_cast<std::uint16_t>(bench.target_col));
  for (double x : bench.magnitude.data()) w.f64(x);
  return std::move(w.bytes());
}

Benchmark decode_benchmark(std::span<const std::uint8_t> bytes) {
  detail::ByteReader r(bytes, "CSIB benchmark");
  r.expect_magic("CSIB");
  const std::size_t version_at = r.offset();
  if (const auto version = r.u16(); version != kBenchmarkVersion)
    throw FormatError("CSIB benchmark: unsupported version " + std::to_string(version),
                      version_at);
  const std::size_t k_count = r.u16();
  const std::size_t n_t = r.u16();
  const std::size_t row = r.u16();
  const std::size_t col = r.u16();
  if (k_count == 0 || n_t == 0 || row >= k_count || col >= n_t)
    throw FormatError("CSIB benchmark: invalid header", r.offset());
  RealMatrix magnitude(k_count, n_t);
  for (double& x : magnitude.data()) x = r.f64();
  r.expect_end();
  return make_benchmark(std::move(magnitude), row, col);
}

void write_benchmark(const std::filesystem::path& path, const Benchmark& bench) {
  detail::write_file(path, encode_benchmark(bench));
}

Benchmark read_benchmark(const std::filesystem::path& path) {
  return decode_benchmark(detail::read_file(path));
}

Standardized standardize_sparse(const ComplexMatrix& w_spar, const Benchmark& bench) {
  if (w_spar.rows() != bench.k_subbands() || w_spar.cols() != bench.n_t())
    throw ContractError("standardize: matrix shape does not match the benchmark");
  const auto rows = row_profile(w_spar);
  const auto cols = col_profile(w_spar);
  ControlInfo ctrl;
  ctrl.m_star = static_cast<std::uint32_t>(optimal_shift(rows, bench.row_profile));
  ctrl.n_star = static_cast<std::uint32_t>(optimal_shift(cols, bench.col_profile));
  return {cyclic_shift(w_spar, ctrl.m_star, ctrl.n_star), ctrl};
}

Standardized standardize(const ComplexMatrix& w, const Benchmark& bench) {
  return standardize_sparse(sparse_transform(w), bench);
}

ComplexMatrix destandardize(const ComplexMatrix& w_std, const ControlInfo& ctrl) {
  if (ctrl.m_star >= w_std.rows() || ctrl.n_star >= w_std.cols())
    throw DecodeError("destandardize: control shift (" + std::to_string(ctrl.m_star) + ", " +
                          std::to_string(ctrl.n_star) + ") out of range",
                      0);
  const auto k_count = static_cast<std::int64_t>(w_std.rows());
  const auto n_t = static_cast<std::int64_t>(w_std.cols());
  const ComplexMatrix unshifted =
      cyclic_shift(w_std, (k_count - ctrl.m_star) % k_count, (n_t - ctrl.n_star) % n_t);
  return inverse_sparse_transform(unshifted);
}

unsigned control_bits_width(std::size_t k_subbands, std::size_t n_t) {
  return ceil_log2(k_subbands) + ceil_log2(n_t);
}

BitString encode_control(const ControlInfo& ctrl, std::size_t k_subbands, std::size_t n_t) {
  if (ctrl.m_star >= k_subbands || ctrl.n_star >= n_t)
    throw ContractError("encode_control: shift out of range");
  BitString bits;
  append_bits(bits, ctrl.m_star, ceil_log2(k_subbands));
  append_bits(bits, ctrl.n_star, ceil_log2(n_t));
  return bits;
}

ControlInfo decode_control(const BitString& bits, std::size_t k_subbands, std::size_t n_t) {
  std::size_t pos = 0;
  ControlInfo ctrl;
  ctrl.m_star = read_bits(bits, pos, ceil_log2(k_subbands));
  ctrl.n_star = read_bits(bits, pos, ceil_log2(n_t));
  if (ctrl.m_star >= k_subbands || ctrl.n_star >= n_t)
    throw DecodeError("decode_control: decoded shift (" + std::to_string(ctrl.m_star) + ", " +
                          std::to_string(ctrl.n_star) + ") out of range",
                      0);
  return ctrl;
}

}  // namespace csifb
