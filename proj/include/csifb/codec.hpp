/**
 * @file codec.hpp
 * @brief Deterministic compression stage: calibration, encode/decode,
 * uniform scalar quantization and codeword packing.
 *
 * Two codecs share one interface:
 *  - fixed-mask keeps L/2 cells of the (standardized) sparse-domain matrix
 *    and sends their real and imaginary parts;
 *  - linear-subspace projects the real vectorization onto the top-L
 *    principal directions of the training set.
 * Vectorization is all real parts (row-major) followed by all imaginary parts.
 *
 * A codeword carries B_ctrl control bits followed by L*B payload bits,
 * MSB-first, zero-padded to a byte boundary; b_total = L*B + B_ctrl.
 */
#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "csifb/bits.hpp"
#include "csifb/numkit.hpp"

namespace csifb {

enum class CodecKind : std::uint16_t { fixed_mask = 0, linear_subspace = 1 };

struct CodecModel {
  CodecKind kind = CodecKind::fixed_mask;
  std::size_t k_subbands = 0;
  std::size_t n_t = 0;
  std::size_t latent_dim = 0;  ///< L
  /// fixed-mask: L/2 flat cell indices (row * n_t + col), in send order.
  std::vector<std::uint32_t> mask;
  /// linear-subspace: 2*K*N_t x L, orthonormal columns.
  RealMatrix basis;
  double clip_range = 1.0;  ///< alpha
  unsigned bits_per_element = 6;  ///< B

  std::size_t input_dim() const { return 2 * k_subbands * n_t; }
  void validate() const;
};

std::vector<double> vectorize(const ComplexMatrix& m);
ComplexMatrix devectorize(std::span<const double> x, std::size_t rows, std::size_t cols);

/// Uncentered second-moment matrix (1/N) sum x x^T. OpenMP-parallel over
/// output rows, so the result is independent of the thread count.
RealMatrix second_moment(std::span<const std::vector<double>> vectors);
/// Single-threaded reference for second_moment.
RealMatrix second_moment_serial(std::span<const std::vector<double>> vectors);

/// Quantile with linear interpolation between order statistics.
double percentile(std::vector<double> values, double fraction);

inline constexpr double kClipPercentile = 0.999;

/// Throws ContractError for an empty or ragged training set, L larger than
/// 2*K*N_t, an odd L for fixed-mask, or B outside [1, 16].
CodecModel calibrate(CodecKind kind, std::span<const ComplexMatrix> training,
                     std::size_t latent_dim, unsigned bits_per_element);

/// Training statistics that do not depend on L: the full cell ranking
/// (fixed-mask) or all principal directions (linear-subspace). Lets one
/// decomposition serve every latent dimension of an experiment.
struct CodecFit {
  CodecKind kind = CodecKind::fixed_mask;
  std::size_t k_subbands = 0;
  std::size_t n_t = 0;
  std::vector<std::uint32_t> cell_ranking;
  RealMatrix directions;  ///< 2*K*N_t x 2*K*N_t, descending eigenvalue order
};

CodecFit fit_codec(CodecKind kind, std::span<const ComplexMatrix> training);
/// calibrate() == instantiate(fit_codec(kind, training), training, L, B).
CodecModel instantiate(const CodecFit& fit, std::span<const ComplexMatrix> training,
                       std::size_t latent_dim, unsigned bits_per_element);

std::vector<double> encode(const CodecModel& model, const ComplexMatrix& w);
ComplexMatrix decode(const CodecModel& model, std::span<const double> z);

/// Clip to [-alpha, alpha], 2^B uniform bins, B-bit unsigned index per element.
BitString quantize(std::span<const double> z, unsigned bits, double alpha);
/// Bin centers.
std::vector<double> dequantize(const BitString& bits, unsigned bits_per_element,
                               double alpha, std::size_t count);
/// Elements with |z| > alpha.
std::size_t count_clipped(std::span<const double> z, double alpha);

struct Codeword {
  BitString control_bits;
  BitString payload_bits;

  std::size_t b_total() const { return control_bits.size() + payload_bits.size(); }
  std::vector<std::uint8_t> bytes() const;
};

Codeword pack_codeword(BitString control_bits, BitString payload_bits);
/// Splits a byte stream into (control, payload). Throws DecodeError when the
/// stream holds fewer than control_width + payload_width bits.
std::pair<BitString, BitString> unpack_codeword(std::span<const std::uint8_t> bytes,
                                                std::size_t control_width,
                                                std::size_t payload_width);

inline constexpr std::uint16_t kCodecModelVersion = 1;
std::vector<std::uint8_t> encode_model(const CodecModel& model);
CodecModel decode_model(std::span<const std::uint8_t> bytes);
void write_model(const std::filesystem::path& path, const CodecModel& model);
CodecModel read_model(const std::filesystem::path& path);

}  // namespace csifb
