/**
 * @file codec.cpp
 * @brief Codec calibration, quantizer and CSIC model files.
 */
#include "csifb/codec.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "byte_io.hpp"
#include "csifb/errors.hpp"

namespace csifb {

namespace {

void require_bits(unsigned bits) {
  if (bits < 1 || bits > 16) throw ContractError("quantizer: B must lie in [1, 16]");
}

void require_alpha(double alpha) {
  if (!(alpha > 0.0) || !std::isfinite(alpha))
    throw ContractError("quantizer: clip range must be positive and finite");
}

// Makes the largest-magnitude component of each column positive.
void fix_column_signs(RealMatrix& basis) {
  for (std::size_t c = 0; c < basis.cols(); ++c) {
    std::size_t best = 0;
    for (std::size_t r = 1; r < basis.rows(); ++r)
      if (std::abs(basis(r, c)) > std::abs(basis(best, c))) best = r;
    if (basis(best, c) < 0.0)
      for (std::size_t r = 0; r < basis.rows(); ++r) basis(r, c) = -basis(r, c);
  }
}

}  // namespace

void CodecModel::validate() const {
  if (k_subbands == 0 || n_t == 0) throw ContractError("CodecModel: empty shape");
  if (latent_dim > input_dim()) throw ContractError("CodecModel: L exceeds 2*K*N_t");
  require_bits(bits_per_element);
  require_alpha(clip_range);
  if (kind == CodecKind::fixed_mask) {
    if (latent_dim % 2 != 0) throw ContractError("CodecModel: fixed-mask needs an even L");
    if (mask.size() != latent_dim / 2) throw ContractError("CodecModel: mask size != L/2");
    std::vector<std::uint32_t> sorted = mask;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
      throw ContractError("CodecModel: mask positions must be distinct");
    if (!sorted.empty() && sorted.back() >= k_subbands * n_t)
      throw ContractError("CodecModel: mask position out of range");
  } else {
    if (basis.rows() != input_dim() || basis.cols() != latent_dim)
      throw ContractError("CodecModel: basis shape mismatch");
  }
}

std::vector<double> vectorize(const ComplexMatrix& m) {
  const std::size_t n = m.size();
  std::vector<double> x(2 * n);
  const auto data = m.data();
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = data[i].real();
    x[n + i] = data[i].imag();
  }
  return x;
}

ComplexMatrix devectorize(std::span<const double> x, std::size_t rows, std::size_t cols) {
  const std::size_t n = rows * cols;
  if (x.size() != 2 * n) throw ContractError("devectorize: length mismatch");
  ComplexMatrix m(rows, cols);
  auto data = m.data();
  for (std::size_t i = 0; i < n; ++i) data[i] = cplx(x[i], x[n + i]);
  return m;
}

RealMatrix second_moment(std::span<const std::vector<double>> vectors) {
  if (vectors.empty()) throw ContractError("second_moment: empty input");
  const std::size_t dim = vectors.front().size();
  const std::size_t count = vectors.size();
  RealMatrix c(dim, dim);
  const auto n = static_cast<std::ptrdiff_t>(dim);
  // Each (i, j) entry is one sequential sum over samples: same order on any
  // thread count.
#pragma omp parallel for schedule(dynamic, 4)
  for (std::ptrdiff_t si = 0; si < n; ++si) {
    const auto i = static_cast<std::size_t>(si);
    for (std::size_t j = i; j < dim; ++j) {
      double acc = 0.0;
      for (std::size_t s = 0; s < count; ++s) acc += vectors[s][i] * vectors[s][j];
      c(i, j) = acc / static_cast<double>(count);
    }
  }
  for (std::size_t i = 0; i < dim; ++i)
    for (std::size_t j = 0; j < i; ++j) c(i, j) = c(j, i);
  return c;
}

RealMatrix second_moment_serial(std::span<const std::vector<double>> vectors) {
  if (vectors.empty()) throw ContractError("second_moment: empty input");
  const std::size_t dim = vectors.front().size();
  RealMatrix c(dim, dim);
  for (std::size_t i = 0; i < dim; ++i)
    for (std::size_t j = i; j < dim; ++j) {
      double acc = 0.0;
      for (const auto& x : vectors) acc += x[i] * x[j];
      c(i, j) = c(j, i) = acc / static_cast<double>(vectors.size());
    }
  return c;
}

double percentile(std::vector<double> values, double fraction) {
  if (values.empty()) throw ContractError("percentile: empty input");
  std::sort(values.begin(), values.end());
  const double pos = fraction * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double t = pos - static_cast<double>(lo);
  return values[lo] + t * (values[hi] - values[lo]);
}

CodecFit fit_codec(CodecKind kind, std::span<const ComplexMatrix> training) {
  if (training.empty()) throw ContractError("calibrate: empty training set");
  CodecFit fit;
  fit.kind = kind;
  fit.k_subbands = training.front().rows();
  fit.n_t = training.front().cols();
  for (const ComplexMatrix& w : training)
    if (w.rows() != fit.k_subbands || w.cols() != fit.n_t)
      throw ContractError("calibrate: training matrices differ in shape");

  const std::size_t cells = fit.k_subbands * fit.n_t;
  if (kind == CodecKind::fixed_mask) {
    std::vector<double> mean(cells, 0.0);
    for (const ComplexMatrix& w : training) {
      const auto data = w.data();
      for (std::size_t i = 0; i < cells; ++i) mean[i] += std::abs(data[i]);
    }
    fit.cell_ranking.resize(cells);
    std::iota(fit.cell_ranking.begin(), fit.cell_ranking.end(), 0U);
    std::stable_sort(fit.cell_ranking.begin(), fit.cell_ranking.end(),
                     [&](std::uint32_t a, std::uint32_t b) { return mean[a] > mean[b]; });
  } else {
    std::vector<std::vector<double>> vectors;
    vectors.reserve(training.size());
    for (const ComplexMatrix& w : training) vectors.push_back(vectorize(w));
    fit.directions = symmetric_eig(second_moment(vectors)).eigenvectors;
    fix_column_signs(fit.directions);
  }
  return fit;
}

CodecModel instantiate(const CodecFit& fit, std::span<const ComplexMatrix> training,
                       std::size_t latent_dim, unsigned bits_per_element) {
  CodecModel model;
  model.kind = fit.kind;
  model.k_subbands = fit.k_subbands;
  model.n_t = fit.n_t;
  model.latent_dim = latent_dim;
  model.bits_per_element = bits_per_element;
  require_bits(bits_per_element);
  if (latent_dim > model.input_dim())
    throw ContractError("calibrate: L = " + std::to_string(latent_dim) + " exceeds 2*K*N_t = " +
                        std::to_string(model.input_dim()));

  if (fit.kind == CodecKind::fixed_mask) {
    if (latent_dim % 2 != 0) throw ContractError("calibrate: fixed-mask needs an even L");
    model.mask.assign(fit.cell_ranking.begin(),
                      fit.cell_ranking.begin() + static_cast<std::ptrdiff_t>(latent_dim / 2));
  } else {
    model.basis = RealMatrix(model.input_dim(), latent_dim);
    for (std::size_t r = 0; r < model.input_dim(); ++r)
      for (std::size_t c = 0; c < latent_dim; ++c) model.basis(r, c) = fit.directions(r, c);
  }

  std::vector<double> magnitudes;
  magnitudes.reserve(training.size() * latent_dim);
  for (const ComplexMatrix& w : training)
    for (double z : encode(model, w)) magnitudes.push_back(std::abs(z));
  // A zero clip range would make the quantizer undefined; keep alpha = 1 when
  // the training encodings carry no energy (L = 0 or all-zero inputs).
  const double alpha = magnitudes.empty() ? 0.0 : percentile(magnitudes, kClipPercentile);
  model.clip_range = alpha > 0.0 ? alpha : 1.0;
  model.validate();
  return model;
}

CodecModel calibrate(CodecKind kind, std::span<const ComplexMatrix> training,
                     std::size_t latent_dim, unsigned bits_per_element) {
  require_bits(bits_per_element);
  if (!training.empty() && latent_dim > 2 * training.front().size())
    throw ContractError("calibrate: L = " + std::to_string(latent_dim) + " exceeds 2*K*N_t = " +
                        std::to_string(2 * training.front().size()));
  if (kind == CodecKind::fixed_mask && latent_dim % 2 != 0)
    throw ContractError("calibrate: fixed-mask needs an even L");
  return instantiate(fit_codec(kind, training), training, latent_dim, bits_per_element);
}

std::vector<double> encode(const CodecModel& model, const ComplexMatrix& w) {
  if (w.rows() != model.k_subbands || w.cols() != model.n_t)
    throw ContractError("encode: matrix shape does not match the codec");
  if (model.kind == CodecKind::fixed_mask) {
    std::vector<double> z;
    z.reserve(model.latent_dim);
    const auto data = w.data();
    for (std::uint32_t cell : model.mask) {
      z.push_back(data[cell].real());
      z.push_back(data[cell].imag());
    }
    return z;
  }
  const std::vector<double> x = vectorize(w);
  std::vector<double> z(model.latent_dim, 0.0);
  for (std::size_t r = 0; r < x.size(); ++r) {
    const auto brow = model.basis.row(r);
    for (std::size_t c = 0; c < model.latent_dim; ++c) z[c] += brow[c] * x[r];
  }
  return z;
}

ComplexMatrix decode(const CodecModel& model, std::span<const double> z) {
  if (z.size() != model.latent_dim)
    throw ContractError("decode: expected " + std::to_string(model.latent_dim) +
                        " latent values, got " + std::to_string(z.size()));
  if (model.kind == CodecKind::fixed_mask) {
    ComplexMatrix w(model.k_subbands, model.n_t);
    auto data = w.data();
    for (std::size_t i = 0; i < model.mask.size(); ++i)
      data[model.mask[i]] = cplx(z[2 * i], z[2 * i + 1]);
    return w;
  }
  std::vector<double> x(model.input_dim(), 0.0);
  for (std::size_t r = 0; r < x.size(); ++r) {
    const auto brow = model.basis.row(r);
    double acc = 0.0;
    for (std::size_t c = 0; c < model.latent_dim; ++c) acc += brow[c] * z[c];
    x[r] = acc;
  }
  return devectorize(x, model.k_subbands, model.n_t);
}

BitString quantize(std::span<const double> z, unsigned bits, double alpha) {
  require_bits(bits);
  require_alpha(alpha);
  const std::uint32_t levels = 1U << bits;
  const double step = 2.0 * alpha / static_cast<double>(levels);
  BitString out;
  out.reserve(z.size() * bits);
  for (double x : z) {
    const double clipped = std::isnan(x) ? 0.0 : std::clamp(x, -alpha, alpha);
    const double bin = std::floor((clipped + alpha) / step);
    const auto index = static_cast<std::uint32_t>(
        std::clamp(bin, 0.0, static_cast<double>(levels - 1)));
    append_bits(out, index, bits);
  }
  return out;
}

std::vector<double> dequantize(const BitString& bits, unsigned bits_per_element, double alpha,
                               std::size_t count) {
  require_bits(bits_per_element);
  require_alpha(alpha);
  const double step = 2.0 * alpha / static_cast<double>(1U << bits_per_element);
  std::vector<double> out(count);
  std::size_t pos = 0;
  for (std::size_t i = 0; i < count; ++i) {
    const std::uint32_t index = read_bits(bits, pos, bits_per_element);
    out[i] = -alpha + (static_cast<double>(index) + 0.5) * step;
  }
  return out;
}

std::size_t count_clipped(std::span<const double> z, double alpha) {
  return static_cast<std::size_t>(
      std::count_if(z.begin(), z.end(), [alpha](double x) { return std::abs(x) > alpha; }));
}

std::vector<std::uint8_t> Codeword::bytes() const {
  BitString all = control_bits;
  all.insert(all.end(), payload_bits.begin(), payload_bits.end());
  return to_bytes(all);
}

Codeword pack_codeword(BitString control_bits, BitString payload_bits) {
  return {std::move(control_bits), std::move(payload_bits)};
}

std::pair<BitString, BitString> unpack_codeword(std::span<const std::uint8_t> bytes,
                                                std::size_t control_width,
                                                std::size_t payload_width) {
  const BitString all = from_bytes(bytes, control_width + payload_width);
  BitString control(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(control_width));
  BitString payload(all.begin() + static_cast<std::ptrdiff_t>(control_width), all.end());
  return {std::move(control), std::move(payload)};
}

// ---------------------------------------------------------------------------
// CSIC

std::vector<std::uint8_t> encode_model(const CodecModel& model) {
  model.validate();
  detail::ByteWriter w;
  w.magic("CSIC");
  w.u16(kCodecModelVersion);
  w.u16(static_cast<std::uint16_t>(model.kind));
  w.u16(static_cast<std::uint16_t>(model.k_subbands));
  w.u16(static_cast<std::uint16_t>(model.n_t));
  w.u32(static_cast<std::uint32_t>(model.latent_dim));
  w.u16(static_cast<std::uint16_t>(model.bits_per_element));
  w.f64(model.clip_range);
  if (model.kind == CodecKind::fixed_mask) {
    for (std::uint32_t cell : model.mask) w.u32(cell);
  } else {
    for (double x : model.basis.data()) w.f64(x);
  }
  return std::move(w.bytes());
}

CodecModel decode_model(std::span<const std::uint8_t> bytes) {
  detail::ByteReader r(bytes, "CSIC codec model");
  r.expect_magic("CSIC");
  const std::size_t version_at = r.offset();
  if (const auto version = r.u16(); version != kCodecModelVersion)
    throw FormatError("CSIC codec model: unsupported version " + std::to_string(version),
                      version_at);
  CodecModel model;
  const std::size_t kind_at = r.offset();
  const std::uint16_t kind = r.u16();
  if (kind > 1) throw FormatError("CSIC codec model: unknown codec kind", kind_at);
  model.kind = static_cast<CodecKind>(kind);
  model.k_subbands = r.u16();
  model.n_t = r.u16();
  model.latent_dim = r.u32();
  model.bits_per_element = r.u16();
  model.clip_range = r.f64();
  const std::size_t header_end = r.offset();
  if (model.k_subbands == 0 || model.n_t == 0 || model.latent_dim > model.input_dim())
    throw FormatError("CSIC codec model: invalid dimensions", header_end);
  if (model.kind == CodecKind::fixed_mask) {
    model.mask.resize(model.latent_dim / 2);
    for (std::uint32_t& cell : model.mask) cell = r.u32();
  } else {
    model.basis = RealMatrix(model.input_dim(), model.latent_dim);
    for (double& x : model.basis.data()) x = r.f64();
  }
  r.expect_end();
  try {
    model.validate();
  } catch (const ContractError& e) {
    throw FormatError(std::string("CSIC codec model: ") + e.what(), header_end);
  }
  return model;
}

void write_model(const std::filesystem::path& path, const CodecModel& model) {
  detail::write_file(path, encode_model(model));
}

CodecModel read_model(const std::filesystem::path& path) {
  return decode_model(detail::read_file(path));
}

}  // namespace csifb
