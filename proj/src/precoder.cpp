/**
 * @file precoder.cpp
 * @brief Dominant eigenvectors and the EigJO projection.
 */
#include "csifb/precoder.hpp"

#include <cmath>
#include <string>

#include "csifb/errors.hpp"
#include "csifb/rng.hpp"

namespace csifb {

namespace {

constexpr double kOrthogonalReferenceRtol = 1e-12;
constexpr std::uint64_t kGaugeStream = 0x6761756765;  // "gauge"

ComplexMatrix gram_rows(const ComplexMatrix& h) {  // H H^H
  ComplexMatrix g(h.rows(), h.rows());
  for (std::size_t i = 0; i < h.rows(); ++i)
    for (std::size_t j = i; j < h.rows(); ++j) {
      const cplx v = inner(h.row(j), h.row(i));  // sum_t h_it conj(h_jt)
      g(i, j) = v;
      g(j, i) = std::conj(v);
    }
  return g;
}

ComplexMatrix gram_cols(const ComplexMatrix& h) {  // H^H H
  ComplexMatrix g(h.cols(), h.cols());
  for (std::size_t i = 0; i < h.cols(); ++i)
    for (std::size_t j = i; j < h.cols(); ++j) {
      cplx v{};
      for (std::size_t r = 0; r < h.rows(); ++r) v += std::conj(h(r, i)) * h(r, j);
      g(i, j) = v;
      g(j, i) = std::conj(v);
    }
  return g;
}

std::vector<DominantEigenspace> subband_eigenspaces(const ChannelSample& sample,
                                                    double rtol) {
  std::vector<DominantEigenspace> out;
  out.reserve(sample.subbands.size());
  for (std::size_t k = 0; k < sample.subbands.size(); ++k) {
    const ComplexMatrix& h = sample.subbands[k];
    if (h.frobenius_norm() == 0.0)
      throw DegenerateChannelError(k, "degenerate channel: H_" + std::to_string(k) +
                                          " is identically zero");
    out.push_back(dominant_eigenspace(h, rtol));
  }
  return out;
}

PrecodingMatrix raw_from_eigenspaces(const std::vector<DominantEigenspace>& spaces,
                                     std::size_t n_t) {
  PrecodingMatrix pm;
  const std::size_t k_count = spaces.size();
  pm.rows = ComplexMatrix(k_count, n_t);
  pm.eigenvalues.resize(k_count);
  pm.eigenspace_dim.resize(k_count);
  pm.fallback.assign(k_count, false);
  for (std::size_t k = 0; k < k_count; ++k) {
    auto row = pm.rows.row(k);
    for (std::size_t t = 0; t < n_t; ++t) row[t] = spaces[k].basis(t, 0);
    apply_canonical_gauge(row);
    pm.eigenvalues[k] = spaces[k].eigenvalue;
    pm.eigenspace_dim[k] = spaces[k].basis.cols();
  }
  return pm;
}

void project_rows(const ChannelSample& sample, const std::vector<DominantEigenspace>& spaces,
                  const EigJoOptions& options, PrecodingMatrix& pm) {
  const std::size_t n_t = pm.n_t();
  for (std::size_t k = 0; k < spaces.size(); ++k) {
    const ComplexMatrix& basis = spaces[k].basis;
    const ComplexVector v = reference_vector(sample.subbands[k], options);
    ComplexVector proj(n_t);
    for (std::size_t c = 0; c < basis.cols(); ++c) {
      const auto e = basis.column(c);
      const cplx coeff = inner(e, v);
      for (std::size_t t = 0; t < n_t; ++t) proj[t] += coeff * e[t];
    }
    const double norm = norm2(proj);
    if (!(norm >= kOrthogonalReferenceRtol * norm2(v)) || norm == 0.0) {
      pm.fallback[k] = true;
      continue;
    }
    auto row = pm.rows.row(k);
    for (std::size_t t = 0; t < n_t; ++t) row[t] = proj[t] / norm;
    pm.fallback[k] = false;
  }
}

}  // namespace

DominantEigenspace dominant_eigenspace(const ComplexMatrix& h, double degeneracy_rtol) {
  if (h.frobenius_norm() == 0.0)
    throw ContractError("dominant_eigenspace: zero channel matrix");
  DominantEigenspace out;
  if (h.rows() < h.cols()) {
    const EigenResult eig = hermitian_eig(gram_rows(h), degeneracy_rtol);
    out.eigenvalue = eig.max_eigenvalue;
    const double scale = 1.0 / std::sqrt(eig.max_eigenvalue);
    const std::size_t dim = eig.eigenbasis.cols();
    out.basis = ComplexMatrix(h.cols(), dim);
    // e = H^H u / sqrt(lambda) is a unit eigenvector of H^H H for each unit u.
    for (std::size_t c = 0; c < dim; ++c)
      for (std::size_t t = 0; t < h.cols(); ++t) {
        cplx acc{};
        for (std::size_t r = 0; r < h.rows(); ++r)
          acc += std::conj(h(r, t)) * eig.eigenbasis(r, c);
        out.basis(t, c) = acc * scale;
      }
  } else {
    EigenResult eig = hermitian_eig(gram_cols(h), degeneracy_rtol);
    out.eigenvalue = eig.max_eigenvalue;
    out.basis = std::move(eig.eigenbasis);
  }
  return out;
}

void apply_canonical_gauge(std::span<cplx> v) {
  std::size_t best = 0;
  double best_mag = -1.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double mag = std::abs(v[i]);
    if (mag > best_mag) {
      best_mag = mag;
      best = i;
    }
  }
  if (best_mag <= 0.0) return;
  const cplx rot = std::conj(v[best]) / best_mag;
  for (cplx& x : v) x *= rot;
  v[best] = best_mag;
}

PrecodingMatrix dominant_eigenvectors(const ChannelSample& sample, double degeneracy_rtol) {
  const auto spaces = subband_eigenspaces(sample, degeneracy_rtol);
  return raw_from_eigenspaces(spaces, sample.config.n_t());
}

ComplexVector reference_vector(const ComplexMatrix& h, const EigJoOptions& options) {
  if (options.reference_antenna >= h.rows())
    throw ContractError("reference_vector: reference antenna " +
                        std::to_string(options.reference_antenna) + " out of range");
  const auto row = h.row(options.reference_antenna);
  ComplexVector v(row.begin(), row.end());
  if (options.reference == ReferenceVector::conjugate_row)
    for (cplx& x : v) x = std::conj(x);
  return v;
}

PrecodingMatrix eig_joint_optimize(const ChannelSample& sample, const PrecodingMatrix& pm,
                                   const EigJoOptions& options) {
  if (pm.k_subbands() != sample.subbands.size() || pm.n_t() != sample.config.n_t())
    throw ContractError("eig_joint_optimize: precoding matrix does not match sample");
  const auto spaces = subband_eigenspaces(sample, options.degeneracy_rtol);
  PrecodingMatrix out = pm;
  out.fallback.assign(pm.k_subbands(), false);
  for (std::size_t k = 0; k < spaces.size(); ++k) {
    out.eigenvalues[k] = spaces[k].eigenvalue;
    out.eigenspace_dim[k] = spaces[k].basis.cols();
  }
  project_rows(sample, spaces, options, out);
  return out;
}

PrecodingMatrix precode(const ChannelSample& sample, bool use_eigjo,
                        const EigJoOptions& options) {
  const auto spaces = subband_eigenspaces(sample, options.degeneracy_rtol);
  PrecodingMatrix pm = raw_from_eigenspaces(spaces, sample.config.n_t());
  if (use_eigjo) project_rows(sample, spaces, options, pm);
  return pm;
}

void apply_random_gauge(PrecodingMatrix& pm, std::uint64_t seed, std::uint64_t sample_id) {
  CounterRng rng(seed, sample_id, kGaugeStream);
  for (std::size_t k = 0; k < pm.k_subbands(); ++k) {
    const cplx phase = std::polar(1.0, rng.unit_phase());
    for (cplx& x : pm.rows.row(k)) x *= phase;
  }
}

double sparsity_l1(const ComplexMatrix& m) {
  double acc = 0.0;
  for (const cplx& x : m.data()) acc += std::abs(x);
  return acc;
}

}  // namespace csifb
