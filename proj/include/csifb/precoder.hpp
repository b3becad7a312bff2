/**
 * @file precoder.hpp
 * @brief Per-subband dominant eigenvectors and eigenvector joint optimization
 * (EigJO).
 *
 * The precoding vector of subband k is a unit-norm eigenvector of H_k^H H_k
 * for its largest eigenvalue. Any unit-phase multiple (or, for a degenerate
 * eigenvalue, any unit vector of the eigenspace) is equally valid, and that
 * freedom scrambles the angular-delay image of the precoding matrix. EigJO
 * removes it by projecting a channel-derived reference vector v_k onto the
 * eigenspace: w~_k = E_k E_k^H v_k / ||E_k E_k^H v_k||.
 */
#pragma once

#include <cstdint>
#include <vector>

#include "csifb/channelgen.hpp"
#include "csifb/numkit.hpp"

namespace csifb {

/// K x N_t; row k is w_k^T.
struct PrecodingMatrix {
  ComplexMatrix rows;
  std::vector<double> eigenvalues;          ///< lambda_k
  std::vector<std::size_t> eigenspace_dim;  ///< dim of each max eigenspace
  /// Set by eig_joint_optimize when the reference vector was orthogonal to
  /// the eigenspace and the input row was kept.
  std::vector<bool> fallback;

  std::size_t k_subbands() const { return rows.rows(); }
  std::size_t n_t() const { return rows.cols(); }
};

struct DominantEigenspace {
  double eigenvalue = 0.0;
  ComplexMatrix basis;  ///< N_t x d, orthonormal columns
};

/// Max eigenpair of H^H H. Uses the smaller of the two Gram matrices
/// (H H^H when N_r < N_t, mapping eigenvectors back through H^H / sqrt(lambda)),
/// which has the same nonzero spectrum. Throws ContractError for a zero H.
DominantEigenspace dominant_eigenspace(const ComplexMatrix& h,
                                       double degeneracy_rtol = kDefaultDegeneracyRtol);

/// Rotates v so its largest-magnitude entry (first on ties) is real positive.
void apply_canonical_gauge(std::span<cplx> v);

/// Throws DegenerateChannelError naming k if some H_k is identically zero.
PrecodingMatrix dominant_eigenvectors(const ChannelSample& sample,
                                      double degeneracy_rtol = kDefaultDegeneracyRtol);

enum class ReferenceVector {
  /// v_k = H_k^H e_r: the conjugated r-th row, which lies in the row space
  /// that contains every eigenvector of H_k^H H_k with nonzero eigenvalue.
  conjugate_row,
  /// v_k = (H_k)_{r,:}^T without conjugation.
  transpose_row,
};

struct EigJoOptions {
  std::size_t reference_antenna = 0;
  ReferenceVector reference = ReferenceVector::conjugate_row;
  double degeneracy_rtol = kDefaultDegeneracyRtol;
};

ComplexVector reference_vector(const ComplexMatrix& h, const EigJoOptions& options);

/// Projects the reference vector of each subband onto its max eigenspace.
/// Subbands where ||E E^H v|| < 1e-12 ||v|| keep the row from `pm` and get
/// fallback[k] = true.
PrecodingMatrix eig_joint_optimize(const ChannelSample& sample, const PrecodingMatrix& pm,
                                   const EigJoOptions& options = {});

/// dominant_eigenvectors followed (optionally) by eig_joint_optimize, sharing
/// one eigendecomposition per subband.
PrecodingMatrix precode(const ChannelSample& sample, bool use_eigjo,
                        const EigJoOptions& options = {});

/// Multiplies row k by a unit phase drawn from (seed, sample_id, k).
void apply_random_gauge(PrecodingMatrix& pm, std::uint64_t seed, std::uint64_t sample_id);

/// Sum of entry magnitudes.
double sparsity_l1(const ComplexMatrix& m);

}  // namespace csifb
