#pragma once

#include "gse/hyperparams.hpp"
#include "gse/stage1.hpp"
#include "gse/types.hpp"

#include <vector>

namespace gse {

/// Per-point alignment matrices v_i turning PCA frames into a coherent
/// tangent field H_i = Q_i v_i.  v_star comes from the spectral problem;
/// v_ortho is the orthogonal refinement (empty unless requested).
struct AlignmentField {
  std::vector<Matrix> v_star;
  std::vector<Matrix> v_ortho;
  Vector eigenvalues;  // q+1 largest, descending
  bool spectral_gap_warning = false;
  double delta_v = 0.0;  // alignment residual of v_star
  int ogse_iterations = 0;
  bool ogse_converged = true;
  std::vector<double> ogse_objective;  // per-sweep, non-decreasing
};

/// Spectral alignment: the q top eigenvectors of the normalized block
/// kernel operator, i.e. the generalized problem with the block-diagonal
/// mass matrix of normalized row masses.  Dense solve up to
/// params.dense_eig_limit unknowns, block orthogonal iteration above.
AlignmentField solve_alignment(const std::vector<TangentFrame>& frames, const KernelGraph& graph,
                               const HyperParams& params);

/// Orthogonal refinement: Gauss-Seidel fixed point of the averaged
/// orthogonal Procrustes problem, v_i <- R(sum_j K_ij S_ij v_j), seeded by
/// orientation-coherent breadth-first transport over the kernel graph.
/// Fills field.v_ortho and the sweep diagnostics.
void solve_alignment_orthogonal(const std::vector<TangentFrame>& frames, const KernelGraph& graph,
                                const HyperParams& params, AlignmentField& field);

/// Alignment residual of a candidate field: kernel-weighted mean squared
/// discrepancy sum_{i<j} (K_ij / K_total) ||Q_i v_i - Q_j v_j||_F^2.
double alignment_residual(const std::vector<TangentFrame>& frames, const KernelGraph& graph,
                          const std::vector<Matrix>& v);

}  // namespace gse
