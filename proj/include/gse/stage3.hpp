#pragma once

#include "gse/hyperparams.hpp"
#include "gse/stage1.hpp"
#include "gse/types.hpp"

#include <vector>

namespace gse {

/// Preliminary sample embeddings, rows summing to zero.
struct EmbeddingSet {
  Matrix h;  // n x q
  double delta_h = 0.0;          // weighted residual at the solution
  double delta_h_tangent = 0.0;  // part of delta_h that depends on h
  double ogse_dropped = 0.0;     // max norm of the dropped correction terms
};

/// Least-squares sample embeddings.  `v_sample` holds the smoothed
/// alignment matrices at the sample points (H_i = Q_i v_i); rows of the
/// result are pinned to mean zero, which removes the translation nullspace.
///
/// GSE solves the stationarity system of the pairwise first-order residual
/// sum_{i!=j} K_ij ||(X_j - X_i) - H_i (h_j - h_i)||^2; the orthogonal
/// variant solves the kernel-regression consistency system
/// h_i - sum_j K*_ij h_j = H_i^T (X_i - sum_j K*_ij X_j), whose small
/// inconsistency (the dropped curvature terms) is projected out and
/// reported in ogse_dropped.
EmbeddingSet solve_embedding(const Matrix& points, const std::vector<TangentFrame>& frames,
                             const KernelGraph& graph, const std::vector<Matrix>& v_sample,
                             const HyperParams& params);

/// Residual of a candidate embedding under the pairwise first-order model;
/// `tangent_part` receives the h-dependent share.
double embedding_residual(const Matrix& points, const std::vector<TangentFrame>& frames,
                          const KernelGraph& graph, const std::vector<Matrix>& v_sample,
                          const Matrix& h, double* tangent_part = nullptr);

}  // namespace gse
