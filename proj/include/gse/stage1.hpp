#pragma once

#include "gse/hyperparams.hpp"
#include "gse/types.hpp"

#include <Eigen/SparseCore>

#include <vector>

namespace gse {

/// Local PCA result at one point: orthonormal tangent frame, the full
/// non-increasing spectrum, and the rank test against eps3.
struct TangentFrame {
  Matrix basis;        // p x q
  Vector eigenvalues;  // length p, non-increasing
  bool in_domain = false;
  bool degenerate = false;  // lambda_q ~ lambda_{q+1}, frame direction unstable
};

/// Symmetric kernel graph over the sample with zero diagonal.  k_norm holds
/// the normalized row masses K_i = row_sums_i / total, so sum(k_norm) = 1.
struct KernelGraph {
  Eigen::SparseMatrix<double, Eigen::RowMajor> weights;  // n x n
  Vector row_sums;
  Vector k_norm;
  double total = 0.0;
};

struct Stage1Result {
  std::vector<TangentFrame> frames;
  KernelGraph graph;
};

/// Gaussian kernel gated by the eps1-ball: exp(-eps2 d^2) when d < eps1,
/// else 0.  Mutual ball membership reduces to the distance test, both for
/// sample pairs and for a query point carrying its own neighborhood.
double euclidean_kernel(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& x2,
                        const HyperParams& params);

/// Weighted PCA over `pts` (one point per row, the center point included by
/// the caller) with non-negative weights.  Centers on the weighted mean,
/// applies a deterministic sign convention, and runs the eps3 rank test.
TangentFrame local_pca(const Matrix& pts, const Vector& weights, const HyperParams& params);

/// Aggregate pair weight K_E * det(Q1^T Q2)^2; skips the determinant when
/// the Euclidean factor is already zero.
double aggregate_kernel(const TangentFrame& f1, const TangentFrame& f2, double k_e);

/// Full first stage: per-point frames and the aggregate kernel graph.
/// Requires every sample point to pass the rank test and the positive-weight
/// graph to be connected.  `params` must already be resolved.
Stage1Result build_kernel_graph(const Matrix& points, const HyperParams& params);

/// Graph assembly alone, for precomputed frames.  Deterministic in the
/// inputs, which lets a deserialized model rebuild its graph bit-identically
/// from the stored frames.
KernelGraph assemble_graph(const Matrix& points, const std::vector<TangentFrame>& frames,
                           const HyperParams& params);

/// Straight-line reference for the pair-weight kernel: all pairs, one nested
/// loop, no neighbor-list staging.  Kept as the oracle for the staged
/// OpenMP implementation inside build_kernel_graph.
Matrix pair_weights_reference(const Matrix& points, const std::vector<TangentFrame>& frames,
                              const HyperParams& params);

}  // namespace gse
