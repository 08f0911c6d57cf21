#pragma once

#include "gse/hyperparams.hpp"
#include "gse/stage1.hpp"
#include "gse/stage2.hpp"
#include "gse/stage3.hpp"
#include "gse/stage4.hpp"
#include "gse/types.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace gse {

struct FitSummary {
  Index n = 0;
  Index p = 0;
  double delta_v = 0.0;
  double delta_h = 0.0;
  double delta_h_tangent = 0.0;
  double spectral_gap = 0.0;  // lambda_q - lambda_{q+1}
  int ogse_iterations = 0;
  bool ogse_converged = true;
  double ogse_dropped = 0.0;
  Index degenerate_frames = 0;
  std::vector<std::string> warnings;
};

/// Fitted manifold estimator: tangent frames and kernel graph over the
/// sample, aligned tangent field, sample embeddings, and the coordinate
/// chart for reconstruction.  Immutable after fit; all queries are const
/// and safe to call concurrently.
class GseModel {
 public:
  /// Result of the tangent-field query at an ambient point.
  struct Field {
    TangentFrame frame;  // local PCA at the query (self included)
    Matrix v;            // q x q alignment matrix v(X)
    Matrix h;            // p x q field H(X) = Q(X) v(X)
    bool near_singular = false;
  };

  static GseModel fit(const Matrix& points, const HyperParams& params);

  /// Smoothed tangent field H(X), v(X) at an arbitrary in-domain point.
  Field tangent_field(const Eigen::Ref<const Vector>& x) const;

  /// Low-dimensional embedding h(X).
  Vector embed(const Eigen::Ref<const Vector>& x) const;

  /// Analytic Jacobian of the embedding, q x p: pinv(v(X)) Q(X)^T.
  Matrix embed_jacobian(const Eigen::Ref<const Vector>& x) const;

  /// Reconstruction g(y) from coordinates.
  Vector reconstruct(const Eigen::Ref<const Vector>& y) const;

  /// Analytic Jacobian of the reconstruction, p x q.
  Matrix reconstruct_jacobian(const Eigen::Ref<const Vector>& y) const;

  const HyperParams& params() const { return params_; }
  const Matrix& sample_points() const { return points_; }
  const std::vector<TangentFrame>& frames() const { return frames_; }
  const KernelGraph& graph() const { return graph_; }
  const AlignmentField& alignment() const { return alignment_; }
  const std::vector<Matrix>& v_sample() const { return v_sample_; }
  const Matrix& h_set() const { return h_; }
  const Matrix& sample_embeddings() const { return y_n_; }
  const CoordinateChart& chart() const { return chart_; }
  const FitSummary& summary() const { return summary_; }

  /// Rebuilds every derived structure from the serialized core (points,
  /// params, frames, alignment, h, y_n).  Used by fit and by model loading;
  /// deterministic, so a loaded model answers queries bit-identically.
  static GseModel assemble(Matrix points, HyperParams params, std::vector<TangentFrame> frames,
                           AlignmentField alignment, Matrix h, Matrix y_n, FitSummary summary);

 private:
  GseModel() = default;

  struct Query {
    Field field;
    std::vector<Index> nbrs;
    Vector k;  // aggregate kernel weights, aligned with nbrs
    double total = 0.0;
    std::vector<Matrix> cross;  // Q(X)^T Q_j per neighbor
  };
  Query query(const Eigen::Ref<const Vector>& x) const;
  void finalize();  // graph, v_sample, chart, summary fields derived from core

  Matrix points_;
  HyperParams params_;
  std::vector<TangentFrame> frames_;
  KernelGraph graph_;
  AlignmentField alignment_;
  std::vector<Matrix> v_sample_;  // smoothed alignment at sample points
  Matrix h_;                      // n x q preliminary embeddings
  Matrix y_n_;                    // n x q embedded sample
  CoordinateChart chart_;
  FitSummary summary_;
};

}  // namespace gse
