#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gse/manifolds.hpp"
#include "gse/model.hpp"
#include "gse/types.hpp"

namespace gse {

/// Outcome of running one held-out point through embed + reconstruct.
struct EvalRecord {
  Vector x;      ///< ambient test point
  Vector y;      ///< embedded coordinates
  Vector x_rec;  ///< reconstruction of the embedded point
  double delta = 0.0;    ///< ambient reconstruction error, ‖x − x_rec‖
  double tangent = -1.0; ///< tangent proximity in [0,1], -1 when no analytic tangent was given
  bool ok = false;
  std::string error;  ///< reason when ok is false
};

struct EvalSummary {
  Index n = 0;
  Index n_failed = 0;
  double mean_delta = 0.0;
  double median_delta = 0.0;
  double max_delta = 0.0;
  double mean_tangent = -1.0;  ///< -1 when no tangent comparisons were possible
};

/// One Monte-Carlo check of the local error expansion around a base point:
/// the worst squared reconstruction error over a sampled metric ball versus
/// the predicted base error plus the tangent mismatch term.
struct BoundCheck {
  Vector x0;
  double eps = 0.0;
  double empirical_max_sq = 0.0;  ///< max over the ball of squared reconstruction error
  double rhs_sq = 0.0;            ///< delta(x0)^2 + eps^2 * tangent_distance^2
  double delta0_sq = 0.0;
  double tangent_term = 0.0;  ///< squared projection 2-norm distance at x0
  Index n_sampled = 0;
};

struct EvalReport {
  std::vector<EvalRecord> records;
  EvalSummary summary;
  std::vector<BoundCheck> bounds;
};

/// Best parameter found when projecting an ambient point onto the
/// reconstructed manifold by minimizing ‖x − g(y)‖ over y.
struct ProjectionResult {
  Vector y;
  double distance = 0.0;  ///< ‖x − g(y)‖ at the returned y
  bool converged = false;  ///< at least one local search met its tolerance
};

/// Ambient reconstruction error ‖x − g(h(x))‖ of the fitted model at x.
double reconstruction_error(const Vector& x, const GseModel& model);

/// Projection 2-norm distance between the analytic tangent space at chart
/// parameter b and the span of the reconstruction Jacobian at h(x).
double tangent_error(const Vector& x, const Vector& b, const GseModel& model,
                     const Manifold& manifold);

/// Runs every row of test_points through embed + reconstruct, recording
/// per-point errors. When manifold and coords are given, each record also
/// carries the tangent proximity at that point's chart parameter. Failures
/// are captured per record, never thrown. Rows are processed in parallel;
/// aggregates are accumulated in row order.
EvalReport evaluate(const GseModel& model, const Matrix& test_points,
                    const Manifold* manifold = nullptr, const Matrix* coords = nullptr);

/// Empirically measures the worst reconstruction error over the radius-eps
/// ambient ball around x0 = f(b0) by rejection-sampling m manifold points
/// from the generator, and evaluates the predicted second-order bound at x0.
/// Throws RejectionFailure when the draw budget (budget_factor * m draws)
/// cannot fill the ball.
BoundCheck local_max_error(const Vector& x0, const Vector& b0, double eps, const GseModel& model,
                           const Manifold& manifold, Index m, std::uint64_t seed,
                           Index budget_factor = 4000);

/// Minimizes ‖x − g(y)‖ over low-dimensional coordinates y with damped
/// Gauss-Newton, multi-started from h(x) and from the stored coordinates of
/// the nearest sample points. Always returns the best candidate found, which
/// is never worse than the h(x) seed.
ProjectionResult project_to_manifold(const Vector& x, const GseModel& model, int max_iter = 100,
                                     Index extra_starts = 3);

}  // namespace gse
