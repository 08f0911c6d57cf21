#pragma once

#include "gse/errors.hpp"
#include "gse/types.hpp"

#include <string>

namespace gse {

enum class Variant { Gse, Ogse };

std::string to_string(Variant v);
Variant variant_from_string(const std::string& s);

/// Algorithm parameters.  Negative sentinel values mean "resolve from data":
/// eps1 from the neighbor-distance quantile rule, eps2 = 1/eps1^2, eps3 from
/// the relative eigenvalue threshold.
struct HyperParams {
  Index q = 2;                    // intrinsic dimension
  Variant variant = Variant::Gse;
  double eps1 = -1.0;             // neighborhood radius
  double eps2 = -1.0;             // Gaussian bandwidth coefficient
  double eps3 = -1.0;             // absolute rank threshold on lambda_q
  double eps3_rel = 1e-6;         // relative threshold when eps3 is unset
  double eps4 = 0.0;              // Grassmann-neighborhood threshold; parsed, unused
  int ogse_max_iter = 200;
  double ogse_tol = 1e-9;
  double v_cutoff = 1e-8;         // relative pseudo-inverse cutoff for v(X)
  Index dense_eig_limit = 4000;   // nq above this uses the iterative eigensolver
  bool reconstruct_via_field = false;  // tangent-field reconstruction formula

  /// 90th percentile of k-th nearest-neighbor distances, k = max(2q+2, 10).
  static double default_radius(const Matrix& points, Index q);

  /// Copy with eps1/eps2 filled in from the sample; validates the result.
  HyperParams resolved(const Matrix& points) const;

  /// Rank test on a non-increasing local PCA spectrum: lambda_q above the
  /// absolute threshold, or above eps3_rel * lambda_1 when eps3 is unset.
  bool rank_ok(const Vector& eigenvalues) const;

  void validate(Index p) const;
};

}  // namespace gse
