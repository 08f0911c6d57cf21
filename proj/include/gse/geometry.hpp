#pragma once

#include "gse/errors.hpp"
#include "gse/types.hpp"

namespace gse {

/// A q-dimensional linear subspace of R^p held as a p x q matrix with
/// orthonormal columns.  The constructor validates the invariant
/// ||Q^T Q - I||_F < 1e-10 so downstream code can rely on it.
class Subspace {
 public:
  explicit Subspace(Matrix basis);

  const Matrix& basis() const { return basis_; }
  Index p() const { return basis_.rows(); }
  Index q() const { return basis_.cols(); }

 private:
  Matrix basis_;
};

/// Nearest matrix with orthonormal columns in Frobenius norm: A = U S V^T
/// maps to U V^T.  Among orthonormal Q this maximizes trace(Q^T A), which is
/// what makes it the alignment step of Procrustes averaging.  Throws
/// RankDeficient when A has column rank below its width.
Matrix orthonormalize_svd(const Matrix& a, double rel_tol = 1e-12);

/// Principal angles between two subspaces of the same ambient space, in
/// [0, pi/2] and non-decreasing.  Cosines are the singular values of the
/// cross-Gram matrix, clamped into [0, 1] before acos.
Vector principal_angles(const Subspace& a, const Subspace& b);

/// sin of the largest principal angle; the spectral norm of the difference
/// of the two orthogonal projectors when dimensions match.
double projection_2norm_distance(const Subspace& a, const Subspace& b);

/// Determinant-squared similarity of two frames, det(Qa^T Qb)^2.  Equals the
/// product of squared principal-angle cosines; 1 iff the subspaces coincide.
double binet_cauchy_kernel(const Subspace& a, const Subspace& b);

/// sqrt(1 - det(Qa^T Qb)^2), a metric on the Grassmann manifold.
double binet_cauchy_distance(const Subspace& a, const Subspace& b);

/// Orthogonal projector Q Q^T onto the subspace, or I - Q Q^T onto its
/// orthogonal complement.
Matrix projector(const Subspace& s, bool complement = false);

}  // namespace gse
