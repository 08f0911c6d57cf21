#pragma once

#include "gse/types.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>

namespace gse::test {

/// Random p x q matrix with orthonormal columns: QR of a Gaussian matrix
/// with the R diagonal sign fixed, so the distribution is Haar up to the
/// determinism of the stream.
inline Matrix random_orthonormal(Index p, Index q, Rng& rng) {
  Matrix a(p, q);
  for (Index i = 0; i < p; ++i)
    for (Index j = 0; j < q; ++j) a(i, j) = rng.normal();
  Eigen::HouseholderQR<Matrix> qr(a);
  Matrix full = qr.householderQ() * Matrix::Identity(p, q);
  Matrix r = qr.matrixQR().topRows(q).triangularView<Eigen::Upper>();
  for (Index j = 0; j < q; ++j) {
    if (r(j, j) < 0.0) full.col(j) = -full.col(j);
  }
  return full;
}

/// Random q x q rotation through the same construction.
inline Matrix random_rotation(Index q, Rng& rng) {
  Matrix o = random_orthonormal(q, q, rng);
  if (o.determinant() < 0.0) o.col(0) = -o.col(0);
  return o;
}

/// Two-sided finite-difference Jacobian of a vector map.
template <typename F>
Matrix fd_jacobian(F&& f, const Vector& x, double step) {
  Vector base = f(x);
  Matrix j(base.size(), x.size());
  for (Index c = 0; c < x.size(); ++c) {
    Vector xp = x, xm = x;
    xp(c) += step;
    xm(c) -= step;
    j.col(c) = (f(xp) - f(xm)) / (2.0 * step);
  }
  return j;
}

/// Plane spanned by the first q coordinate axes of R^p.
inline Matrix axis_plane(Index p, Index q) { return Matrix::Identity(p, q); }

/// Plane spanned by axis 0 and an axis rotated by `alpha` inside the
/// (e1, e2) plane: principal angles against axis_plane are (0, alpha).
inline Matrix tilted_plane(Index p, double alpha) {
  Matrix m = Matrix::Zero(p, 2);
  m(0, 0) = 1.0;
  m(1, 1) = std::cos(alpha);
  m(2, 1) = std::sin(alpha);
  return m;
}

}  // namespace gse::test
