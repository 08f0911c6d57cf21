#pragma once

#include "gse/errors.hpp"
#include "gse/types.hpp"

#include <cstdint>
#include <memory>
#include <string>

namespace gse {

/// A synthetic manifold given by a single full-rank chart f: B -> R^p over a
/// box B in R^q, with the analytic Jacobian available as a tangent oracle.
class Manifold {
 public:
  virtual ~Manifold() = default;

  virtual std::string name() const = 0;
  virtual Index q() const = 0;
  virtual Index p() const = 0;

  /// Parameter box, q x 2 with columns (lo, hi).
  virtual Matrix domain() const = 0;

  virtual Vector chart(const Vector& b) const = 0;
  virtual Matrix chart_jacobian(const Vector& b) const = 0;

  /// Orthonormal basis of the analytic tangent space Span(J_f(b)).
  Matrix tangent_basis(const Vector& b) const;

  /// True when b keeps at least `margin` of each box width away from every
  /// face; the default matches the 10% trim used for interior test points.
  bool interior(const Vector& b, double margin = 0.1) const;
};

/// Uniform i.i.d. draws from the parameter box mapped through the chart.
/// Deterministic given the seed; coords carries the hidden b values.
PointCloud sample(const Manifold& m, Index n, std::uint64_t seed);

/// Factory over the built-in generators: SwissRoll, Spiral, AffinePlane,
/// SpherePatch (names case-insensitive).  `q_override` switches Spiral
/// between the helix (q=1, default) and ribbon (q=2) readings.  `gen_seed`
/// fixes the random rotation and offset of AffinePlane.
std::unique_ptr<Manifold> make_manifold(const std::string& name, Index q_override = -1,
                                        std::uint64_t gen_seed = 12345);

}  // namespace gse
