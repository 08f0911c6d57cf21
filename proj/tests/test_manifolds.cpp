#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "gse/errors.hpp"
#include "gse/geometry.hpp"
#include "gse/manifolds.hpp"
#include "support.hpp"

#include <cmath>
#include <string>

using namespace gse;

namespace {

Vector mid_domain(const Manifold& m) {
  Matrix dom = m.domain();
  return 0.5 * (dom.col(0) + dom.col(1));
}

}  // namespace

TEST_CASE("factory resolves names case-insensitively and rejects unknowns") {
  CHECK(make_manifold("swissroll")->name() == "SwissRoll");
  CHECK(make_manifold("SPIRAL")->name() == "Spiral");
  CHECK(make_manifold("AffinePlane")->name() == "AffinePlane");
  CHECK(make_manifold("spherepatch")->name() == "SpherePatch");
  CHECK_THROWS_AS(make_manifold("torus"), InvalidConfig);
}

TEST_CASE("chart jacobians match finite differences on every generator") {
  for (const char* name : {"SwissRoll", "Spiral", "AffinePlane", "SpherePatch"}) {
    auto m = make_manifold(name);
    Rng rng(99);
    Matrix dom = m->domain();
    for (int trial = 0; trial < 10; ++trial) {
      Vector b(m->q());
      for (Index k = 0; k < m->q(); ++k) {
        double lo = dom(k, 0), hi = dom(k, 1);
        double pad = 0.05 * (hi - lo);
        b(k) = rng.uniform(lo + pad, hi - pad);
      }
      Matrix analytic = m->chart_jacobian(b);
      Matrix fd = test::fd_jacobian([&](const Vector& v) { return m->chart(v); }, b, 1e-6);
      CHECK((fd - analytic).norm() / analytic.norm() < 1e-6);
    }
  }
}

TEST_CASE("spiral ribbon adds a width coordinate") {
  auto helix = make_manifold("Spiral");
  auto ribbon = make_manifold("Spiral", 2);
  CHECK(helix->q() == 1);
  CHECK(ribbon->q() == 2);
  CHECK(helix->p() == 3);
  CHECK(ribbon->p() == 3);
  CHECK_THROWS_AS(make_manifold("Spiral", 3), InvalidConfig);
}

TEST_CASE("swiss roll chart satisfies the winding identity") {
  auto m = make_manifold("SwissRoll");
  Rng rng(5);
  Matrix dom = m->domain();
  for (int trial = 0; trial < 50; ++trial) {
    Vector b(2);
    b << rng.uniform(dom(0, 0), dom(0, 1)), rng.uniform(dom(1, 0), dom(1, 1));
    Vector x = m->chart(b);
    // radius in the winding plane equals the angle parameter, height is s
    CHECK(std::sqrt(x(0) * x(0) + x(2) * x(2)) == doctest::Approx(b(0)).epsilon(1e-12));
    CHECK(x(1) == doctest::Approx(b(1)).epsilon(1e-12));
  }
}

TEST_CASE("affine plane points satisfy an exact affine relation") {
  auto m = make_manifold("AffinePlane");
  PointCloud cloud = sample(*m, 60, 3);
  REQUIRE(cloud.p() == 5);
  // x = c + coords * J^T exactly, with J constant across the plane
  Matrix j = m->chart_jacobian(mid_domain(*m));
  Vector c = m->chart(Vector::Zero(2));
  for (Index i = 0; i < cloud.n(); ++i) {
    Vector pred = c + j * cloud.coords.row(i).transpose();
    CHECK((pred - cloud.points.row(i).transpose()).norm() < 1e-12);
  }
}

TEST_CASE("affine plane generator seed changes the embedding") {
  auto a = make_manifold("AffinePlane", -1, 1);
  auto b = make_manifold("AffinePlane", -1, 2);
  Vector mid = mid_domain(*a);
  CHECK((a->chart(mid) - b->chart(mid)).norm() > 1e-3);
  auto a2 = make_manifold("AffinePlane", -1, 1);
  CHECK((a->chart(mid) - a2->chart(mid)).norm() == 0.0);
}

TEST_CASE("sphere patch lies on the unit sphere with full-rank tangents") {
  auto m = make_manifold("SpherePatch");
  PointCloud cloud = sample(*m, 40, 7);
  for (Index i = 0; i < cloud.n(); ++i) {
    CHECK(cloud.points.row(i).norm() == doctest::Approx(1.0).epsilon(1e-12));
    Matrix t = m->tangent_basis(cloud.coords.row(i).transpose());
    // tangent plane of the sphere is orthogonal to the position vector
    CHECK((cloud.points.row(i) * t).norm() < 1e-10);
  }
}

TEST_CASE("tangent_basis spans the jacobian columns") {
  for (const char* name : {"SwissRoll", "Spiral", "SpherePatch"}) {
    auto m = make_manifold(name);
    Vector b = mid_domain(*m);
    Matrix j = m->chart_jacobian(b);
    Subspace tb{m->tangent_basis(b)};
    Subspace js{orthonormalize_svd(j)};
    double d = projection_2norm_distance(tb, js);
    CHECK(d * d < 1e-12);
  }
}

TEST_CASE("sampling is deterministic in the seed and stays in the box") {
  auto m = make_manifold("SwissRoll");
  PointCloud a = sample(*m, 100, 42);
  PointCloud b = sample(*m, 100, 42);
  PointCloud c = sample(*m, 100, 43);
  CHECK(a.points == b.points);
  CHECK(a.coords == b.coords);
  CHECK(a.points != c.points);
  Matrix dom = m->domain();
  for (Index i = 0; i < a.n(); ++i) {
    for (Index k = 0; k < m->q(); ++k) {
      CHECK(a.coords(i, k) >= dom(k, 0));
      CHECK(a.coords(i, k) < dom(k, 1));
    }
  }
  // coords reproduce the points through the chart
  for (Index i = 0; i < a.n(); ++i) {
    CHECK((m->chart(a.coords.row(i).transpose()) - a.points.row(i).transpose()).norm() < 1e-12);
  }
}

TEST_CASE("interior respects the margin fraction") {
  auto m = make_manifold("SwissRoll");
  Matrix dom = m->domain();
  Vector center = mid_domain(*m);
  CHECK(m->interior(center));
  Vector edge = center;
  edge(0) = dom(0, 0) + 0.01 * (dom(0, 1) - dom(0, 0));
  CHECK_FALSE(m->interior(edge));
  CHECK(m->interior(edge, 0.005));
}
