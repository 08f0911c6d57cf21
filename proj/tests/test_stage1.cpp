#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "gse/errors.hpp"
#include "gse/geometry.hpp"
#include "gse/manifolds.hpp"
#include "gse/stage1.hpp"
#include "support.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

using namespace gse;

namespace {

HyperParams resolved_params(const Matrix& points, Index q, double eps1 = -1.0) {
  HyperParams hp;
  hp.q = q;
  hp.eps1 = eps1;
  return hp.resolved(points);
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

TEST_CASE("euclidean kernel is the gated gaussian") {
  Vector a = Vector::Zero(3);
  Vector b(3);
  b << 1.0, 2.0, 0.0;
  HyperParams hp;
  hp.q = 2;
  hp.eps1 = 3.0;
  hp.eps2 = 0.25;
  CHECK(euclidean_kernel(a, b, hp) == doctest::Approx(std::exp(-0.25 * 5.0)).epsilon(1e-15));
  hp.eps1 = 2.0;  // ||a - b|| = sqrt(5) > 2: outside the ball
  CHECK(euclidean_kernel(a, b, hp) == 0.0);
  Vector c(3);
  c << 2.0, 0.0, 0.0;
  hp.eps1 = 2.0;  // boundary is exclusive
  CHECK(euclidean_kernel(a, c, hp) == 0.0);
}

TEST_CASE("local pca recovers a flat plane exactly") {
  auto m = make_manifold("AffinePlane");
  PointCloud cloud = sample(*m, 120, 9);
  HyperParams hp = resolved_params(cloud.points, 2);
  Stage1Result s1 = build_kernel_graph(cloud.points, hp);
  Matrix truth = m->tangent_basis(cloud.coords.row(0).transpose());
  for (const TangentFrame& f : s1.frames) {
    CHECK(f.in_domain);
    CHECK_FALSE(f.degenerate);
    double d = projection_2norm_distance(Subspace(truth), Subspace(f.basis));
    CHECK(d * d < 1e-13);
    // residual spectrum vanishes off the plane
    CHECK(f.eigenvalues(2) < 1e-15);
  }
}

TEST_CASE("aggregate kernel multiplies the gaussian by the subspace overlap") {
  Rng rng(13);
  Matrix qa = test::axis_plane(4, 2);
  Matrix qb = test::tilted_plane(4, 0.7);
  TangentFrame fa{qa, Vector::Ones(4), true, false};
  TangentFrame fb{qb, Vector::Ones(4), true, false};
  double overlap = std::cos(0.7) * std::cos(0.7);
  CHECK(aggregate_kernel(fa, fb, 0.5) == doctest::Approx(0.5 * overlap).epsilon(1e-12));
  CHECK(aggregate_kernel(fa, fb, 0.0) == 0.0);
}

TEST_CASE("graph is symmetric with zero diagonal and unit mass") {
  auto m = make_manifold("SwissRoll");
  PointCloud cloud = sample(*m, 150, 2);
  HyperParams hp = resolved_params(cloud.points, 2);
  Stage1Result s1 = build_kernel_graph(cloud.points, hp);
  const auto& w = s1.graph.weights;
  Matrix dense = Matrix(w);
  CHECK((dense - dense.transpose()).cwiseAbs().maxCoeff() == 0.0);
  CHECK(dense.diagonal().cwiseAbs().maxCoeff() == 0.0);
  CHECK(s1.graph.k_norm.sum() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(s1.graph.total == doctest::Approx(dense.sum()).epsilon(1e-12));
  for (Index i = 0; i < dense.rows(); ++i) {
    CHECK(s1.graph.row_sums(i) == doctest::Approx(dense.row(i).sum()).epsilon(1e-12));
  }
}

TEST_CASE("staged graph equals the straight-line reference") {
  auto m = make_manifold("SwissRoll");
  PointCloud cloud = sample(*m, 200, 4);
  HyperParams hp = resolved_params(cloud.points, 2);
  Stage1Result s1 = build_kernel_graph(cloud.points, hp);
  Matrix ref = pair_weights_reference(cloud.points, s1.frames, hp);
  Matrix dense = Matrix(s1.graph.weights);
  CHECK((dense - ref).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("frame error median decreases with sample size") {
  auto m = make_manifold("SwissRoll");
  std::vector<double> medians;
  for (Index n : {200, 400, 800}) {
    PointCloud cloud = sample(*m, n, 2);
    HyperParams hp = resolved_params(cloud.points, 2);
    Stage1Result s1 = build_kernel_graph(cloud.points, hp);
    std::vector<double> errs;
    for (Index i = 0; i < n; ++i) {
      Matrix truth = m->tangent_basis(cloud.coords.row(i).transpose());
      errs.push_back(
          projection_2norm_distance(Subspace(truth), Subspace(s1.frames[size_t(i)].basis)));
    }
    medians.push_back(median(errs));
  }
  CHECK(medians[1] < medians[0]);
  CHECK(medians[2] < medians[1]);
}

TEST_CASE("far clusters raise DisconnectedGraph") {
  Rng rng(21);
  Matrix pts(40, 3);
  for (Index i = 0; i < 40; ++i) {
    double off = i < 20 ? 0.0 : 100.0;
    pts(i, 0) = rng.uniform(0.0, 1.0) + off;
    pts(i, 1) = rng.uniform(0.0, 1.0);
    pts(i, 2) = 0.0;
  }
  HyperParams hp;
  hp.q = 2;
  hp.eps1 = 5.0;
  CHECK_THROWS_AS(build_kernel_graph(pts, hp.resolved(pts)), DisconnectedGraph);
}

TEST_CASE("rank test failures surface as SampleOutsideDomain") {
  // points on a line cannot support q = 2 frames
  Matrix pts(30, 3);
  for (Index i = 0; i < 30; ++i) {
    pts(i, 0) = 0.1 * double(i);
    pts(i, 1) = 0.0;
    pts(i, 2) = 0.0;
  }
  HyperParams hp;
  hp.q = 2;
  hp.eps1 = 2.0;
  hp.eps3 = 1e-8;
  CHECK_THROWS_AS(build_kernel_graph(pts, hp.resolved(pts)), SampleOutsideDomain);
}

TEST_CASE("starved neighborhoods surface as InsufficientNeighbors") {
  Matrix pts(5, 2);
  pts << 0.0, 0.0, 0.1, 0.0, 0.2, 0.1, 10.0, 10.0, 10.1, 10.0;
  HyperParams hp;
  hp.q = 1;
  hp.eps1 = 0.05;  // every ball holds only the point itself
  CHECK_THROWS_AS(build_kernel_graph(pts, hp.resolved(pts)), InsufficientNeighbors);
}

TEST_CASE("coincident sample points are a data error") {
  Matrix pts(12, 2);
  Rng rng(3);
  for (Index i = 0; i < 12; ++i) {
    pts(i, 0) = rng.uniform(0.0, 1.0);
    pts(i, 1) = rng.uniform(0.0, 1.0);
  }
  pts.row(7) = pts.row(2);
  HyperParams hp;
  hp.q = 1;
  hp.eps1 = 2.0;
  CHECK_THROWS_AS(build_kernel_graph(pts, hp.resolved(pts)), Error);
}

TEST_CASE("default radius rule keeps the mandated sample connected") {
  auto m = make_manifold("SwissRoll");
  PointCloud cloud = sample(*m, 450, 1);
  HyperParams hp = resolved_params(cloud.points, 2);
  CHECK(hp.eps1 > 0.0);
  Stage1Result s1 = build_kernel_graph(cloud.points, hp);
  CHECK(s1.graph.total > 0.0);
  // every point carries at least one neighbor, otherwise the fit would throw
  for (Index i = 0; i < cloud.n(); ++i) CHECK(s1.graph.row_sums(i) > 0.0);
}

TEST_CASE("degenerate spectrum flag trips on isotropic neighborhoods") {
  // a symmetric cross in the plane has two equal pca eigenvalues, so the
  // q = 1 frame direction is unstable and must be flagged
  Matrix pts(5, 2);
  pts << 0.0, 0.0, 1.0, 0.0, -1.0, 0.0, 0.0, 1.0, 0.0, -1.0;
  HyperParams hp;
  hp.q = 1;
  hp.eps1 = 3.0;
  hp.eps2 = 0.0;
  TangentFrame f = local_pca(pts, Vector::Ones(5), hp.resolved(pts));
  CHECK(f.degenerate);
}
