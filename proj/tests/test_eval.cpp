#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "gse/errors.hpp"
#include "gse/eval.hpp"
#include "gse/manifolds.hpp"
#include "gse/model.hpp"
#include "support.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <vector>

using namespace gse;

namespace {

struct Fitted {
  std::unique_ptr<Manifold> manifold;
  PointCloud cloud;
  std::unique_ptr<GseModel> model;
};

Fitted fit_model(const char* name, Index n, std::uint64_t seed,
                 Variant variant = Variant::Gse) {
  Fitted f;
  f.manifold = make_manifold(name);
  f.cloud = sample(*f.manifold, n, seed);
  HyperParams hp;
  hp.q = f.manifold->q();
  hp.variant = variant;
  f.model = std::make_unique<GseModel>(GseModel::fit(f.cloud.points, hp.resolved(f.cloud.points)));
  return f;
}

}  // namespace

TEST_CASE("summary aggregates exactly over the successful records") {
  Fitted f = fit_model("AffinePlane", 150, 23);
  PointCloud test = sample(*f.manifold, 7, 1023);
  Matrix pts(8, 5);
  pts.topRows(7) = test.points;
  pts.row(7) = Vector::Constant(5, 1e6).transpose();  // stranded far away

  EvalReport rep = evaluate(*f.model, pts);
  CHECK(rep.summary.n == 8);
  CHECK(rep.summary.n_failed == 1);
  REQUIRE(rep.records.size() == 8);
  CHECK_FALSE(rep.records[7].ok);
  CHECK_FALSE(rep.records[7].error.empty());

  std::vector<double> deltas;
  for (int i = 0; i < 7; ++i) {
    REQUIRE(rep.records[size_t(i)].ok);
    deltas.push_back(rep.records[size_t(i)].delta);
  }
  double mean = 0.0, mx = 0.0;
  for (double d : deltas) {
    mean += d;
    mx = std::max(mx, d);
  }
  mean /= 7.0;
  std::sort(deltas.begin(), deltas.end());
  CHECK(rep.summary.mean_delta == mean);
  CHECK(rep.summary.median_delta == deltas[3]);
  CHECK(rep.summary.max_delta == mx);
  CHECK(rep.summary.max_delta < 1e-8);  // the flat model is exact
  CHECK(rep.summary.mean_tangent == -1.0);
  for (int i = 0; i < 7; ++i) CHECK(rep.records[size_t(i)].tangent == -1.0);
}

TEST_CASE("even-count medians average the middle pair") {
  Fitted f = fit_model("AffinePlane", 150, 23);
  PointCloud test = sample(*f.manifold, 6, 77);
  EvalReport rep = evaluate(*f.model, test.points);
  std::vector<double> d;
  for (const EvalRecord& r : rep.records) d.push_back(r.delta);
  std::sort(d.begin(), d.end());
  CHECK(rep.summary.median_delta == 0.5 * (d[2] + d[3]));
}

TEST_CASE("tangent proximity is recorded only when a matching generator is given") {
  Fitted f = fit_model("AffinePlane", 150, 23);
  PointCloud test = sample(*f.manifold, 10, 501);

  EvalReport with = evaluate(*f.model, test.points, f.manifold.get(), &test.coords);
  for (const EvalRecord& r : with.records) {
    REQUIRE(r.ok);
    CHECK(r.tangent >= 0.0);
    CHECK(r.tangent <= 1.0);
    CHECK(r.tangent < 1e-7);  // flat model recovers the plane exactly
  }
  CHECK(with.summary.mean_tangent >= 0.0);
  CHECK(with.summary.mean_tangent < 1e-7);

  // a generator of different intrinsic dimension disables the comparison
  auto helix = make_manifold("Spiral");
  Matrix fake_coords = Matrix::Zero(test.points.rows(), 1);
  EvalReport without = evaluate(*f.model, test.points, helix.get(), &fake_coords);
  CHECK(without.summary.mean_tangent == -1.0);
}

TEST_CASE("shape mismatches are rejected up front") {
  Fitted f = fit_model("AffinePlane", 150, 23);
  Matrix bad = Matrix::Zero(4, 3);
  CHECK_THROWS_AS(evaluate(*f.model, bad), DimensionMismatch);

  PointCloud test = sample(*f.manifold, 5, 9);
  Matrix short_coords = test.coords.topRows(3);
  CHECK_THROWS_AS(evaluate(*f.model, test.points, f.manifold.get(), &short_coords),
                  DimensionMismatch);
}

TEST_CASE("pointwise error helpers are exact on a flat model") {
  Fitted f = fit_model("AffinePlane", 150, 23);
  PointCloud test = sample(*f.manifold, 5, 301);
  for (Index i = 0; i < 5; ++i) {
    Vector x = test.points.row(i).transpose();
    CHECK(reconstruction_error(x, *f.model) < 1e-8);
    CHECK(tangent_error(x, test.coords.row(i).transpose(), *f.model, *f.manifold) < 1e-7);
  }
}

TEST_CASE("ball statistics on a flat model vanish and the identity holds") {
  Fitted f = fit_model("AffinePlane", 200, 41);
  Vector b0 = Vector::Zero(2);
  Vector x0 = f.manifold->chart(b0);
  BoundCheck check = local_max_error(x0, b0, 0.4, *f.model, *f.manifold, 60, 7);
  CHECK(check.n_sampled == 60);
  CHECK(check.eps == 0.4);
  CHECK((check.x0 - x0).cwiseAbs().maxCoeff() == 0.0);
  CHECK(check.rhs_sq ==
        doctest::Approx(check.delta0_sq + 0.16 * check.tangent_term).epsilon(1e-15));
  CHECK(check.empirical_max_sq < 1e-16);
  CHECK(check.delta0_sq < 1e-16);
  CHECK(check.tangent_term < 1e-14);
}

TEST_CASE("ball sampling rejects impossible configurations") {
  Fitted f = fit_model("AffinePlane", 150, 23);
  Vector b0 = Vector::Zero(2);
  Vector x0 = f.manifold->chart(b0);
  CHECK_THROWS_AS(local_max_error(x0, b0, 0.0, *f.model, *f.manifold, 10, 1), InvalidConfig);
  CHECK_THROWS_AS(local_max_error(x0, b0, 0.3, *f.model, *f.manifold, 0, 1), InvalidConfig);
  // a radius far below the sample spacing starves the rejection sampler
  CHECK_THROWS_AS(local_max_error(x0, b0, 1e-9, *f.model, *f.manifold, 5, 2, 3), RejectionFailure);
}

TEST_CASE("projection finds the exact foot point on a flat model") {
  Fitted f = fit_model("AffinePlane", 300, 23);
  // step off the plane along a direction orthogonal to it
  Vector b0(2);
  b0 << 0.3, -0.2;
  Vector on = f.manifold->chart(b0);
  Matrix j = f.manifold->chart_jacobian(b0);
  Vector off = Vector::Ones(5);
  off -= j * (j.transpose() * j).ldlt().solve(j.transpose() * off);  // j has orthonormal columns
  off.normalize();
  Vector x = on + 0.2 * off;

  ProjectionResult pr = project_to_manifold(x, *f.model);
  CHECK(pr.converged);
  CHECK(std::abs(pr.distance - 0.2) < 1e-6);
  CHECK((f.model->reconstruct(pr.y) - on).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("projection never loses to the plain embed seed") {
  Fitted f = fit_model("SwissRoll", 300, 2, Variant::Ogse);
  PointCloud test = sample(*f.manifold, 40, 1002);
  int tested = 0;
  for (Index i = 0; i < test.points.rows() && tested < 12; ++i) {
    double t = test.coords(i, 0), s = test.coords(i, 1);
    if (t < 1.5 * 3.141592653589793 + 2.0 || t > 4.5 * 3.141592653589793 - 2.0) continue;
    if (s < 3.0 || s > 18.0) continue;
    ++tested;
    Vector x = test.points.row(i).transpose();
    double seed_err = reconstruction_error(x, *f.model);
    ProjectionResult pr = project_to_manifold(x, *f.model);
    CHECK(pr.distance <= seed_err + 1e-12);
  }
  CHECK(tested >= 8);
}
