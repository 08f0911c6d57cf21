#include "gse/eval.hpp"

#include "gse/errors.hpp"
#include "gse/geometry.hpp"
#include "gse/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

namespace gse {

namespace {

// Tangent proximity given an already-computed embedding of x.
double tangent_at(const Vector& y, const Vector& b, const GseModel& model,
                  const Manifold& manifold) {
  Matrix g = model.reconstruct_jacobian(y);
  return projection_2norm_distance(Subspace(manifold.tangent_basis(b)),
                                   Subspace(orthonormalize_svd(g)));
}

double median_of(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  std::size_t mid = v.size() / 2;
  if (v.size() % 2 == 1) return v[mid];
  return 0.5 * (v[mid - 1] + v[mid]);
}

}  // namespace

double reconstruction_error(const Vector& x, const GseModel& model) {
  Vector y = model.embed(x);
  return (x - model.reconstruct(y)).norm();
}

double tangent_error(const Vector& x, const Vector& b, const GseModel& model,
                     const Manifold& manifold) {
  return tangent_at(model.embed(x), b, model, manifold);
}

EvalReport evaluate(const GseModel& model, const Matrix& test_points, const Manifold* manifold,
                    const Matrix* coords) {
  if (test_points.cols() != model.sample_points().cols()) {
    throw DimensionMismatch("test points have " + std::to_string(test_points.cols()) +
                            " columns, model expects " +
                            std::to_string(model.sample_points().cols()));
  }
  bool with_tangent =
      manifold != nullptr && coords != nullptr && manifold->q() == model.params().q;
  if (with_tangent && coords->rows() != test_points.rows()) {
    throw DimensionMismatch("coords row count does not match test points");
  }
  if (with_tangent && coords->cols() != manifold->q()) {
    throw DimensionMismatch("coords have " + std::to_string(coords->cols()) +
                            " columns, generator expects " + std::to_string(manifold->q()));
  }

  EvalReport report;
  report.records.resize(std::size_t(test_points.rows()));
  par::for_each_index(test_points.rows(), [&](Index i) {
    EvalRecord& rec = report.records[std::size_t(i)];
    rec.x = test_points.row(i).transpose();
    try {
      rec.y = model.embed(rec.x);
      rec.x_rec = model.reconstruct(rec.y);
      rec.delta = (rec.x - rec.x_rec).norm();
      if (with_tangent) {
        rec.tangent = tangent_at(rec.y, coords->row(i).transpose(), model, *manifold);
      }
      rec.ok = true;
    } catch (const std::exception& e) {
      rec.ok = false;
      rec.error = e.what();
    }
  });

  EvalSummary& s = report.summary;
  s.n = test_points.rows();
  std::vector<double> deltas;
  double tangent_sum = 0.0;
  Index tangent_count = 0;
  for (const EvalRecord& rec : report.records) {
    if (!rec.ok) {
      ++s.n_failed;
      continue;
    }
    deltas.push_back(rec.delta);
    s.max_delta = std::max(s.max_delta, rec.delta);
    if (rec.tangent >= 0.0) {
      tangent_sum += rec.tangent;
      ++tangent_count;
    }
  }
  if (!deltas.empty()) {
    s.mean_delta = std::accumulate(deltas.begin(), deltas.end(), 0.0) / double(deltas.size());
    s.median_delta = median_of(deltas);
  }
  if (tangent_count > 0) s.mean_tangent = tangent_sum / double(tangent_count);
  return report;
}

BoundCheck local_max_error(const Vector& x0, const Vector& b0, double eps, const GseModel& model,
                           const Manifold& manifold, Index m, std::uint64_t seed,
                           Index budget_factor) {
  if (m < 1) throw InvalidConfig("local_max_error needs at least one ball sample");
  if (eps <= 0.0) throw InvalidConfig("local_max_error needs a positive radius");

  BoundCheck check;
  check.x0 = x0;
  check.eps = eps;

  double delta0 = reconstruction_error(x0, model);
  double d_tan = tangent_error(x0, b0, model, manifold);
  check.delta0_sq = delta0 * delta0;
  check.tangent_term = d_tan * d_tan;
  check.rhs_sq = check.delta0_sq + eps * eps * check.tangent_term;

  Rng rng(seed);
  Matrix box = manifold.domain();
  Vector b(manifold.q());
  Index budget = budget_factor * m;
  for (Index draw = 0; draw < budget && check.n_sampled < m; ++draw) {
    for (Index d = 0; d < b.size(); ++d) b(d) = rng.uniform(box(d, 0), box(d, 1));
    Vector xs = manifold.chart(b);
    if ((xs - x0).norm() >= eps) continue;
    ++check.n_sampled;
    double delta = reconstruction_error(xs, model);
    check.empirical_max_sq = std::max(check.empirical_max_sq, delta * delta);
  }
  if (check.n_sampled < m) {
    throw RejectionFailure("only " + std::to_string(check.n_sampled) + " of " + std::to_string(m) +
                           " ball points found within radius " + std::to_string(eps) +
                           " after " + std::to_string(budget) + " draws");
  }
  return check;
}

ProjectionResult project_to_manifold(const Vector& x, const GseModel& model, int max_iter,
                                     Index extra_starts) {
  const Index q = model.params().q;
  auto value = [&](const Vector& y) -> double {
    try {
      return (model.reconstruct(y) - x).squaredNorm();
    } catch (const Error&) {
      return std::numeric_limits<double>::infinity();
    }
  };

  std::vector<Vector> starts;
  starts.push_back(model.embed(x));
  if (extra_starts > 0) {
    const Matrix& pts = model.sample_points();
    std::vector<Index> order(std::size_t(pts.rows()));
    std::iota(order.begin(), order.end(), Index(0));
    Vector d2(pts.rows());
    for (Index j = 0; j < pts.rows(); ++j) d2(j) = (pts.row(j).transpose() - x).squaredNorm();
    Index keep = std::min<Index>(extra_starts, pts.rows());
    std::partial_sort(order.begin(), order.begin() + keep, order.end(),
                      [&](Index a, Index c) { return d2(a) < d2(c) || (d2(a) == d2(c) && a < c); });
    for (Index k = 0; k < keep; ++k) {
      starts.push_back(model.sample_embeddings().row(order[std::size_t(k)]).transpose());
    }
  }

  ProjectionResult best;
  best.y = starts.front();
  double best_f = value(starts.front());

  for (const Vector& start : starts) {
    Vector y = start;
    double f = value(y);
    if (!std::isfinite(f)) continue;
    double mu = 1e-6;
    bool conv = false;
    for (int it = 0; it < max_iter; ++it) {
      Vector r;
      Matrix jac;
      try {
        r = model.reconstruct(y) - x;
        jac = model.reconstruct_jacobian(y);
      } catch (const Error&) {
        break;
      }
      Vector grad = jac.transpose() * r;
      if (grad.norm() <= 1e-10 * (1.0 + std::sqrt(f))) {
        conv = true;
        break;
      }
      Matrix gram = jac.transpose() * jac;
      bool accepted = false;
      for (int damp = 0; damp < 30 && mu <= 1e14; ++damp) {
        Matrix a = gram + mu * Matrix::Identity(q, q);
        Vector step = a.ldlt().solve(-grad);
        double f_try = value(y + step);
        if (f_try < f) {
          double drop = f - f_try;
          y += step;
          f = f_try;
          mu = std::max(mu / 3.0, 1e-12);
          accepted = true;
          if (step.norm() <= 1e-11 * (1.0 + y.norm()) || drop <= 1e-15 * (1.0 + f)) conv = true;
          break;
        }
        mu *= 10.0;
      }
      if (!accepted || conv) break;
    }
    if (f < best_f) {
      best_f = f;
      best.y = y;
    }
    best.converged = best.converged || conv;
  }
  best.distance = std::isfinite(best_f) ? std::sqrt(best_f) : best_f;
  return best;
}

}  // namespace gse
