#include "gse/stage3.hpp"

#include "gse/errors.hpp"
#include "gse/parallel.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace gse {

namespace {

using SpMat = Eigen::SparseMatrix<double, Eigen::RowMajor>;

Vector chord(const Matrix& points, Index i, Index j) {
  return (points.row(j) - points.row(i)).transpose();
}

/// GSE normal equations.  Unknown block m couples to its kernel neighbors
/// through W_i = v_i^T v_i; the system is SPD on the mean-zero subspace, so
/// a rank-q deflation term sigma * mean(h) keeps the factorization definite
/// without moving the solution.
struct GseSystem {
  const Matrix& points;
  const std::vector<TangentFrame>& frames;
  const KernelGraph& graph;
  const std::vector<Matrix>& v;
  Index n, q;
  std::vector<Matrix> w;       // v_i^T v_i
  std::vector<Matrix> p;       // sum_j K_ij W_j
  double sigma = 0.0;

  GseSystem(const Matrix& pts, const std::vector<TangentFrame>& fr, const KernelGraph& g,
            const std::vector<Matrix>& vs)
      : points(pts), frames(fr), graph(g), v(vs), n(g.weights.rows()), q(vs[0].rows()) {
    w.resize(size_t(n));
    p.assign(size_t(n), Matrix::Zero(q, q));
    for (Index i = 0; i < n; ++i) w[size_t(i)] = v[size_t(i)].transpose() * v[size_t(i)];
    double trace_sum = 0.0;
    for (Index i = 0; i < n; ++i) {
      for (SpMat::InnerIterator it(graph.weights, i); it; ++it) {
        p[size_t(i)] += it.value() * w[size_t(it.col())];
      }
      trace_sum += (p[size_t(i)] + graph.row_sums(i) * w[size_t(i)]).trace();
    }
    sigma = trace_sum / double(n * q);
    if (sigma <= 0.0) throw SingularSystem("embedding system has zero scale");
  }

  // out = A x + sigma * (column block mean), x and out are n*q vectors
  // laid out per point; rows are independent given the precomputed mean.
  Vector apply(const Vector& x) const {
    Vector mean = Vector::Zero(q);
    for (Index i = 0; i < n; ++i) mean += x.segment(i * q, q);
    mean /= double(n);
    Vector out(n * q);
    par::for_each_index(n, [&](std::ptrdiff_t ii) {
      Index m = Index(ii);
      Vector acc = (p[size_t(m)] + graph.row_sums(m) * w[size_t(m)]) * x.segment(m * q, q);
      Vector nsum = Vector::Zero(q);
      for (SpMat::InnerIterator it(graph.weights, m); it; ++it) {
        Index j = it.col();
        acc -= it.value() * (w[size_t(j)] * x.segment(j * q, q));
        nsum += it.value() * x.segment(j * q, q);
      }
      acc -= w[size_t(m)] * nsum;
      out.segment(m * q, q) = acc + sigma * mean;
    });
    return out;
  }

  Vector rhs() const {
    Vector b = Vector::Zero(n * q);
    for (Index m = 0; m < n; ++m) {
      Vector acc = Vector::Zero(q);
      for (SpMat::InnerIterator it(graph.weights, m); it; ++it) {
        Index j = it.col();
        Vector d = chord(points, j, m);  // X_m - X_j
        acc += it.value() * (v[size_t(j)].transpose() * (frames[size_t(j)].basis.transpose() * d) -
                             v[size_t(m)].transpose() * (frames[size_t(m)].basis.transpose() * (-d)));
      }
      b.segment(m * q, q) = acc;
    }
    return b;
  }

  Matrix dense() const {
    Matrix a = Matrix::Zero(n * q, n * q);
    for (Index m = 0; m < n; ++m) {
      a.block(m * q, m * q, q, q) = p[size_t(m)] + graph.row_sums(m) * w[size_t(m)];
      for (SpMat::InnerIterator it(graph.weights, m); it; ++it) {
        Index j = it.col();
        a.block(m * q, j * q, q, q) -= it.value() * (w[size_t(j)] + w[size_t(m)]);
      }
    }
    for (Index bi = 0; bi < n; ++bi)
      for (Index bj = 0; bj < n; ++bj)
        a.block(bi * q, bj * q, q, q).diagonal().array() += sigma / double(n);
    return a;
  }
};

template <class Apply, class Prec>
Vector pcg(Apply&& apply, Prec&& prec, const Vector& b, Index max_iter) {
  Vector x = Vector::Zero(b.size());
  double b_norm = b.norm();
  if (b_norm == 0.0) return x;
  Vector r = b;
  Vector z = prec(r);
  Vector d = z;
  double rz = r.dot(z);
  for (Index it = 0; it < max_iter; ++it) {
    Vector ad = apply(d);
    double dad = d.dot(ad);
    if (dad <= 0.0) throw SingularSystem("embedding system lost positive definiteness");
    double alpha = rz / dad;
    x += alpha * d;
    r -= alpha * ad;
    if (r.norm() <= 1e-12 * b_norm) return x;
    z = prec(r);
    double rz_next = r.dot(z);
    d = z + (rz_next / rz) * d;
    rz = rz_next;
  }
  throw SingularSystem("conjugate gradient did not converge on the embedding system");
}

Vector solve_cg(const GseSystem& sys, const Vector& b) {
  // block-diagonal preconditioner from the diagonal blocks plus deflation
  std::vector<Eigen::LDLT<Matrix>> prec(static_cast<size_t>(sys.n));
  for (Index m = 0; m < sys.n; ++m) {
    Matrix d = sys.p[size_t(m)] + sys.graph.row_sums(m) * sys.w[size_t(m)];
    d.diagonal().array() += sys.sigma / double(sys.n);
    prec[size_t(m)].compute(d);
  }
  auto apply_prec = [&](const Vector& r) {
    Vector z(r.size());
    for (Index m = 0; m < sys.n; ++m)
      z.segment(m * sys.q, sys.q) = prec[size_t(m)].solve(r.segment(m * sys.q, sys.q));
    return z;
  };
  return pcg([&](const Vector& v) { return sys.apply(v); }, apply_prec, b, 20 * sys.n * sys.q);
}

}  // namespace

double embedding_residual(const Matrix& points, const std::vector<TangentFrame>& frames,
                          const KernelGraph& graph, const std::vector<Matrix>& v_sample,
                          const Matrix& h, double* tangent_part) {
  const Index n = graph.weights.rows();
  double total = 0.0;
  double tangent = 0.0;
  for (Index i = 0; i < n; ++i) {
    const Matrix& qi = frames[size_t(i)].basis;
    for (SpMat::InnerIterator it(graph.weights, i); it; ++it) {
      Index j = it.col();
      Vector d = chord(points, i, j);
      Vector c = qi.transpose() * d;
      Vector t = v_sample[size_t(i)] * (h.row(j) - h.row(i)).transpose() - c;
      double perp = d.squaredNorm() - c.squaredNorm();
      tangent += 0.5 * it.value() * t.squaredNorm();
      total += 0.5 * it.value() * (std::max(perp, 0.0) + t.squaredNorm());
    }
  }
  if (tangent_part) *tangent_part = tangent;
  return total;
}

EmbeddingSet solve_embedding(const Matrix& points, const std::vector<TangentFrame>& frames,
                             const KernelGraph& graph, const std::vector<Matrix>& v_sample,
                             const HyperParams& params) {
  const Index n = graph.weights.rows();
  const Index q = params.q;
  if (Index(v_sample.size()) != n) {
    throw DimensionMismatch("solve_embedding: field size does not match sample size");
  }
  EmbeddingSet out;

  if (params.variant == Variant::Gse) {
    GseSystem sys(points, frames, graph, v_sample);
    Vector b = sys.rhs();
    Vector x;
    if (n * q <= params.dense_eig_limit) {
      Matrix a = sys.dense();
      Eigen::LDLT<Matrix> ldlt(a);
      if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) {
        throw SingularSystem("embedding system is singular beyond the translation modes; "
                             "the kernel graph is likely near-disconnected");
      }
      x = ldlt.solve(b);
    } else {
      x = solve_cg(sys, b);
    }
    out.h.resize(n, q);
    for (Index i = 0; i < n; ++i) out.h.row(i) = x.segment(i * q, q).transpose();
  } else {
    // graph Laplacian system; the kernel-regression form scales each row by
    // the row mass, which symmetrizes the operator
    Matrix r(n, q);
    for (Index i = 0; i < n; ++i) {
      Vector xbar = Vector::Zero(points.cols());
      for (SpMat::InnerIterator it(graph.weights, i); it; ++it) {
        xbar += (it.value() / graph.row_sums(i)) * points.row(it.col()).transpose();
      }
      Matrix hi = frames[size_t(i)].basis * v_sample[size_t(i)];
      r.row(i) = (hi.transpose() * (points.row(i).transpose() - xbar)).transpose();
    }
    Matrix dr = graph.row_sums.asDiagonal() * r;
    // the dropped curvature terms make the system slightly inconsistent;
    // project the right side onto the solvable subspace
    Vector imbalance = dr.colwise().sum().transpose() / double(n);
    dr.rowwise() -= imbalance.transpose();

    double sigma = graph.row_sums.mean();
    if (n <= params.dense_eig_limit) {
      Matrix lap = Matrix(graph.weights) * -1.0;
      lap.diagonal() += graph.row_sums;
      lap.array() += sigma / double(n);
      Eigen::LDLT<Matrix> ldlt(lap);
      if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) {
        throw SingularSystem("embedding Laplacian is singular beyond the constant mode; "
                             "the kernel graph is likely near-disconnected");
      }
      out.h = ldlt.solve(dr);
    } else {
      auto apply = [&](const Vector& x) {
        Vector y = graph.row_sums.asDiagonal() * x - graph.weights * x;
        y.array() += sigma * x.mean();
        return y;
      };
      Vector diag = graph.row_sums;
      diag.array() += sigma / double(n);
      auto prec = [&](const Vector& r) { return Vector(r.cwiseQuotient(diag)); };
      out.h.resize(n, q);
      for (Index c = 0; c < q; ++c) out.h.col(c) = pcg(apply, prec, Vector(dr.col(c)), 20 * n);
    }

    // report the size of the dropped terms
    double max_xi = 0.0;
    for (Index i = 0; i < n; ++i) {
      Matrix hi = frames[size_t(i)].basis * v_sample[size_t(i)];
      Vector xi = Vector::Zero(q);
      for (SpMat::InnerIterator it(graph.weights, i); it; ++it) {
        Index j = it.col();
        Matrix hj = frames[size_t(j)].basis * v_sample[size_t(j)];
        xi += 0.5 * (it.value() / graph.row_sums(i)) *
              ((hj - hi).transpose() * chord(points, i, j));
      }
      max_xi = std::max(max_xi, xi.norm());
    }
    out.ogse_dropped = max_xi;
  }

  // pin the gauge exactly
  Vector mean = out.h.colwise().mean().transpose();
  out.h.rowwise() -= mean.transpose();
  out.delta_h = embedding_residual(points, frames, graph, v_sample, out.h, &out.delta_h_tangent);
  return out;
}

}  // namespace gse
