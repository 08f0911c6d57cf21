#include "gse/stage1.hpp"

#include "gse/errors.hpp"
#include "gse/parallel.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

namespace gse {

double euclidean_kernel(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& x2,
                        const HyperParams& params) {
  if (x.size() != x2.size()) {
    throw DimensionMismatch("kernel arguments have different dimensions (" +
                            std::to_string(x.size()) + " vs " + std::to_string(x2.size()) + ")");
  }
  double d2 = (x - x2).squaredNorm();
  if (d2 >= params.eps1 * params.eps1) return 0.0;
  return std::exp(-params.eps2 * d2);
}

TangentFrame local_pca(const Matrix& pts, const Vector& weights, const HyperParams& params) {
  const Index m = pts.rows();
  const Index p = pts.cols();
  if (weights.size() != m) {
    throw DimensionMismatch("local_pca: " + std::to_string(m) + " points but " +
                            std::to_string(weights.size()) + " weights");
  }
  Index positive = 0;
  for (Index k = 0; k < m; ++k)
    if (weights(k) > 0.0) ++positive;
  if (positive < params.q + 1) {
    throw InsufficientNeighbors("local PCA needs at least q+1 = " +
                                std::to_string(params.q + 1) + " weighted points, got " +
                                std::to_string(positive));
  }
  double wsum = weights.sum();
  Vector mean = (weights.transpose() * pts).transpose() / wsum;
  Matrix centered = pts.rowwise() - mean.transpose();
  Matrix cov = centered.transpose() * (weights.asDiagonal() * centered) / wsum;

  Eigen::SelfAdjointEigenSolver<Matrix> eig(cov);
  if (eig.info() != Eigen::Success) throw EigensolverFailure("local PCA eigensolver failed");

  TangentFrame frame;
  frame.eigenvalues = eig.eigenvalues().reverse();
  frame.basis.resize(p, params.q);
  for (Index k = 0; k < params.q; ++k) {
    Vector v = eig.eigenvectors().col(p - 1 - k);
    // sign convention: the largest-magnitude component (lowest index on
    // ties) is made positive
    Index arg = 0;
    for (Index i = 1; i < p; ++i)
      if (std::abs(v(i)) > std::abs(v(arg))) arg = i;
    frame.basis.col(k) = v(arg) < 0.0 ? Vector(-v) : v;
  }
  frame.in_domain = params.rank_ok(frame.eigenvalues);
  if (params.q < p) {
    double gap = frame.eigenvalues(params.q - 1) - frame.eigenvalues(params.q);
    frame.degenerate = gap <= 1e-9 * std::max(frame.eigenvalues(0), 0.0);
  }
  return frame;
}

double aggregate_kernel(const TangentFrame& f1, const TangentFrame& f2, double k_e) {
  if (k_e == 0.0) return 0.0;
  double det = (f1.basis.transpose() * f2.basis).determinant();
  return k_e * det * det;
}

namespace {

/// Ball membership lists (self included), strict radius test.
std::vector<std::vector<Index>> neighbor_balls(const Matrix& points, double eps1) {
  const Index n = points.rows();
  const double r2 = eps1 * eps1;
  std::vector<std::vector<Index>> balls(n);
  par::for_each_index(n, [&](std::ptrdiff_t i) {
    for (Index j = 0; j < n; ++j) {
      if ((points.row(j) - points.row(Index(i))).squaredNorm() < r2) balls[i].push_back(j);
    }
  });
  return balls;
}

struct Components {
  Index count = 0;
  std::vector<Index> label;
};

Components connected_components(Index n, const std::vector<std::vector<std::pair<Index, double>>>& adj) {
  Components c;
  c.label.assign(n, -1);
  std::vector<Index> stack;
  for (Index s = 0; s < n; ++s) {
    if (c.label[s] != -1) continue;
    stack.push_back(s);
    c.label[s] = c.count;
    while (!stack.empty()) {
      Index u = stack.back();
      stack.pop_back();
      for (auto& [v, w] : adj[u]) {
        if (w > 0.0 && c.label[v] == -1) {
          c.label[v] = c.count;
          stack.push_back(v);
        }
      }
    }
    ++c.count;
  }
  return c;
}

}  // namespace

Matrix pair_weights_reference(const Matrix& points, const std::vector<TangentFrame>& frames,
                              const HyperParams& params) {
  const Index n = points.rows();
  Matrix w = Matrix::Zero(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j) {
      double k_e = euclidean_kernel(points.row(i).transpose(), points.row(j).transpose(), params);
      double k = aggregate_kernel(frames[size_t(i)], frames[size_t(j)], k_e);
      w(i, j) = k;
      w(j, i) = k;
    }
  }
  return w;
}

KernelGraph assemble_graph(const Matrix& points, const std::vector<TangentFrame>& frames,
                           const HyperParams& params) {
  const Index n = points.rows();
  auto balls = neighbor_balls(points, params.eps1);
  for (Index i = 0; i < n; ++i) {
    for (Index j : balls[size_t(i)]) {
      if (j != i && (points.row(j) - points.row(i)).squaredNorm() == 0.0) {
        throw Error(ErrorKind::Data, "sample points " + std::to_string(i) + " and " +
                                         std::to_string(j) + " coincide");
      }
    }
  }

  // pair weights: each unordered pair evaluated once, rows filled in parallel
  std::vector<std::vector<std::pair<Index, double>>> upper(static_cast<size_t>(n));
  par::for_each_index(n, [&](std::ptrdiff_t i) {
    for (Index j : balls[size_t(i)]) {
      if (j <= Index(i)) continue;
      double d2 = (points.row(j) - points.row(Index(i))).squaredNorm();
      double k = aggregate_kernel(frames[size_t(i)], frames[size_t(j)],
                                  std::exp(-params.eps2 * d2));
      if (k > 0.0) upper[size_t(i)].emplace_back(j, k);
    }
  });

  std::vector<std::vector<std::pair<Index, double>>> adj(static_cast<size_t>(n));
  for (Index i = 0; i < n; ++i) {
    for (auto& [j, k] : upper[size_t(i)]) {
      adj[size_t(i)].emplace_back(j, k);
      adj[size_t(j)].emplace_back(i, k);
    }
  }

  auto comps = connected_components(n, adj);
  if (comps.count > 1) {
    std::string sample;
    for (Index i = 0, shown = 0; i < n && shown < 5; ++i) {
      if (comps.label[size_t(i)] != comps.label[0]) {
        sample += (shown ? ", " : "") + std::to_string(i);
        ++shown;
      }
    }
    throw DisconnectedGraph("kernel graph has " + std::to_string(comps.count) +
                            " components (e.g. points " + sample +
                            " are separated from point 0); increase eps1");
  }

  KernelGraph graph;
  std::vector<Eigen::Triplet<double>> trips;
  graph.row_sums = Vector::Zero(n);
  for (Index i = 0; i < n; ++i) {
    std::sort(adj[size_t(i)].begin(), adj[size_t(i)].end());
    for (auto& [j, k] : adj[size_t(i)]) {
      trips.emplace_back(int(i), int(j), k);
      graph.row_sums(i) += k;
    }
  }
  graph.weights.resize(n, n);
  graph.weights.setFromTriplets(trips.begin(), trips.end());
  graph.total = graph.row_sums.sum();
  graph.k_norm = graph.row_sums / graph.total;
  return graph;
}

Stage1Result build_kernel_graph(const Matrix& points, const HyperParams& params) {
  const Index n = points.rows();
  const Index p = points.cols();
  if (n < params.q + 2) {
    throw InvalidConfig("need at least q+2 = " + std::to_string(params.q + 2) +
                        " sample points, got " + std::to_string(n));
  }

  auto balls = neighbor_balls(points, params.eps1);
  Stage1Result out;
  out.frames.resize(size_t(n));
  std::vector<std::string> pca_errors(static_cast<size_t>(n));
  par::for_each_index(n, [&](std::ptrdiff_t i) {
    const auto& ball = balls[size_t(i)];
    Matrix pts(Index(ball.size()), p);
    Vector w(Index(ball.size()));
    for (size_t k = 0; k < ball.size(); ++k) {
      pts.row(Index(k)) = points.row(ball[k]);
      double d2 = (points.row(ball[k]) - points.row(Index(i))).squaredNorm();
      w(Index(k)) = std::exp(-params.eps2 * d2);
    }
    try {
      out.frames[size_t(i)] = local_pca(pts, w, params);
    } catch (const Error& e) {
      pca_errors[size_t(i)] = e.what();
    }
  });
  for (Index i = 0; i < n; ++i) {
    if (!pca_errors[size_t(i)].empty()) {
      throw InsufficientNeighbors("point " + std::to_string(i) + ": " + pca_errors[size_t(i)]);
    }
  }

  std::string outside;
  Index outside_count = 0;
  for (Index i = 0; i < n; ++i) {
    if (!out.frames[size_t(i)].in_domain) {
      if (outside_count < 10) outside += (outside_count ? ", " : "") + std::to_string(i);
      ++outside_count;
    }
  }
  if (outside_count > 0) {
    throw SampleOutsideDomain("rank test failed at " + std::to_string(outside_count) +
                              " sample point(s): indices " + outside +
                              (outside_count > 10 ? ", ..." : ""));
  }

  out.graph = assemble_graph(points, out.frames, params);
  return out;
}

}  // namespace gse
