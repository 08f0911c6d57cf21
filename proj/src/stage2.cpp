#include "gse/stage2.hpp"

#include "gse/errors.hpp"
#include "gse/geometry.hpp"
#include "gse/parallel.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace gse {

namespace {

struct Edge {
  Index j;
  double k;   // kernel weight K_ij
  Matrix s;   // cross-Gram Q_i^T Q_j
};

/// Per-row edge lists with cross-Gram blocks; each unordered pair is
/// computed once and mirrored by exact transpose.
std::vector<std::vector<Edge>> build_edges(const std::vector<TangentFrame>& frames,
                                           const KernelGraph& graph) {
  const Index n = graph.weights.rows();
  std::vector<std::vector<Edge>> edges(static_cast<size_t>(n));
  for (Index i = 0; i < n; ++i) {
    for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(graph.weights, i); it;
         ++it) {
      Index j = it.col();
      if (j <= i) continue;
      Matrix s = frames[size_t(i)].basis.transpose() * frames[size_t(j)].basis;
      edges[size_t(i)].push_back({j, it.value(), s});
      edges[size_t(j)].push_back({i, it.value(), s.transpose()});
    }
  }
  for (auto& row : edges) {
    std::sort(row.begin(), row.end(), [](const Edge& a, const Edge& b) { return a.j < b.j; });
  }
  return edges;
}

/// Applies the symmetric normalized operator: out_i = sum_j c_ij S_ij x_j
/// with c_ij = (K_ij / K_total) / sqrt(m_i m_j), m the normalized row
/// masses.  Rows are independent, so the loop parallelizes bit-identically.
Matrix apply_operator(const std::vector<std::vector<Edge>>& edges, const KernelGraph& graph,
                      Index q, const Matrix& x) {
  const Index n = Index(edges.size());
  Matrix out = Matrix::Zero(x.rows(), x.cols());
  par::for_each_index(n, [&](std::ptrdiff_t i) {
    double mi = graph.k_norm(Index(i));
    auto block = out.middleRows(Index(i) * q, q);
    for (const Edge& e : edges[size_t(i)]) {
      double c = e.k / (graph.total * std::sqrt(mi * graph.k_norm(e.j)));
      block += c * (e.s * x.middleRows(e.j * q, q));
    }
  });
  return out;
}

void fix_column_signs(Matrix& w) {
  for (Index c = 0; c < w.cols(); ++c) {
    Index arg = 0;
    for (Index r = 1; r < w.rows(); ++r)
      if (std::abs(w(r, c)) > std::abs(w(arg, c))) arg = r;
    if (w(arg, c) < 0.0) w.col(c) = -w.col(c);
  }
}

/// Top (q+1) eigenpairs of the dense normalized operator.
void dense_top_eigs(const std::vector<std::vector<Edge>>& edges, const KernelGraph& graph,
                    Index q, Matrix& vectors, Vector& values) {
  const Index n = Index(edges.size());
  const Index nq = n * q;
  Matrix m = Matrix::Zero(nq, nq);
  for (Index i = 0; i < n; ++i) {
    double mi = graph.k_norm(i);
    for (const Edge& e : edges[size_t(i)]) {
      double c = e.k / (graph.total * std::sqrt(mi * graph.k_norm(e.j)));
      m.block(i * q, e.j * q, q, q) = c * e.s;
    }
  }
  m = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(m);
  if (eig.info() != Eigen::Success) throw EigensolverFailure("dense alignment eigensolver failed");
  const Index want = std::min<Index>(q + 1, nq);
  values.resize(want);
  vectors.resize(nq, q);
  for (Index k = 0; k < want; ++k) values(k) = eig.eigenvalues()(nq - 1 - k);
  for (Index k = 0; k < q; ++k) vectors.col(k) = eig.eigenvectors().col(nq - 1 - k);
  fix_column_signs(vectors);
}

/// Block orthogonal iteration on the shifted operator (spectrum lies in
/// [-1, 1], so the +I shift makes it PSD with the same top eigenvectors).
void iterative_top_eigs(const std::vector<std::vector<Edge>>& edges, const KernelGraph& graph,
                        Index q, Matrix& vectors, Vector& values) {
  const Index n = Index(edges.size());
  const Index nq = n * q;
  const Index s = std::min<Index>(nq, q + 3);
  Rng rng(0x51ee9u);
  Matrix x(nq, s);
  for (Index i = 0; i < nq; ++i)
    for (Index j = 0; j < s; ++j) x(i, j) = rng.normal();
  Eigen::HouseholderQR<Matrix> qr0(x);
  x = qr0.householderQ() * Matrix::Identity(nq, s);

  Matrix ritz_vecs;
  Vector ritz_vals;
  const int max_iter = 2000;
  for (int iter = 0; iter < max_iter; ++iter) {
    Matrix ax = apply_operator(edges, graph, q, x);
    Matrix t = x.transpose() * ax;
    t = 0.5 * (t + t.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> small(t);
    Vector vals(s);
    Matrix rot(s, s);
    for (Index k = 0; k < s; ++k) {
      vals(k) = small.eigenvalues()(s - 1 - k);
      rot.col(k) = small.eigenvectors().col(s - 1 - k);
    }
    ritz_vecs = x * rot;
    ritz_vals = vals;
    const Index want = std::min<Index>(q + 1, s);
    Matrix resid = ax * rot.leftCols(want) - ritz_vecs.leftCols(want) * vals.head(want).asDiagonal();
    if (resid.norm() < 1e-11 * std::max(1.0, std::abs(vals(0))) * std::sqrt(double(want))) break;
    if (iter == max_iter - 1) {
      throw EigensolverFailure("block iteration did not converge after " +
                               std::to_string(max_iter) + " sweeps");
    }
    // power step on the shifted operator, then re-orthonormalize
    Matrix y = ax + x;
    Eigen::HouseholderQR<Matrix> qr(y);
    x = qr.householderQ() * Matrix::Identity(nq, s);
  }
  values = ritz_vals.head(std::min<Index>(q + 1, s));
  vectors = ritz_vecs.leftCols(q);
  fix_column_signs(vectors);
}

}  // namespace

double alignment_residual(const std::vector<TangentFrame>& frames, const KernelGraph& graph,
                          const std::vector<Matrix>& v) {
  const Index n = graph.weights.rows();
  double sum = 0.0;
  for (Index i = 0; i < n; ++i) {
    for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(graph.weights, i); it;
         ++it) {
      Index j = it.col();
      if (j <= i) continue;
      sum += it.value() *
             (frames[size_t(i)].basis * v[size_t(i)] - frames[size_t(j)].basis * v[size_t(j)])
                 .squaredNorm();
    }
  }
  return sum / graph.total;
}

AlignmentField solve_alignment(const std::vector<TangentFrame>& frames, const KernelGraph& graph,
                               const HyperParams& params) {
  const Index n = graph.weights.rows();
  const Index q = params.q;
  auto edges = build_edges(frames, graph);

  Matrix vectors;
  Vector values;
  if (n * q <= params.dense_eig_limit) {
    dense_top_eigs(edges, graph, q, vectors, values);
  } else {
    iterative_top_eigs(edges, graph, q, vectors, values);
  }

  AlignmentField field;
  field.eigenvalues = values;
  if (values.size() > q) {
    field.spectral_gap_warning = values(q - 1) - values(q) < 1e-10 * std::max(values(0), 1e-300);
  }
  field.v_star.resize(size_t(n));
  for (Index i = 0; i < n; ++i) {
    // undo the mass scaling so the stacked field satisfies the constraint
    // V^T Phi0 V = I
    field.v_star[size_t(i)] = vectors.middleRows(i * q, q) / std::sqrt(graph.k_norm(i));
  }
  field.delta_v = alignment_residual(frames, graph, field.v_star);
  return field;
}

void solve_alignment_orthogonal(const std::vector<TangentFrame>& frames, const KernelGraph& graph,
                                const HyperParams& params, AlignmentField& field) {
  const Index n = graph.weights.rows();
  const Index q = params.q;
  auto edges = build_edges(frames, graph);

  // Breadth-first propagation along the kernel graph seeds an orientation-
  // coherent field: each new point takes the polar transport of its parent.
  // Coordinate ascent from an incoherent start (for example the polar factor
  // of a rank-deficient unconstrained field) gets stuck at reflection walls
  // that no amount of local sweeping removes.
  field.v_ortho.assign(size_t(n), Matrix());
  {
    std::vector<char> seen(size_t(n), 0);
    std::vector<Index> queue;
    queue.reserve(size_t(n));
    queue.push_back(0);
    seen[0] = 1;
    field.v_ortho[0] = Matrix::Identity(q, q);
    for (size_t head = 0; head < queue.size(); ++head) {
      Index i = queue[head];
      for (const Edge& e : edges[size_t(i)]) {
        if (seen[size_t(e.j)]) continue;
        seen[size_t(e.j)] = 1;
        field.v_ortho[size_t(e.j)] = orthonormalize_svd(e.s.transpose() * field.v_ortho[size_t(i)]);
        queue.push_back(e.j);
      }
    }
    if (queue.size() != size_t(n)) {
      throw DisconnectedGraph("kernel graph lost connectivity during alignment");
    }
  }

  auto objective = [&]() {
    double sum = 0.0;
    for (Index i = 0; i < n; ++i) {
      for (const Edge& e : edges[size_t(i)]) {
        sum += e.k * (field.v_ortho[size_t(i)].transpose() * e.s * field.v_ortho[size_t(e.j)]).trace();
      }
    }
    return sum / graph.total;
  };

  field.ogse_objective.clear();
  field.ogse_objective.push_back(objective());
  field.ogse_converged = false;
  field.ogse_iterations = 0;
  for (int sweep = 1; sweep <= params.ogse_max_iter; ++sweep) {
    double max_change = 0.0;
    for (Index i = 0; i < n; ++i) {
      Matrix acc = Matrix::Zero(q, q);
      for (const Edge& e : edges[size_t(i)]) acc += e.k * (e.s * field.v_ortho[size_t(e.j)]);
      Matrix next = orthonormalize_svd(acc);
      max_change = std::max(max_change, (next - field.v_ortho[size_t(i)]).norm());
      field.v_ortho[size_t(i)] = std::move(next);
    }
    double obj = objective();
    double prev = field.ogse_objective.back();
    if (obj < prev - 1e-10 * std::max(1.0, std::abs(prev))) {
      throw EigensolverFailure("orthogonal alignment objective decreased (sweep " +
                               std::to_string(sweep) + ")");
    }
    field.ogse_objective.push_back(obj);
    field.ogse_iterations = sweep;
    if (max_change < params.ogse_tol) {
      field.ogse_converged = true;
      break;
    }
  }
  field.delta_v = alignment_residual(frames, graph, field.v_ortho);
}

}  // namespace gse
