#include "gse/model.hpp"

#include "gse/errors.hpp"
#include "gse/geometry.hpp"
#include "gse/parallel.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

namespace gse {

namespace {

using SpMat = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// Moore-Penrose inverse with a relative singular-value cutoff; sets
/// *clipped when any direction was dropped.
Matrix pinv_with_cutoff(const Matrix& v, double rel_cutoff, bool* clipped) {
  Eigen::JacobiSVD<Matrix> svd(v, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vector& s = svd.singularValues();
  double smax = s(0);
  Vector inv = Vector::Zero(s.size());
  bool any = false;
  for (Index i = 0; i < s.size(); ++i) {
    if (smax > 0.0 && s(i) > rel_cutoff * smax) {
      inv(i) = 1.0 / s(i);
    } else {
      any = true;
    }
  }
  if (clipped) *clipped = any;
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

bool near_singular(const Matrix& v, double rel_cutoff) {
  Eigen::JacobiSVD<Matrix> svd(v);
  const Vector& s = svd.singularValues();
  return s(0) <= 0.0 || s(s.size() - 1) < rel_cutoff * s(0);
}

/// Kernel-smoothed alignment field at the sample points: the weighted
/// average of neighbor blocks through the cross-Gram, self term included
/// with unit weight.  The orthogonal variant takes the polar factor.
std::vector<Matrix> smoothed_field(const Matrix&, const std::vector<TangentFrame>& frames,
                                   const KernelGraph& graph, const AlignmentField& field,
                                   const HyperParams& params) {
  const Index n = graph.weights.rows();
  const bool ortho = params.variant == Variant::Ogse;
  const std::vector<Matrix>& src = ortho ? field.v_ortho : field.v_star;
  std::vector<Matrix> out(static_cast<size_t>(n));
  std::vector<char> failed(size_t(n), 0);
  par::for_each_index(n, [&](std::ptrdiff_t ii) {
    Index i = Index(ii);
    Matrix acc = src[size_t(i)];  // self term: S_ii = I, weight 1
    for (SpMat::InnerIterator it(graph.weights, i); it; ++it) {
      Index j = it.col();
      acc += it.value() *
             (frames[size_t(i)].basis.transpose() * frames[size_t(j)].basis * src[size_t(j)]);
    }
    acc /= graph.row_sums(i) + 1.0;
    if (ortho) {
      try {
        out[size_t(i)] = orthonormalize_svd(acc);
      } catch (const Error&) {
        failed[size_t(i)] = 1;
      }
    } else {
      out[size_t(i)] = acc;
    }
  });
  for (Index i = 0; i < n; ++i) {
    if (failed[size_t(i)]) {
      throw RankDeficient("smoothed alignment matrix is rank deficient at sample point " +
                          std::to_string(i));
    }
  }
  return out;
}

/// Sample embeddings y_i: the out-of-sample formula evaluated at the sample
/// points with the stored frames and the self term included.
Matrix compute_sample_embeddings(const Matrix& points, const std::vector<TangentFrame>& frames,
                         const KernelGraph& graph, const std::vector<Matrix>& v_sample,
                         const Matrix& h, const HyperParams& params, Index* clipped_count) {
  const Index n = points.rows();
  const Index q = params.q;
  Matrix y(n, q);
  std::vector<char> clipped(size_t(n), 0);
  par::for_each_index(n, [&](std::ptrdiff_t ii) {
    Index i = Index(ii);
    double denom = graph.row_sums(i) + 1.0;
    Vector h_knr = h.row(i).transpose() / denom;
    Vector x_knr = points.row(i).transpose() / denom;
    for (SpMat::InnerIterator it(graph.weights, i); it; ++it) {
      h_knr += (it.value() / denom) * h.row(it.col()).transpose();
      x_knr += (it.value() / denom) * points.row(it.col()).transpose();
    }
    Vector c = frames[size_t(i)].basis.transpose() * (points.row(i).transpose() - x_knr);
    if (params.variant == Variant::Ogse) {
      y.row(i) = (h_knr + v_sample[size_t(i)].transpose() * c).transpose();
    } else {
      bool clip = false;
      Matrix vinv = pinv_with_cutoff(v_sample[size_t(i)], params.v_cutoff, &clip);
      clipped[size_t(i)] = clip ? 1 : 0;
      y.row(i) = (h_knr + vinv * c).transpose();
    }
  });
  if (clipped_count) {
    *clipped_count = 0;
    for (char c : clipped) *clipped_count += c;
  }
  return y;
}

}  // namespace

GseModel GseModel::assemble(Matrix points, HyperParams params, std::vector<TangentFrame> frames,
                            AlignmentField alignment, Matrix h, Matrix y_n, FitSummary summary) {
  GseModel m;
  m.points_ = std::move(points);
  m.params_ = std::move(params);
  m.frames_ = std::move(frames);
  m.alignment_ = std::move(alignment);
  m.h_ = std::move(h);
  m.y_n_ = std::move(y_n);
  m.summary_ = std::move(summary);
  m.finalize();
  return m;
}

void GseModel::finalize() {
  const Index n = points_.rows();
  graph_ = assemble_graph(points_, frames_, params_);
  v_sample_ = smoothed_field(points_, frames_, graph_, alignment_, params_);

  std::vector<Matrix> bases(static_cast<size_t>(n)), h_sample(static_cast<size_t>(n)), k_v(static_cast<size_t>(n));
  for (Index i = 0; i < n; ++i) {
    bases[size_t(i)] = frames_[size_t(i)].basis;
    h_sample[size_t(i)] = frames_[size_t(i)].basis * v_sample_[size_t(i)];
    k_v[size_t(i)] = params_.variant == Variant::Ogse
                         ? Matrix::Identity(params_.q, params_.q)
                         : Matrix(v_sample_[size_t(i)].transpose() * v_sample_[size_t(i)]);
  }
  chart_ = CoordinateChart(y_n_, points_, std::move(bases), std::move(h_sample), std::move(k_v),
                           params_);
  summary_.n = n;
  summary_.p = points_.cols();
}

GseModel GseModel::fit(const Matrix& points, const HyperParams& params) {
  HyperParams rp = params.resolved(points);
  Stage1Result s1 = build_kernel_graph(points, rp);
  AlignmentField field = solve_alignment(s1.frames, s1.graph, rp);
  if (rp.variant == Variant::Ogse) {
    solve_alignment_orthogonal(s1.frames, s1.graph, rp, field);
  }
  std::vector<Matrix> vs = smoothed_field(points, s1.frames, s1.graph, field, rp);
  EmbeddingSet emb = solve_embedding(points, s1.frames, s1.graph, vs, rp);
  Index clipped = 0;
  Matrix y_n = compute_sample_embeddings(points, s1.frames, s1.graph, vs, emb.h, rp, &clipped);

  FitSummary sum;
  sum.delta_v = field.delta_v;
  sum.delta_h = emb.delta_h;
  sum.delta_h_tangent = emb.delta_h_tangent;
  sum.ogse_dropped = emb.ogse_dropped;
  sum.ogse_iterations = field.ogse_iterations;
  sum.ogse_converged = field.ogse_converged;
  if (field.eigenvalues.size() > rp.q) {
    sum.spectral_gap = field.eigenvalues(rp.q - 1) - field.eigenvalues(rp.q);
  }
  for (const auto& f : s1.frames) sum.degenerate_frames += f.degenerate ? 1 : 0;
  if (field.spectral_gap_warning) {
    sum.warnings.push_back("alignment spectrum has no clear gap after the first q eigenvalues; "
                           "the aligned field is not unique");
  }
  if (rp.variant == Variant::Ogse && !field.ogse_converged) {
    sum.warnings.push_back("orthogonal alignment stopped at the sweep limit before reaching "
                           "the requested tolerance");
  }
  if (clipped > 0) {
    sum.warnings.push_back("near-singular alignment matrix at " + std::to_string(clipped) +
                           " sample point(s); pseudo-inverse used");
  }
  if (sum.degenerate_frames > 0) {
    sum.warnings.push_back(std::to_string(sum.degenerate_frames) +
                           " local PCA frame(s) have nearly tied eigenvalues at the cut");
  }
  return assemble(points, std::move(rp), std::move(s1.frames), std::move(field),
                  std::move(emb.h), std::move(y_n), std::move(sum));
}

GseModel::Query GseModel::query(const Eigen::Ref<const Vector>& x) const {
  const Index n = points_.rows();
  const Index p = points_.cols();
  if (x.size() != p) {
    throw DimensionMismatch("query point has dimension " + std::to_string(x.size()) +
                            ", model expects " + std::to_string(p));
  }
  const double r2 = params_.eps1 * params_.eps1;

  Query qr;
  std::vector<double> d2s;
  for (Index j = 0; j < n; ++j) {
    double d2 = (x - points_.row(j).transpose()).squaredNorm();
    if (d2 < r2) {
      qr.nbrs.push_back(j);
      d2s.push_back(d2);
    }
  }
  if (qr.nbrs.empty()) {
    throw IsolatedPoint("query point has no sample neighbors within eps1");
  }

  // local PCA over the sample neighbors in the ball, Gaussian weighted; the
  // query itself is not a sample point, so it contributes no PCA row (at a
  // sample point the coincident neighbor enters with weight one and the two
  // conventions agree)
  Matrix pts(Index(qr.nbrs.size()), p);
  Vector w(Index(qr.nbrs.size()));
  for (size_t t = 0; t < qr.nbrs.size(); ++t) {
    pts.row(Index(t)) = points_.row(qr.nbrs[t]);
    w(Index(t)) = std::exp(-params_.eps2 * d2s[t]);
  }
  qr.field.frame = local_pca(pts, w, params_);
  if (!qr.field.frame.in_domain) {
    throw OutsideDomain("query point fails the local rank test (outside the chart domain)");
  }

  qr.k.resize(Index(qr.nbrs.size()));
  qr.cross.resize(qr.nbrs.size());
  for (size_t t = 0; t < qr.nbrs.size(); ++t) {
    qr.cross[t] = qr.field.frame.basis.transpose() * frames_[size_t(qr.nbrs[t])].basis;
    double det = qr.cross[t].determinant();
    qr.k(Index(t)) = std::exp(-params_.eps2 * d2s[t]) * det * det;
  }
  qr.total = qr.k.sum();
  if (qr.total <= 0.0) {
    throw IsolatedPoint("all kernel weights vanish at the query point");
  }

  Matrix acc = Matrix::Zero(params_.q, params_.q);
  const bool ortho = params_.variant == Variant::Ogse;
  const std::vector<Matrix>& src = ortho ? alignment_.v_ortho : alignment_.v_star;
  for (size_t t = 0; t < qr.nbrs.size(); ++t) {
    acc += (qr.k(Index(t)) / qr.total) * (qr.cross[t] * src[size_t(qr.nbrs[t])]);
  }
  qr.field.v = ortho ? orthonormalize_svd(acc) : acc;
  qr.field.near_singular = near_singular(qr.field.v, params_.v_cutoff);
  qr.field.h = qr.field.frame.basis * qr.field.v;
  return qr;
}

GseModel::Field GseModel::tangent_field(const Eigen::Ref<const Vector>& x) const {
  return query(x).field;
}

Vector GseModel::embed(const Eigen::Ref<const Vector>& x) const {
  Query qr = query(x);
  Vector h_knr = Vector::Zero(params_.q);
  Vector x_knr = Vector::Zero(points_.cols());
  for (size_t t = 0; t < qr.nbrs.size(); ++t) {
    double kn = qr.k(Index(t)) / qr.total;
    h_knr += kn * h_.row(qr.nbrs[t]).transpose();
    x_knr += kn * points_.row(qr.nbrs[t]).transpose();
  }
  Vector c = qr.field.frame.basis.transpose() * (x - x_knr);
  if (params_.variant == Variant::Ogse) {
    return h_knr + qr.field.v.transpose() * c;
  }
  return h_knr + pinv_with_cutoff(qr.field.v, params_.v_cutoff, nullptr) * c;
}

Matrix GseModel::embed_jacobian(const Eigen::Ref<const Vector>& x) const {
  Query qr = query(x);
  if (params_.variant == Variant::Ogse) {
    return qr.field.h.transpose();
  }
  return pinv_with_cutoff(qr.field.v, params_.v_cutoff, nullptr) *
         qr.field.frame.basis.transpose();
}

Vector GseModel::reconstruct(const Eigen::Ref<const Vector>& y) const {
  return chart_.reconstruct(y);
}

Matrix GseModel::reconstruct_jacobian(const Eigen::Ref<const Vector>& y) const {
  return chart_.jacobian(y);
}

}  // namespace gse
