#include "gse/stage4.hpp"

#include "gse/errors.hpp"
#include "gse/geometry.hpp"
#include "gse/stage1.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <string>

namespace gse {

size_t CoordinateChart::VecHash::operator()(const std::vector<Index>& v) const noexcept {
  size_t h = 1469598103934665603ull;
  for (Index x : v) {
    h ^= size_t(x);
    h *= 1099511628211ull;
  }
  return h;
}

CoordinateChart::CoordinateChart(Matrix y_n, Matrix points, std::vector<Matrix> frame_bases,
                                 std::vector<Matrix> h_sample, std::vector<Matrix> k_v,
                                 HyperParams params)
    : y_n_(std::move(y_n)),
      points_(std::move(points)),
      frame_bases_(std::move(frame_bases)),
      h_sample_(std::move(h_sample)),
      k_v_(std::move(k_v)),
      params_(std::move(params)) {}

CoordinateChart::CoordinateChart(const CoordinateChart& other)
    : y_n_(other.y_n_),
      points_(other.points_),
      frame_bases_(other.frame_bases_),
      h_sample_(other.h_sample_),
      k_v_(other.k_v_),
      params_(other.params_) {}

CoordinateChart& CoordinateChart::operator=(const CoordinateChart& other) {
  if (this != &other) {
    y_n_ = other.y_n_;
    points_ = other.points_;
    frame_bases_ = other.frame_bases_;
    h_sample_ = other.h_sample_;
    k_v_ = other.k_v_;
    params_ = other.params_;
    std::lock_guard<std::mutex> lock(cache_mutex_);
    cache_list_.clear();
    cache_map_.clear();
  }
  return *this;
}

std::shared_ptr<const CoordFrame> CoordinateChart::frame(
    const Eigen::Ref<const Vector>& y) const {
  return weights(y).frame;
}

CoordWeights CoordinateChart::weights(const Eigen::Ref<const Vector>& y) const {
  const Index n = y_n_.rows();
  const Index q = y_n_.cols();
  if (y.size() != q) {
    throw DimensionMismatch("coordinate point has dimension " + std::to_string(y.size()) +
                            ", chart expects " + std::to_string(q));
  }
  CoordWeights w;
  std::vector<double> k_e;
  const double r2 = params_.eps1 * params_.eps1;
  for (Index j = 0; j < n; ++j) {
    Vector d = y - y_n_.row(j).transpose();
    double quad = d.dot(k_v_[size_t(j)] * d);
    if (quad < r2) {
      w.nbrs.push_back(j);
      k_e.push_back(std::exp(-params_.eps2 * quad));
    }
  }
  if (w.nbrs.empty()) {
    throw EmptyNeighborhood("no embedded sample points near the coordinate point");
  }
  if (Index(w.nbrs.size()) < params_.q + 1) {
    throw InsufficientNeighbors("coordinate PCA needs at least q+1 = " +
                                std::to_string(params_.q + 1) + " preimages, got " +
                                std::to_string(w.nbrs.size()));
  }

  // preimage PCA, cached by the index set
  {
    std::lock_guard<std::mutex> lock(cache_mutex_);
    auto hit = cache_map_.find(w.nbrs);
    if (hit != cache_map_.end()) {
      cache_list_.splice(cache_list_.begin(), cache_list_, hit->second);
      w.frame = cache_list_.front().second;
    }
  }
  if (!w.frame) {
    Matrix pts(Index(w.nbrs.size()), points_.cols());
    for (size_t t = 0; t < w.nbrs.size(); ++t) pts.row(Index(t)) = points_.row(w.nbrs[t]);
    Vector ones = Vector::Ones(pts.rows());
    TangentFrame f = local_pca(pts, ones, params_);
    auto cf = std::make_shared<CoordFrame>();
    cf->basis = f.basis;
    cf->eigenvalues = f.eigenvalues;
    cf->in_domain = f.in_domain;
    std::lock_guard<std::mutex> lock(cache_mutex_);
    auto hit = cache_map_.find(w.nbrs);
    if (hit != cache_map_.end()) {
      cache_list_.splice(cache_list_.begin(), cache_list_, hit->second);
      w.frame = cache_list_.front().second;
    } else {
      cache_list_.emplace_front(w.nbrs, cf);
      cache_map_[w.nbrs] = cache_list_.begin();
      if (cache_list_.size() > kCacheCapacity) {
        cache_map_.erase(cache_list_.back().first);
        cache_list_.pop_back();
      }
      w.frame = cf;
    }
  }
  if (!w.frame->in_domain) {
    throw OutsideDomain("coordinate point is outside the reconstruction domain "
                        "(preimage rank test failed)");
  }

  w.k.resize(Index(w.nbrs.size()));
  for (size_t t = 0; t < w.nbrs.size(); ++t) {
    double det = (w.frame->basis.transpose() * frame_bases_[size_t(w.nbrs[t])]).determinant();
    w.k(Index(t)) = k_e[t] * det * det;
  }
  w.total = w.k.sum();
  if (w.total <= 0.0) {
    throw EmptyNeighborhood("all coordinate kernel weights vanish at the query point");
  }
  return w;
}

Matrix CoordinateChart::jacobian_with(const CoordWeights& w) const {
  const Index p = points_.cols();
  const Index q = y_n_.cols();
  Matrix mean = Matrix::Zero(p, q);
  for (size_t t = 0; t < w.nbrs.size(); ++t) {
    mean += (w.k(Index(t)) / w.total) * h_sample_[size_t(w.nbrs[t])];
  }
  Matrix g;
  if (params_.variant == Variant::Ogse) {
    g = w.frame->basis * orthonormalize_svd(w.frame->basis.transpose() * mean);
  } else {
    g = w.frame->basis * (w.frame->basis.transpose() * mean);
  }
  Eigen::JacobiSVD<Matrix> svd(g);
  double smax = svd.singularValues()(0);
  double smin = svd.singularValues()(q - 1);
  if (smax <= 0.0 || smin < 1e-8 * smax) {
    throw RankCollapse("reconstruction Jacobian collapsed to rank below q");
  }
  return g;
}

Matrix CoordinateChart::jacobian(const Eigen::Ref<const Vector>& y) const {
  return jacobian_with(weights(y));
}

Vector CoordinateChart::reconstruct(const Eigen::Ref<const Vector>& y) const {
  CoordWeights w = weights(y);
  const Index p = points_.cols();
  Vector g_knr = Vector::Zero(p);
  Vector y_bar = Vector::Zero(y_n_.cols());
  for (size_t t = 0; t < w.nbrs.size(); ++t) {
    double kn = w.k(Index(t)) / w.total;
    g_knr += kn * points_.row(w.nbrs[t]).transpose();
    y_bar += kn * y_n_.row(w.nbrs[t]).transpose();
  }
  if (params_.reconstruct_via_field) {
    Vector out = g_knr;
    for (size_t t = 0; t < w.nbrs.size(); ++t) {
      double kn = w.k(Index(t)) / w.total;
      out += kn * (h_sample_[size_t(w.nbrs[t])] * (y - y_n_.row(w.nbrs[t]).transpose()));
    }
    return out;
  }
  return g_knr + jacobian_with(w) * (y - y_bar);
}

}  // namespace gse
