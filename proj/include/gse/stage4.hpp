#pragma once

#include "gse/hyperparams.hpp"
#include "gse/types.hpp"

#include <list>
#include <memory>
#include <mutex>
#include <unordered_map>
#include <vector>

namespace gse {

/// PCA frame in the coordinate space: principal directions of the ambient
/// preimages of a coordinate neighborhood.
struct CoordFrame {
  Matrix basis;        // p x q
  Vector eigenvalues;  // length p, non-increasing
  bool in_domain = false;
};

/// Kernel weights of a coordinate point against the embedded sample.
struct CoordWeights {
  std::vector<Index> nbrs;  // sample indices inside the metric ball
  Vector k;                 // aggregate weights, aligned with nbrs
  double total = 0.0;
  std::shared_ptr<const CoordFrame> frame;
};

/// Everything needed to evaluate the reconstruction side of the model:
/// embedded sample, preimages with their tangent frames and smoothed field,
/// and per-point metric blocks.  Queries are const and thread-safe; the
/// frame cache is keyed by the preimage index set, so cached entries are
/// exact, not approximations.
class CoordinateChart {
 public:
  CoordinateChart() = default;
  CoordinateChart(Matrix y_n, Matrix points, std::vector<Matrix> frame_bases,
                  std::vector<Matrix> h_sample, std::vector<Matrix> k_v, HyperParams params);
  CoordinateChart(const CoordinateChart& other);
  CoordinateChart& operator=(const CoordinateChart& other);

  const Matrix& sample_embeddings() const { return y_n_; }
  const std::vector<Matrix>& metric_blocks() const { return k_v_; }
  const std::vector<Matrix>& field_blocks() const { return h_sample_; }

  /// Aggregate coordinate kernel against every embedded sample point:
  /// Gaussian in the per-neighbor Mahalanobis form gated at eps1^2, times
  /// the determinant-squared frame similarity.
  CoordWeights weights(const Eigen::Ref<const Vector>& y) const;

  /// Coordinate-space PCA frame at y (cached by preimage set).
  std::shared_ptr<const CoordFrame> frame(const Eigen::Ref<const Vector>& y) const;

  /// Reconstruction Jacobian G(y): the kernel average of the smoothed field
  /// projected onto the coordinate PCA subspace (polar-orthogonalized for
  /// the orthogonal variant).
  Matrix jacobian(const Eigen::Ref<const Vector>& y) const;

  /// Reconstruction g(y); uses the Jacobian form by default or the
  /// field-average form when params.reconstruct_via_field is set.
  Vector reconstruct(const Eigen::Ref<const Vector>& y) const;

 private:
  Matrix jacobian_with(const CoordWeights& w) const;

  Matrix y_n_;
  Matrix points_;
  std::vector<Matrix> frame_bases_;
  std::vector<Matrix> h_sample_;
  std::vector<Matrix> k_v_;
  HyperParams params_;

  struct VecHash {
    size_t operator()(const std::vector<Index>& v) const noexcept;
  };
  using CacheList = std::list<std::pair<std::vector<Index>, std::shared_ptr<const CoordFrame>>>;
  mutable std::mutex cache_mutex_;
  mutable CacheList cache_list_;
  mutable std::unordered_map<std::vector<Index>, CacheList::iterator, VecHash> cache_map_;
  static constexpr size_t kCacheCapacity = 256;
};

}  // namespace gse
