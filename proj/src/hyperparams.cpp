#include "gse/hyperparams.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <vector>

namespace gse {

std::string to_string(Variant v) { return v == Variant::Gse ? "GSE" : "OGSE"; }

Variant variant_from_string(const std::string& s) {
  std::string u;
  for (char c : s) u.push_back(char(std::toupper(static_cast<unsigned char>(c))));
  if (u == "GSE") return Variant::Gse;
  if (u == "OGSE") return Variant::Ogse;
  throw InvalidConfig("unknown variant '" + s + "' (expected GSE or OGSE)");
}

double HyperParams::default_radius(const Matrix& points, Index q) {
  const Index n = points.rows();
  const Index k = std::max<Index>(2 * q + 2, 10);
  if (n < 2) throw InvalidConfig("need at least 2 points to resolve eps1");
  const Index kk = std::min<Index>(k, n - 1);
  std::vector<double> knn(n);
  std::vector<double> d2(n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) d2[j] = (points.row(j) - points.row(i)).squaredNorm();
    // distance to the kk-th nearest neighbor; position kk skips the self entry
    std::nth_element(d2.begin(), d2.begin() + kk, d2.end());
    knn[i] = std::sqrt(d2[kk]);
  }
  // nearest-rank 90th percentile
  Index rank = std::min<Index>(n - 1, Index(std::ceil(0.9 * double(n))) - 1);
  std::nth_element(knn.begin(), knn.begin() + rank, knn.end());
  return knn[rank];
}

HyperParams HyperParams::resolved(const Matrix& points) const {
  HyperParams out = *this;
  if (out.eps1 <= 0.0) out.eps1 = default_radius(points, out.q);
  if (out.eps2 < 0.0) out.eps2 = 1.0 / (out.eps1 * out.eps1);
  out.validate(points.cols());
  return out;
}

bool HyperParams::rank_ok(const Vector& eigenvalues) const {
  if (eigenvalues.size() < q) return false;
  double lq = eigenvalues(q - 1);
  if (eps3 >= 0.0) return lq > eps3;
  return lq > eps3_rel * eigenvalues(0);
}

void HyperParams::validate(Index p) const {
  if (q < 1 || q >= p) {
    throw InvalidConfig("intrinsic dimension q must satisfy 1 <= q < p (q = " +
                        std::to_string(q) + ", p = " + std::to_string(p) + ")");
  }
  if (eps1 <= 0.0) throw InvalidConfig("eps1 must be positive");
  if (eps2 < 0.0) throw InvalidConfig("eps2 must be non-negative");
  if (eps3 < 0.0 && eps3_rel <= 0.0) throw InvalidConfig("eps3_rel must be positive");
  if (ogse_max_iter < 1) throw InvalidConfig("ogse_max_iter must be at least 1");
  if (ogse_tol <= 0.0) throw InvalidConfig("ogse_tol must be positive");
  if (v_cutoff <= 0.0) throw InvalidConfig("v_cutoff must be positive");
}

}  // namespace gse
