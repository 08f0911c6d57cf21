#include "gse/geometry.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <string>

namespace gse {

Subspace::Subspace(Matrix basis) : basis_(std::move(basis)) {
  if (basis_.rows() < 1 || basis_.cols() < 1 || basis_.cols() > basis_.rows()) {
    throw DimensionMismatch("subspace basis must be p x q with 1 <= q <= p, got " +
                            std::to_string(basis_.rows()) + " x " +
                            std::to_string(basis_.cols()));
  }
  Matrix gram = basis_.transpose() * basis_;
  gram.diagonal().array() -= 1.0;
  if (gram.norm() >= 1e-10) {
    throw RankDeficient("subspace basis is not orthonormal (||Q^T Q - I|| = " +
                        std::to_string(gram.norm()) + ")");
  }
}

Matrix orthonormalize_svd(const Matrix& a, double rel_tol) {
  if (a.rows() < a.cols() || a.cols() < 1) {
    throw DimensionMismatch("orthonormalize_svd needs a tall p x q input");
  }
  Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  double smax = sv(0);
  double smin = sv(sv.size() - 1);
  if (smax <= 0.0 || smin <= rel_tol * smax) {
    throw RankDeficient("orthonormalize_svd input is rank deficient (sigma_min/sigma_max = " +
                        std::to_string(smax > 0.0 ? smin / smax : 0.0) + ")");
  }
  return svd.matrixU() * svd.matrixV().transpose();
}

namespace {

void check_same_ambient(const Subspace& a, const Subspace& b) {
  if (a.p() != b.p()) {
    throw DimensionMismatch("subspaces live in different ambient spaces (" +
                            std::to_string(a.p()) + " vs " + std::to_string(b.p()) + ")");
  }
}

void check_same_dim(const Subspace& a, const Subspace& b) {
  check_same_ambient(a, b);
  if (a.q() != b.q()) {
    throw DimensionMismatch("subspace dimensions differ (" + std::to_string(a.q()) +
                            " vs " + std::to_string(b.q()) + ")");
  }
}

}  // namespace

Vector principal_angles(const Subspace& a, const Subspace& b) {
  check_same_ambient(a, b);
  Matrix cross = a.basis().transpose() * b.basis();
  Eigen::JacobiSVD<Matrix> svd(cross);
  Vector cosines = svd.singularValues();  // non-increasing
  Vector angles(cosines.size());
  for (Index i = 0; i < cosines.size(); ++i) {
    angles(i) = std::acos(std::clamp(cosines(i), 0.0, 1.0));
  }
  return angles;  // non-decreasing since acos is decreasing
}

double projection_2norm_distance(const Subspace& a, const Subspace& b) {
  check_same_dim(a, b);
  Matrix cross = a.basis().transpose() * b.basis();
  Eigen::JacobiSVD<Matrix> svd(cross);
  double cmin = std::clamp(svd.singularValues()(a.q() - 1), 0.0, 1.0);
  return std::sqrt(std::max(0.0, 1.0 - cmin * cmin));
}

double binet_cauchy_kernel(const Subspace& a, const Subspace& b) {
  check_same_dim(a, b);
  double det = (a.basis().transpose() * b.basis()).determinant();
  return det * det;
}

double binet_cauchy_distance(const Subspace& a, const Subspace& b) {
  return std::sqrt(std::max(0.0, 1.0 - binet_cauchy_kernel(a, b)));
}

Matrix projector(const Subspace& s, bool complement) {
  Matrix pi = s.basis() * s.basis().transpose();
  if (complement) {
    pi = -pi;
    pi.diagonal().array() += 1.0;
  }
  return pi;
}

}  // namespace gse
