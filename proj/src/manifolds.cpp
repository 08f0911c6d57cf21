#include "gse/manifolds.hpp"

#include "gse/geometry.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

namespace gse {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

Matrix Manifold::tangent_basis(const Vector& b) const {
  return orthonormalize_svd(chart_jacobian(b));
}

bool Manifold::interior(const Vector& b, double margin) const {
  Matrix box = domain();
  for (Index k = 0; k < q(); ++k) {
    double w = box(k, 1) - box(k, 0);
    if (b(k) < box(k, 0) + margin * w || b(k) > box(k, 1) - margin * w) return false;
  }
  return true;
}

PointCloud sample(const Manifold& m, Index n, std::uint64_t seed) {
  if (n < 1) throw InvalidConfig("sample size must be at least 1");
  Matrix box = m.domain();
  PointCloud cloud;
  cloud.coords.resize(n, m.q());
  cloud.points.resize(n, m.p());
  Rng rng(seed);
  for (Index k = 0; k < n; ++k) {
    for (Index d = 0; d < m.q(); ++d) cloud.coords(k, d) = rng.uniform(box(d, 0), box(d, 1));
    cloud.points.row(k) = m.chart(cloud.coords.row(k).transpose()).transpose();
  }
  return cloud;
}

namespace {

class SwissRoll final : public Manifold {
 public:
  std::string name() const override { return "SwissRoll"; }
  Index q() const override { return 2; }
  Index p() const override { return 3; }
  Matrix domain() const override {
    Matrix box(2, 2);
    box << 1.5 * kPi, 4.5 * kPi, 0.0, 21.0;
    return box;
  }
  Vector chart(const Vector& b) const override {
    double t = b(0), s = b(1);
    Vector x(3);
    x << t * std::cos(t), s, t * std::sin(t);
    return x;
  }
  Matrix chart_jacobian(const Vector& b) const override {
    double t = b(0);
    Matrix j(3, 2);
    j << std::cos(t) - t * std::sin(t), 0.0,
         0.0,                           1.0,
         std::sin(t) + t * std::cos(t), 0.0;
    return j;
  }
};

/// Helix by default; with q=2 an extruded ribbon so surface readings of the
/// same figure can be exercised.
class Spiral final : public Manifold {
 public:
  explicit Spiral(Index q) : q_(q) {
    if (q != 1 && q != 2) throw InvalidConfig("Spiral supports q = 1 or q = 2");
  }
  std::string name() const override { return "Spiral"; }
  Index q() const override { return q_; }
  Index p() const override { return 3; }
  Matrix domain() const override {
    Matrix box(q_, 2);
    box.row(0) << 0.0, 6.0 * kPi;
    if (q_ == 2) box.row(1) << 0.0, 1.0;
    return box;
  }
  Vector chart(const Vector& b) const override {
    double t = b(0);
    double s = q_ == 2 ? b(1) : 0.0;
    Vector x(3);
    x << std::cos(t), std::sin(t), 0.2 * t + s;
    return x;
  }
  Matrix chart_jacobian(const Vector& b) const override {
    double t = b(0);
    Matrix j(3, q_);
    j(0, 0) = -std::sin(t);
    j(1, 0) = std::cos(t);
    j(2, 0) = 0.2;
    if (q_ == 2) {
      j(0, 1) = 0.0;
      j(1, 1) = 0.0;
      j(2, 1) = 1.0;
    }
    return j;
  }

 private:
  Index q_;
};

class AffinePlane final : public Manifold {
 public:
  explicit AffinePlane(std::uint64_t seed) {
    Rng rng(seed ^ 0xaffaffull);
    Matrix g(5, 5);
    for (Index i = 0; i < 5; ++i)
      for (Index j = 0; j < 5; ++j) g(i, j) = rng.normal();
    Eigen::HouseholderQR<Matrix> qr(g);
    Matrix qfull = qr.householderQ();
    Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (Index j = 0; j < 2; ++j) {
      double s = r(j, j) < 0.0 ? -1.0 : 1.0;
      basis_.conservativeResize(5, j + 1);
      basis_.col(j) = s * qfull.col(j);
    }
    offset_.resize(5);
    for (Index i = 0; i < 5; ++i) offset_(i) = 3.0 * rng.normal();
  }
  std::string name() const override { return "AffinePlane"; }
  Index q() const override { return 2; }
  Index p() const override { return 5; }
  Matrix domain() const override {
    Matrix box(2, 2);
    box << -2.0, 2.0, -2.0, 2.0;
    return box;
  }
  Vector chart(const Vector& b) const override { return offset_ + basis_ * b; }
  Matrix chart_jacobian(const Vector&) const override { return basis_; }

 private:
  Matrix basis_;
  Vector offset_;
};

/// Open patch of the unit upper hemisphere through the inverse stereographic
/// map from the disk: (u,v) -> (2u, 2v, 1-u^2-v^2)/(1+u^2+v^2).
class SpherePatch final : public Manifold {
 public:
  std::string name() const override { return "SpherePatch"; }
  Index q() const override { return 2; }
  Index p() const override { return 3; }
  Matrix domain() const override {
    Matrix box(2, 2);
    box << -0.6, 0.6, -0.6, 0.6;
    return box;
  }
  Vector chart(const Vector& b) const override {
    double u = b(0), v = b(1);
    double d = 1.0 + u * u + v * v;
    Vector x(3);
    x << 2.0 * u / d, 2.0 * v / d, (1.0 - u * u - v * v) / d;
    return x;
  }
  Matrix chart_jacobian(const Vector& b) const override {
    double u = b(0), v = b(1);
    double d = 1.0 + u * u + v * v;
    double d2 = d * d;
    Matrix j(3, 2);
    j << 2.0 * (1.0 - u * u + v * v) / d2, -4.0 * u * v / d2,
         -4.0 * u * v / d2,                2.0 * (1.0 + u * u - v * v) / d2,
         -4.0 * u / d2,                    -4.0 * v / d2;
    return j;
  }
};

}  // namespace

std::unique_ptr<Manifold> make_manifold(const std::string& name, Index q_override,
                                        std::uint64_t gen_seed) {
  std::string key;
  for (char c : name) key.push_back(char(std::tolower(static_cast<unsigned char>(c))));
  if (key == "swissroll") return std::make_unique<SwissRoll>();
  if (key == "spiral") return std::make_unique<Spiral>(q_override > 0 ? q_override : 1);
  if (key == "affineplane") return std::make_unique<AffinePlane>(gen_seed);
  if (key == "spherepatch") return std::make_unique<SpherePatch>();
  throw InvalidConfig("unknown manifold '" + name +
                      "' (expected SwissRoll, Spiral, AffinePlane, or SpherePatch)");
}

}  // namespace gse
