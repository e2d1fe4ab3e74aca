#pragma once

// Concrete manifolds with closed-form geometry.

#include <Eigen/Dense>

#include <cmath>
#include <memory>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "ropt/core.hpp"
#include "ropt/rng.hpp"

namespace ropt {

namespace detail {

// sin(t)/t and sinh(t)/t without the 0/0 at the origin.
inline double sinc(double t) { return std::abs(t) < 1e-5 ? 1.0 - t * t / 6.0 : std::sin(t) / t; }
inline double sinhc(double t) { return std::abs(t) < 1e-5 ? 1.0 + t * t / 6.0 : std::sinh(t) / t; }

}  // namespace detail

// ---------------------------------------------------------------------------

class EuclideanSpace final : public Manifold {
 public:
  explicit EuclideanSpace(int n) : n_(n) {
    if (n < 1) throw std::invalid_argument("euclidean: dimension must be >= 1");
  }

  std::string name() const override { return "euclidean(" + std::to_string(n_) + ")"; }
  Eigen::Index ambient_size() const override { return n_; }
  int dimension() const override { return n_; }
  CurvatureBounds curvature() const override { return {0.0, 0.0}; }

  Vec exp_raw(const Vec& x, const Vec& v) const override { return x + v; }
  Vec log_raw(const Vec& x, const Vec& y) const override { return y - x; }
  Vec transport_raw(const Vec&, const Vec&, const Vec& v) const override { return v; }
  double inner_raw(const Vec&, const Vec& u, const Vec& v) const override { return u.dot(v); }
  double distance_raw(const Vec& x, const Vec& y) const override { return (y - x).norm(); }
  Vec project_point_raw(const Vec& x) const override { return x; }
  Vec project_tangent_raw(const Vec&, const Vec& v) const override { return v; }
  double point_residual(const Vec&) const override { return 0.0; }
  double tangent_residual(const Vec&, const Vec&) const override { return 0.0; }
  Vec origin_raw() const override { return Vec::Zero(n_); }
  Vec sample_raw(Rng& rng) const override { return ambient_normal_raw(rng); }

 private:
  int n_;
};

// ---------------------------------------------------------------------------

/// Unit sphere S^n in R^{n+1} with the round metric.
class SphereS final : public Manifold {
 public:
  /// log/transport refuse pairs with <x,y> at or below this (antipodal).
  static constexpr double kAntipodalGuard = -1.0 + 1e-10;

  explicit SphereS(int n) : n_(n) {
    if (n < 1) throw std::invalid_argument("sphere: dimension must be >= 1");
  }

  std::string name() const override { return "sphere(" + std::to_string(n_) + ")"; }
  Eigen::Index ambient_size() const override { return n_ + 1; }
  int dimension() const override { return n_; }
  CurvatureBounds curvature() const override { return {1.0, 1.0}; }
  double injectivity_radius() const override { return std::numbers::pi; }

  Vec exp_raw(const Vec& x, const Vec& v) const override {
    const double t = v.norm();
    return std::cos(t) * x + detail::sinc(t) * v;
  }

  Vec log_raw(const Vec& x, const Vec& y) const override {
    const double c = x.dot(y);
    guard_antipodal(c);
    const Vec u = y - c * x;
    const double nu = u.norm();
    if (nu == 0.0) return Vec::Zero(x.size());
    return (std::atan2(nu, c) / nu) * u;
  }

  double distance_raw(const Vec& x, const Vec& y) const override {
    const double c = x.dot(y);
    return std::atan2((y - c * x).norm(), c);
  }

  Vec transport_raw(const Vec& x, const Vec& y, const Vec& v) const override {
    const double c = x.dot(y);
    guard_antipodal(c);
    return v - (y.dot(v) / (1.0 + c)) * (x + y);
  }

  double inner_raw(const Vec&, const Vec& u, const Vec& v) const override { return u.dot(v); }
  Vec project_point_raw(const Vec& x) const override { return x / x.norm(); }
  Vec project_tangent_raw(const Vec& x, const Vec& v) const override { return v - x.dot(v) * x; }
  double point_residual(const Vec& x) const override { return std::abs(x.norm() - 1.0); }
  double tangent_residual(const Vec& x, const Vec& v) const override { return std::abs(x.dot(v)); }

  Vec origin_raw() const override {
    Vec e = Vec::Zero(n_ + 1);
    e[0] = 1.0;
    return e;
  }

  Vec sample_raw(Rng& rng) const override {
    Vec g = ambient_normal_raw(rng);
    return g / g.norm();
  }

 private:
  static void guard_antipodal(double c) {
    if (c <= kAntipodalGuard)
      throw DomainError("sphere: points are antipodal, minimizing geodesic is not unique");
  }

  int n_;
};

// ---------------------------------------------------------------------------

/// Hyperbolic space H^n as the upper sheet of <x,x>_M = -1 in R^{n+1};
/// the last coordinate is the time-like one.
class HyperbolicH final : public Manifold {
 public:
  explicit HyperbolicH(int n) : n_(n) {
    if (n < 1) throw std::invalid_argument("hyperbolic: dimension must be >= 1");
  }

  std::string name() const override { return "hyperbolic(" + std::to_string(n_) + ")"; }
  Eigen::Index ambient_size() const override { return n_ + 1; }
  int dimension() const override { return n_; }
  CurvatureBounds curvature() const override { return {-1.0, -1.0}; }

  /// Minkowski product sum_{i<n} a_i b_i - a_n b_n.
  double minkowski(const Vec& a, const Vec& b) const {
    return a.head(n_).dot(b.head(n_)) - a[n_] * b[n_];
  }

  Vec exp_raw(const Vec& x, const Vec& v) const override {
    const double t = std::sqrt(std::max(0.0, minkowski(v, v)));
    return std::cosh(t) * x + detail::sinhc(t) * v;
  }

  Vec log_raw(const Vec& x, const Vec& y) const override {
    const double alpha = -minkowski(x, y);
    const Vec u = y - alpha * x;
    const double nu = std::sqrt(std::max(0.0, minkowski(u, u)));
    if (nu == 0.0) return Vec::Zero(x.size());
    return (distance_raw(x, y) / nu) * u;
  }

  // 2 asinh(|x - y|_M / 2) equals arccosh(-<x,y>_M) but keeps precision
  // for nearby points.
  double distance_raw(const Vec& x, const Vec& y) const override {
    const Vec w = x - y;
    return 2.0 * std::asinh(0.5 * std::sqrt(std::max(0.0, minkowski(w, w))));
  }

  Vec transport_raw(const Vec& x, const Vec& y, const Vec& v) const override {
    const double alpha = -minkowski(x, y);
    return v + (minkowski(y, v) / (1.0 + alpha)) * (x + y);
  }

  double inner_raw(const Vec&, const Vec& u, const Vec& v) const override {
    return minkowski(u, v);
  }

  Vec project_point_raw(const Vec& x) const override {
    Vec p = x;
    p[n_] = std::sqrt(1.0 + x.head(n_).squaredNorm());
    return p;
  }

  Vec project_tangent_raw(const Vec& x, const Vec& v) const override {
    return v + minkowski(x, v) * x;
  }

  double point_residual(const Vec& x) const override {
    return std::abs(minkowski(x, x) + 1.0) + (x[n_] > 0.0 ? 0.0 : 1.0);
  }

  double tangent_residual(const Vec& x, const Vec& v) const override {
    return std::abs(minkowski(x, v));
  }

  Vec origin_raw() const override {
    Vec e = Vec::Zero(n_ + 1);
    e[n_] = 1.0;
    return e;
  }

  /// exp at the origin of a uniformly oriented tangent with length in [0, 1).
  Vec sample_raw(Rng& rng) const override {
    const Vec o = origin_raw();
    Vec v = project_tangent_raw(o, ambient_normal_raw(rng));
    v *= rng.uniform() / v.norm();
    return project_point_raw(exp_raw(o, v));
  }

 private:
  int n_;
};

// ---------------------------------------------------------------------------

namespace detail {

// f applied to the eigenvalues of a symmetric matrix.
template <class F>
Mat sym_fn(const Mat& S, F f) {
  Eigen::SelfAdjointEigenSolver<Mat> es(S);
  const Vec lam = es.eigenvalues().unaryExpr(f);
  return es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().transpose();
}

inline Mat symmetrize(const Mat& A) { return 0.5 * (A + A.transpose()); }

}  // namespace detail

/// Symmetric positive definite d x d matrices with the affine-invariant
/// metric <U,V>_X = tr(X^{-1} U X^{-1} V). Coordinates are column-major.
class SPDManifold final : public Manifold {
 public:
  explicit SPDManifold(int d, double eig_min = 0.2, double eig_max = 4.5)
      : d_(d), eig_min_(eig_min), eig_max_(eig_max) {
    if (d < 1) throw std::invalid_argument("spd: dimension must be >= 1");
    if (!(eig_min > 0.0 && eig_max >= eig_min))
      throw std::invalid_argument("spd: sampling eigenvalue range must satisfy 0 < min <= max");
  }

  std::string name() const override { return "spd(" + std::to_string(d_) + ")"; }
  Eigen::Index ambient_size() const override { return static_cast<Eigen::Index>(d_) * d_; }
  int dimension() const override { return d_ * (d_ + 1) / 2; }
  /// Sectional curvature of the affine-invariant metric lies in [-1/2, 0].
  CurvatureBounds curvature() const override { return {-0.5, 0.0}; }

  int matrix_dim() const { return d_; }
  double eig_min() const { return eig_min_; }
  double eig_max() const { return eig_max_; }

  Mat as_matrix(const Vec& v) const { return Eigen::Map<const Mat>(v.data(), d_, d_); }
  Vec as_vector(const Mat& m) const { return Eigen::Map<const Vec>(m.data(), m.size()); }

  Vec exp_raw(const Vec& x, const Vec& v) const override {
    const Roots r = roots(as_matrix(x));
    const Mat W = detail::symmetrize(r.isqrt * as_matrix(v) * r.isqrt);
    const Mat E = detail::sym_fn(W, [](double l) { return std::exp(l); });
    return as_vector(detail::symmetrize(r.sqrt * E * r.sqrt));
  }

  Vec log_raw(const Vec& x, const Vec& y) const override {
    const Roots r = roots(as_matrix(x));
    const Mat W = detail::symmetrize(r.isqrt * as_matrix(y) * r.isqrt);
    const Mat L = detail::sym_fn(W, [](double l) { return std::log(l); });
    return as_vector(detail::symmetrize(r.sqrt * L * r.sqrt));
  }

  double distance_raw(const Vec& x, const Vec& y) const override {
    Eigen::GeneralizedSelfAdjointEigenSolver<Mat> ges(as_matrix(y), as_matrix(x),
                                                      Eigen::EigenvaluesOnly);
    return std::sqrt(ges.eigenvalues().array().log().square().sum());
  }

  /// E V E^T with E = (Y X^{-1})^{1/2} = X^{1/2} (X^{-1/2} Y X^{-1/2})^{1/2} X^{-1/2}.
  Vec transport_raw(const Vec& x, const Vec& y, const Vec& v) const override {
    const Roots r = roots(as_matrix(x));
    const Mat W = detail::symmetrize(r.isqrt * as_matrix(y) * r.isqrt);
    const Mat Wh = detail::sym_fn(W, [](double l) { return std::sqrt(l); });
    const Mat E = r.sqrt * Wh * r.isqrt;
    return as_vector(detail::symmetrize(E * as_matrix(v) * E.transpose()));
  }

  double inner_raw(const Vec& x, const Vec& u, const Vec& v) const override {
    Eigen::LLT<Mat> llt(as_matrix(x));
    const Mat A = llt.solve(as_matrix(u));
    const Mat B = llt.solve(as_matrix(v));
    return (A.array() * B.transpose().array()).sum();
  }

  Vec project_point_raw(const Vec& x) const override {
    return as_vector(detail::symmetrize(as_matrix(x)));
  }
  Vec project_tangent_raw(const Vec&, const Vec& v) const override {
    return as_vector(detail::symmetrize(as_matrix(v)));
  }

  double point_residual(const Vec& x) const override {
    const Mat X = as_matrix(x);
    const double asym = (X - X.transpose()).lpNorm<Eigen::Infinity>();
    Eigen::SelfAdjointEigenSolver<Mat> es(detail::symmetrize(X), Eigen::EigenvaluesOnly);
    return asym + (es.eigenvalues().minCoeff() > 0.0 ? 0.0 : 1.0);
  }

  double tangent_residual(const Vec&, const Vec& v) const override {
    const Mat V = as_matrix(v);
    return (V - V.transpose()).lpNorm<Eigen::Infinity>();
  }

  Vec origin_raw() const override { return as_vector(Mat::Identity(d_, d_)); }

  /// Q diag(lambda) Q^T with Haar-like Q and lambda uniform in [eig_min, eig_max].
  Vec sample_raw(Rng& rng) const override {
    Mat G(d_, d_);
    for (int j = 0; j < d_; ++j)
      for (int i = 0; i < d_; ++i) G(i, j) = rng.normal();
    Eigen::HouseholderQR<Mat> qr(G);
    const Mat Q = qr.householderQ();
    Vec lam(d_);
    for (int i = 0; i < d_; ++i) lam[i] = rng.uniform(eig_min_, eig_max_);
    return as_vector(detail::symmetrize(Q * lam.asDiagonal() * Q.transpose()));
  }

  Vec ambient_normal_raw(Rng& rng) const override {
    Mat G(d_, d_);
    for (int j = 0; j < d_; ++j)
      for (int i = 0; i < d_; ++i) G(i, j) = rng.normal();
    return as_vector(detail::symmetrize(G));
  }

  double logdet(const Vec& x) const {
    Eigen::LLT<Mat> llt(as_matrix(x));
    if (llt.info() != Eigen::Success) throw DomainError("spd: matrix is not positive definite");
    return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
  }

 private:
  struct Roots {
    Mat sqrt, isqrt;
  };

  static Roots roots(const Mat& X) {
    Eigen::SelfAdjointEigenSolver<Mat> es(detail::symmetrize(X));
    const Vec lam = es.eigenvalues();
    if (lam.minCoeff() <= 0.0) throw DomainError("spd: matrix is not positive definite");
    const Mat& Q = es.eigenvectors();
    return {Q * lam.cwiseSqrt().asDiagonal() * Q.transpose(),
            Q * lam.cwiseSqrt().cwiseInverse().asDiagonal() * Q.transpose()};
  }

  int d_;
  double eig_min_, eig_max_;
};

// ---------------------------------------------------------------------------

/// Riemannian product M_1 x ... x M_k; coordinates are the factor
/// coordinates concatenated in order.
class ProductManifold final : public Manifold {
 public:
  explicit ProductManifold(std::vector<ManifoldPtr> factors) : factors_(std::move(factors)) {
    if (factors_.empty()) throw std::invalid_argument("product: needs at least one factor");
    Eigen::Index off = 0;
    for (const auto& f : factors_) {
      if (!f) throw std::invalid_argument("product: null factor");
      offsets_.push_back(off);
      off += f->ambient_size();
    }
    size_ = off;
  }

  std::string name() const override {
    std::string s = "product(";
    for (std::size_t i = 0; i < factors_.size(); ++i) {
      if (i) s += ",";
      s += factors_[i]->name();
    }
    return s + ")";
  }

  Eigen::Index ambient_size() const override { return size_; }

  int dimension() const override {
    int n = 0;
    for (const auto& f : factors_) n += f->dimension();
    return n;
  }

  CurvatureBounds curvature() const override {
    CurvatureBounds b = factors_.front()->curvature();
    for (const auto& f : factors_) {
      b.kappa = std::min(b.kappa, f->curvature().kappa);
      b.K = std::max(b.K, f->curvature().K);
    }
    return b;
  }

  double injectivity_radius() const override {
    double r = std::numeric_limits<double>::infinity();
    for (const auto& f : factors_) r = std::min(r, f->injectivity_radius());
    return r;
  }

  std::size_t num_factors() const { return factors_.size(); }
  const Manifold& factor(std::size_t i) const { return *factors_.at(i); }
  ManifoldPtr factor_ptr(std::size_t i) const { return factors_.at(i); }

  Vec segment(const Vec& v, std::size_t i) const {
    return v.segment(offsets_[i], factors_[i]->ambient_size());
  }

  Point component(const Point& z, std::size_t i) const {
    require_owned(z);
    return Point{segment(z.coords, i), factors_.at(i)->id()};
  }

  TangentVector component(const TangentVector& v, std::size_t i) const {
    return TangentVector{component(v.base, i), segment(v.coords, i)};
  }

  Point join(const std::vector<Point>& parts) const {
    check_parts(parts.size());
    Vec c(size_);
    for (std::size_t i = 0; i < parts.size(); ++i) {
      factors_[i]->require_owned(parts[i]);
      c.segment(offsets_[i], factors_[i]->ambient_size()) = parts[i].coords;
    }
    return Point{c, id()};
  }

  TangentVector join(const Point& z, const std::vector<TangentVector>& parts) const {
    check_parts(parts.size());
    Vec c(size_);
    for (std::size_t i = 0; i < parts.size(); ++i) {
      factors_[i]->require_base(component(z, i), parts[i]);
      c.segment(offsets_[i], factors_[i]->ambient_size()) = parts[i].coords;
    }
    return TangentVector{z, c};
  }

  Vec exp_raw(const Vec& x, const Vec& v) const override {
    return map2([&](const Manifold& f, const Vec& a, const Vec& b) { return f.exp_raw(a, b); }, x, v);
  }
  Vec log_raw(const Vec& x, const Vec& y) const override {
    return map2([&](const Manifold& f, const Vec& a, const Vec& b) { return f.log_raw(a, b); }, x, y);
  }
  Vec transport_raw(const Vec& x, const Vec& y, const Vec& v) const override {
    Vec out(size_);
    for (std::size_t i = 0; i < factors_.size(); ++i)
      out.segment(offsets_[i], factors_[i]->ambient_size()) =
          factors_[i]->transport_raw(segment(x, i), segment(y, i), segment(v, i));
    return out;
  }
  double inner_raw(const Vec& x, const Vec& u, const Vec& v) const override {
    double s = 0.0;
    for (std::size_t i = 0; i < factors_.size(); ++i)
      s += factors_[i]->inner_raw(segment(x, i), segment(u, i), segment(v, i));
    return s;
  }
  double distance_raw(const Vec& x, const Vec& y) const override {
    double s = 0.0;
    for (std::size_t i = 0; i < factors_.size(); ++i) {
      const double d = factors_[i]->distance_raw(segment(x, i), segment(y, i));
      s += d * d;
    }
    return std::sqrt(s);
  }
  Vec project_point_raw(const Vec& x) const override {
    return map1([](const Manifold& f, const Vec& a) { return f.project_point_raw(a); }, x);
  }
  Vec project_tangent_raw(const Vec& x, const Vec& v) const override {
    return map2([](const Manifold& f, const Vec& a, const Vec& b) { return f.project_tangent_raw(a, b); },
                x, v);
  }
  double point_residual(const Vec& x) const override {
    double r = 0.0;
    for (std::size_t i = 0; i < factors_.size(); ++i)
      r = std::max(r, factors_[i]->point_residual(segment(x, i)));
    return r;
  }
  double tangent_residual(const Vec& x, const Vec& v) const override {
    double r = 0.0;
    for (std::size_t i = 0; i < factors_.size(); ++i)
      r = std::max(r, factors_[i]->tangent_residual(segment(x, i), segment(v, i)));
    return r;
  }
  Vec origin_raw() const override {
    Vec out(size_);
    for (std::size_t i = 0; i < factors_.size(); ++i)
      out.segment(offsets_[i], factors_[i]->ambient_size()) = factors_[i]->origin_raw();
    return out;
  }
  Vec sample_raw(Rng& rng) const override {
    Vec out(size_);
    for (std::size_t i = 0; i < factors_.size(); ++i)
      out.segment(offsets_[i], factors_[i]->ambient_size()) = factors_[i]->sample_raw(rng);
    return out;
  }
  Vec ambient_normal_raw(Rng& rng) const override {
    Vec out(size_);
    for (std::size_t i = 0; i < factors_.size(); ++i)
      out.segment(offsets_[i], factors_[i]->ambient_size()) = factors_[i]->ambient_normal_raw(rng);
    return out;
  }

 private:
  void check_parts(std::size_t n) const {
    if (n != factors_.size()) throw std::invalid_argument("product: wrong number of components");
  }

  template <class F>
  Vec map1(F f, const Vec& a) const {
    Vec out(size_);
    for (std::size_t i = 0; i < factors_.size(); ++i)
      out.segment(offsets_[i], factors_[i]->ambient_size()) = f(*factors_[i], segment(a, i));
    return out;
  }

  template <class F>
  Vec map2(F f, const Vec& a, const Vec& b) const {
    Vec out(size_);
    for (std::size_t i = 0; i < factors_.size(); ++i)
      out.segment(offsets_[i], factors_[i]->ambient_size()) =
          f(*factors_[i], segment(a, i), segment(b, i));
    return out;
  }

  std::vector<ManifoldPtr> factors_;
  std::vector<Eigen::Index> offsets_;
  Eigen::Index size_ = 0;
};

// ---------------------------------------------------------------------------
// Construction and sampling

enum class ManifoldKind { euclidean, sphere, hyperbolic, spd, product };

struct ManifoldSpec {
  ManifoldKind kind = ManifoldKind::euclidean;
  int dim = 1;
  double eig_min = 0.2;  // spd sampling range
  double eig_max = 4.5;
  std::vector<ManifoldSpec> factors;  // product only
};

inline ManifoldPtr make_manifold(const ManifoldSpec& spec) {
  switch (spec.kind) {
    case ManifoldKind::euclidean: return std::make_shared<EuclideanSpace>(spec.dim);
    case ManifoldKind::sphere: return std::make_shared<SphereS>(spec.dim);
    case ManifoldKind::hyperbolic: return std::make_shared<HyperbolicH>(spec.dim);
    case ManifoldKind::spd: return std::make_shared<SPDManifold>(spec.dim, spec.eig_min, spec.eig_max);
    case ManifoldKind::product: {
      std::vector<ManifoldPtr> fs;
      for (const auto& f : spec.factors) fs.push_back(make_manifold(f));
      return std::make_shared<ProductManifold>(std::move(fs));
    }
  }
  throw std::invalid_argument("make_manifold: unknown kind");
}

inline ManifoldPtr make_manifold(ManifoldKind kind, int dim) {
  ManifoldSpec s;
  s.kind = kind;
  s.dim = dim;
  return make_manifold(s);
}

inline TangentVector random_tangent(const Manifold& m, const Point& x, Rng& rng, double norm) {
  if (norm < 0.0) throw std::invalid_argument("random_tangent: negative norm");
  if (norm == 0.0) return m.zero_tangent(x);
  Vec v = m.project_tangent_raw(x.coords, m.ambient_normal_raw(rng));
  double n = std::sqrt(std::max(0.0, m.inner_raw(x.coords, v, v)));
  while (n == 0.0) {
    v = m.project_tangent_raw(x.coords, m.ambient_normal_raw(rng));
    n = std::sqrt(std::max(0.0, m.inner_raw(x.coords, v, v)));
  }
  v *= norm / n;
  return TangentVector{x, v};
}

inline TangentVector random_tangent(const Manifold& m, const Point& x, std::uint64_t seed,
                                    double norm) {
  Rng rng(seed);
  return random_tangent(m, x, rng, norm);
}

/// Default-distribution sample, or a point within `radius` of `center`
/// (origin when no center is given) with the radius drawn so that the
/// tangent-space density is uniform in the ball.
inline Point random_point(const Manifold& m, Rng& rng, const std::optional<Point>& center = {},
                          std::optional<double> radius = {}) {
  if (!radius) {
    if (center) throw std::invalid_argument("random_point: center given without radius");
    return Point{m.project_point_raw(m.sample_raw(rng)), m.id()};
  }
  if (*radius < 0.0) throw std::invalid_argument("random_point: negative radius");
  const Point c = center ? *center : m.origin();
  m.require_owned(c);
  const double r = *radius * std::pow(rng.uniform(), 1.0 / m.dimension());
  return m.exp(c, random_tangent(m, c, rng, r));
}

inline Point random_point(const Manifold& m, std::uint64_t seed,
                          const std::optional<Point>& center = {},
                          std::optional<double> radius = {}) {
  Rng rng(seed);
  return random_point(m, rng, center, radius);
}

}  // namespace ropt
