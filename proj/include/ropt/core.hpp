#pragma once

// Manifold interface, point/tangent value types and curvature-distortion
// constants shared by every learner in the library.

#include <Eigen/Dense>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <numbers>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "ropt/rng.hpp"

namespace ropt {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using ManifoldId = std::uint64_t;

// ---------------------------------------------------------------------------
// Errors

class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Value types

struct Point {
  Vec coords;
  ManifoldId manifold_id = 0;  // 0: not yet bound to a manifold
};

struct TangentVector {
  Point base;
  Vec coords;

  TangentVector& operator+=(const TangentVector& o) {
    coords += o.coords;
    return *this;
  }
  TangentVector& operator*=(double s) {
    coords *= s;
    return *this;
  }
};

inline TangentVector operator*(double s, TangentVector v) {
  v.coords *= s;
  return v;
}

inline TangentVector operator+(TangentVector a, const TangentVector& b) {
  a.coords += b.coords;
  return a;
}

inline TangentVector operator-(TangentVector a, const TangentVector& b) {
  a.coords -= b.coords;
  return a;
}

inline TangentVector operator-(TangentVector a) {
  a.coords = -a.coords;
  return a;
}

struct CurvatureBounds {
  double kappa = 0.0;  // lower sectional-curvature bound
  double K = 0.0;      // upper sectional-curvature bound

  double K_m() const { return std::max(std::abs(kappa), std::abs(K)); }
};

// ---------------------------------------------------------------------------
// Distortion constants

namespace detail {
// |x| below this uses the two-term series; x/tan x and x/tanh x lose all
// digits to 0/0 at the origin.
inline constexpr double kSeriesCutoff = 1e-6;
}  // namespace detail

/// sqrt(K) D / tan(sqrt(K) D) for K > 0, else 1.
inline double sigma_constant(double K, double D) {
  if (D < 0.0) throw DomainError("sigma_constant: negative diameter");
  if (K <= 0.0) return 1.0;
  const double x = std::sqrt(K) * D;
  if (x >= std::numbers::pi / 2) {
    std::ostringstream os;
    os << "sigma_constant: sqrt(K)*D = " << x << " must be below pi/2";
    throw DomainError(os.str());
  }
  if (x < detail::kSeriesCutoff) return 1.0 - x * x / 3.0;
  return x / std::tan(x);
}

/// sqrt(-kappa) D / tanh(sqrt(-kappa) D) for kappa < 0, else 1.
inline double zeta_constant(double kappa, double D) {
  if (D < 0.0) throw DomainError("zeta_constant: negative diameter");
  if (kappa >= 0.0) return 1.0;
  const double x = std::sqrt(-kappa) * D;
  if (x < detail::kSeriesCutoff) return 1.0 + x * x / 3.0;
  return x / std::tanh(x);
}

struct GeometryParams {
  double D = 0.0;
  double sigma = 1.0;
  double zeta = 1.0;
};

inline GeometryParams make_geometry_params(const CurvatureBounds& b, double D) {
  if (b.kappa > b.K) throw DomainError("curvature bounds: kappa > K");
  return {D, sigma_constant(b.K, D), zeta_constant(b.kappa, D)};
}

// ---------------------------------------------------------------------------
// Manifold interface

/// Riemannian manifold with closed-form exponential map, logarithm and
/// parallel transport along minimizing geodesics.
///
/// Points and tangent vectors are stored as flat coordinate vectors in the
/// manifold's ambient representation (matrices column-major). Subclasses
/// implement the *_raw kernels; the typed wrappers below check ownership,
/// base points and finiteness, and re-project results onto the manifold.
class Manifold {
 public:
  virtual ~Manifold() = default;

  virtual std::string name() const = 0;
  virtual Eigen::Index ambient_size() const = 0;
  /// Intrinsic dimension.
  virtual int dimension() const = 0;
  virtual CurvatureBounds curvature() const = 0;
  /// Radius below which log/transport are well defined from any point.
  virtual double injectivity_radius() const {
    return std::numeric_limits<double>::infinity();
  }

  virtual Vec exp_raw(const Vec& x, const Vec& v) const = 0;
  virtual Vec log_raw(const Vec& x, const Vec& y) const = 0;
  virtual Vec transport_raw(const Vec& x, const Vec& y, const Vec& v) const = 0;
  virtual double inner_raw(const Vec& x, const Vec& u, const Vec& v) const = 0;
  virtual double distance_raw(const Vec& x, const Vec& y) const {
    const Vec v = log_raw(x, y);
    return std::sqrt(std::max(0.0, inner_raw(x, v, v)));
  }
  virtual Vec project_point_raw(const Vec& x) const = 0;
  virtual Vec project_tangent_raw(const Vec& x, const Vec& v) const = 0;
  /// Violation of the membership equation at x (0 on the manifold).
  virtual double point_residual(const Vec& x) const = 0;
  /// Violation of the tangent-space constraint of v at x.
  virtual double tangent_residual(const Vec& x, const Vec& v) const = 0;
  /// Canonical base point (origin, north pole, identity, ...).
  virtual Vec origin_raw() const = 0;
  /// Sample from the manifold's default distribution.
  virtual Vec sample_raw(Rng& rng) const = 0;
  /// Ambient Gaussian used to draw tangent directions before projection.
  virtual Vec ambient_normal_raw(Rng& rng) const {
    Vec g(ambient_size());
    for (Eigen::Index i = 0; i < g.size(); ++i) g[i] = rng.normal();
    return g;
  }

  ManifoldId id() const {
    ManifoldId v = id_.load(std::memory_order_relaxed);
    if (v == 0) {
      v = hash_name(name());
      id_.store(v, std::memory_order_relaxed);
    }
    return v;
  }

  // -- typed API -----------------------------------------------------------

  Point point(Vec coords, double tol = 1e-9) const {
    check_size(coords, "point");
    check_finite(coords, "point");
    if (point_residual(coords) > tol) {
      std::ostringstream os;
      os << name() << ": coordinates violate the membership constraint (residual "
         << point_residual(coords) << ")";
      throw DomainError(os.str());
    }
    return Point{project_point_raw(coords), id()};
  }

  Point origin() const { return Point{origin_raw(), id()}; }

  TangentVector tangent(const Point& x, Vec coords, double tol = 1e-9) const {
    require_owned(x);
    check_size(coords, "tangent");
    check_finite(coords, "tangent");
    const double scale = 1.0 + coords.lpNorm<Eigen::Infinity>();
    if (tangent_residual(x.coords, coords) > tol * scale) {
      std::ostringstream os;
      os << name() << ": vector is not tangent at the base point (residual "
         << tangent_residual(x.coords, coords) << ")";
      throw DomainError(os.str());
    }
    return TangentVector{x, project_tangent_raw(x.coords, coords)};
  }

  TangentVector zero_tangent(const Point& x) const {
    require_owned(x);
    return TangentVector{x, Vec::Zero(ambient_size())};
  }

  Point exp(const Point& x, const TangentVector& v) const {
    require_owned(x);
    require_base(x, v);
    check_finite(v.coords, "exp: tangent");
    return Point{project_point_raw(exp_raw(x.coords, v.coords)), id()};
  }

  TangentVector log(const Point& x, const Point& y) const {
    require_owned(x);
    require_owned(y);
    return TangentVector{x, project_tangent_raw(x.coords, log_raw(x.coords, y.coords))};
  }

  TangentVector transport(const Point& x, const Point& y, const TangentVector& v) const {
    require_owned(x);
    require_owned(y);
    require_base(x, v);
    return TangentVector{y, project_tangent_raw(y.coords, transport_raw(x.coords, y.coords, v.coords))};
  }

  double inner(const Point& x, const TangentVector& u, const TangentVector& v) const {
    require_base(x, u);
    require_base(x, v);
    return inner_raw(x.coords, u.coords, v.coords);
  }

  double norm(const TangentVector& v) const {
    return std::sqrt(std::max(0.0, inner_raw(v.base.coords, v.coords, v.coords)));
  }

  double distance(const Point& x, const Point& y) const {
    require_owned(x);
    require_owned(y);
    return distance_raw(x.coords, y.coords);
  }

  void require_owned(const Point& x) const {
    if (x.manifold_id != 0 && x.manifold_id != id())
      throw std::invalid_argument(name() + ": point belongs to a different manifold");
    check_size(x.coords, "point");
  }

  void require_base(const Point& x, const TangentVector& v) const {
    check_size(v.coords, "tangent");
    const double tol = 1e-9 * (1.0 + x.coords.lpNorm<Eigen::Infinity>());
    if (v.base.coords.size() != x.coords.size() ||
        (v.base.coords - x.coords).lpNorm<Eigen::Infinity>() > tol)
      throw std::invalid_argument(name() + ": tangent vector is based at a different point");
  }

 protected:
  void check_size(const Vec& c, const char* what) const {
    if (c.size() != ambient_size()) {
      std::ostringstream os;
      os << name() << ": " << what << " has " << c.size() << " coordinates, expected "
         << ambient_size();
      throw std::invalid_argument(os.str());
    }
  }

  static void check_finite(const Vec& c, const char* what) {
    if (!c.allFinite()) throw NumericError(std::string(what) + " has non-finite coordinates");
  }

 private:
  static ManifoldId hash_name(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
    for (unsigned char c : s) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
    return h == 0 ? 1 : h;
  }

  mutable std::atomic<ManifoldId> id_{0};
};

using ManifoldPtr = std::shared_ptr<const Manifold>;

// Free-function spellings of the interface.

inline Point exp_map(const Manifold& m, const Point& x, const TangentVector& v) {
  return m.exp(x, v);
}
inline TangentVector log_map(const Manifold& m, const Point& x, const Point& y) {
  return m.log(x, y);
}
inline TangentVector parallel_transport(const Manifold& m, const Point& x, const Point& y,
                                        const TangentVector& v) {
  return m.transport(x, y, v);
}
inline double distance(const Manifold& m, const Point& x, const Point& y) {
  return m.distance(x, y);
}
inline double inner_product(const Manifold& m, const Point& x, const TangentVector& u,
                            const TangentVector& v) {
  return m.inner(x, u, v);
}

// ---------------------------------------------------------------------------
// Weighted Frechet mean

/// Thrown when the Karcher iteration does not reach the tolerance.
class FrechetMeanError : public NumericError {
 public:
  FrechetMeanError(Point last, double residual, int iterations)
      : NumericError(make_message(residual, iterations)),
        last_iterate(std::move(last)),
        residual(residual) {}

  Point last_iterate;
  double residual;

 private:
  static std::string make_message(double residual, int iterations) {
    std::ostringstream os;
    os << "weighted_frechet_mean: no convergence after " << iterations
       << " iterations (residual " << residual << ")";
    return os.str();
  }
};

struct FrechetOptions {
  double tol = 1e-9;
  int max_iter = 200;
};

/// Minimizer of sum_i w_i d^2(x, p_i) by the Karcher fixed-point iteration
/// x <- exp_x(sum_i w_i log_x(p_i)), started at the heaviest point.
/// Converged when the metric norm of sum_i w_i log_x(p_i) is at most tol.
inline Point weighted_frechet_mean(const Manifold& m, std::span<const Point> points,
                                   std::span<const double> weights,
                                   FrechetOptions opts = {}) {
  if (points.empty()) throw std::invalid_argument("weighted_frechet_mean: no points");
  if (points.size() != weights.size())
    throw std::invalid_argument("weighted_frechet_mean: points/weights size mismatch");
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) throw std::invalid_argument("weighted_frechet_mean: negative weight");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-8)
    throw std::invalid_argument("weighted_frechet_mean: weights must sum to 1");

  const auto heaviest = std::max_element(weights.begin(), weights.end()) - weights.begin();
  Vec x = points[heaviest].coords;
  double residual = std::numeric_limits<double>::infinity();
  for (int it = 0; it <= opts.max_iter; ++it) {
    Vec g = Vec::Zero(m.ambient_size());
    for (std::size_t i = 0; i < points.size(); ++i) {
      if (weights[i] == 0.0) continue;
      g += weights[i] * m.log_raw(x, points[i].coords);
    }
    g = m.project_tangent_raw(x, g);
    residual = std::sqrt(std::max(0.0, m.inner_raw(x, g, g)));
    if (residual <= opts.tol) return Point{x, m.id()};
    if (it == opts.max_iter) break;
    x = m.project_point_raw(m.exp_raw(x, g));
  }
  throw FrechetMeanError(Point{x, m.id()}, residual, opts.max_iter);
}

inline Point weighted_frechet_mean(const Manifold& m, const std::vector<Point>& points,
                                   const std::vector<double>& weights,
                                   FrechetOptions opts = {}) {
  return weighted_frechet_mean(m, std::span<const Point>(points),
                               std::span<const double>(weights), opts);
}

/// Equal-weight Frechet mean.
inline Point frechet_mean(const Manifold& m, std::span<const Point> points,
                          FrechetOptions opts = {}) {
  std::vector<double> w(points.size(), 1.0 / static_cast<double>(points.size()));
  return weighted_frechet_mean(m, points, std::span<const double>(w), opts);
}

}  // namespace ropt
