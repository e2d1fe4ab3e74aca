#pragma once

// Independent numerical oracles: finite-difference gradient checks,
// geometry property sweeps, holonomy around geodesic rectangles, and the
// distortion recursion of the base-point-corrected optimistic update.

#include <json.hpp>

#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "ropt/core.hpp"
#include "ropt/manifolds.hpp"
#include "ropt/rng.hpp"

namespace ropt {

struct ProbeReport {
  std::string name;
  double max_violation = 0.0;
  long samples = 0;
  nlohmann::json worst_case = nlohmann::json::object();

  void record(double violation, const std::function<nlohmann::json()>& describe) {
    if (samples == 0 || violation > max_violation) {
      max_violation = violation;
      worst_case = describe();
    }
    ++samples;
  }
};

inline nlohmann::json to_json(const ProbeReport& r) {
  return {{"name", r.name},
          {"max_violation", r.max_violation},
          {"samples", r.samples},
          {"worst_case", r.worst_case}};
}

namespace detail {
inline std::vector<double> as_list(const Vec& v) { return {v.data(), v.data() + v.size()}; }
}  // namespace detail

// ---------------------------------------------------------------------------
// Finite differences

/// Compares <grad, v> with (f(exp_x(hv)) - f(exp_x(-hv))) / (2h) along
/// n_dirs random unit tangents. The error is relative to
/// max(|grad|, |fd|) and absolute when both are below 1e-12.
inline ProbeReport fd_gradient_check(const Manifold& m, const std::function<double(const Point&)>& f,
                                     const TangentVector& grad, const Point& x, int n_dirs,
                                     double h = 1e-4, std::uint64_t seed = 0) {
  if (!(h > 0.0)) throw std::invalid_argument("fd_gradient_check: h must be positive");
  m.require_base(x, grad);
  ProbeReport rep{"fd_gradient_check"};
  Rng rng(seed);
  const double gnorm = m.norm(grad);
  for (int k = 0; k < n_dirs; ++k) {
    const TangentVector v = random_tangent(m, x, rng, 1.0);
    const double analytic = m.inner(x, grad, v);
    const double fd = (f(m.exp(x, h * v)) - f(m.exp(x, -h * v))) / (2.0 * h);
    const double scale = std::max(gnorm, std::abs(fd));
    const double err = scale < 1e-12 ? std::abs(analytic - fd) : std::abs(analytic - fd) / scale;
    rep.record(err, [&] {
      return nlohmann::json{{"x", detail::as_list(x.coords)},
                            {"direction", detail::as_list(v.coords)},
                            {"analytic", analytic},
                            {"finite_difference", fd}};
    });
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Geometry sweeps

namespace detail {

struct Triangle {
  Point a, b, c;
};

// Three points in a ball of radius max_diam/2 around a random center, so
// every side is at most max_diam.
inline Triangle random_triangle(const Manifold& m, Rng& rng, double max_diam) {
  const Point center = random_point(m, rng);
  return {random_point(m, rng, center, 0.5 * max_diam),
          random_point(m, rng, center, 0.5 * max_diam),
          random_point(m, rng, center, 0.5 * max_diam)};
}

}  // namespace detail

/// Checks, on random triangles ABC of diameter at most max_diam,
///   2<log_A C, log_A B> <= d^2(A,B) + zeta(kappa, d(A,B)) d^2(A,C) - d^2(B,C)
///   2<log_A C, log_A B> >= d^2(A,B) + sigma(K, diam ABC) d^2(A,C) - d^2(B,C)
/// The violation is the amount by which either inequality fails. The
/// largest absolute slack of either side is reported as worst_case
/// "max_abs_slack" (0 on flat space, where both are the law of cosines).
inline ProbeReport triangle_comparison_suite(const Manifold& m, int n_triangles, double max_diam,
                                             std::uint64_t seed) {
  const CurvatureBounds cb = m.curvature();
  ProbeReport rep{"triangle_comparison"};
  Rng rng(seed);
  double max_abs_slack = 0.0;
  for (int k = 0; k < n_triangles; ++k) {
    const auto [A, B, C] = detail::random_triangle(m, rng, max_diam);
    const double ab = m.distance(A, B), ac = m.distance(A, C), bc = m.distance(B, C);
    const double lhs = 2.0 * m.inner(A, m.log(A, C), m.log(A, B));
    const double base = ab * ab - bc * bc;
    const double upper = base + zeta_constant(cb.kappa, ab) * ac * ac;
    const double diam = std::max({ab, ac, bc});
    const double lower = base + sigma_constant(cb.K, diam) * ac * ac;
    const double viol = std::max({0.0, lhs - upper, lower - lhs});
    max_abs_slack = std::max({max_abs_slack, std::abs(upper - lhs), std::abs(lhs - lower)});
    rep.record(viol, [&] {
      return nlohmann::json{{"A", detail::as_list(A.coords)},
                            {"B", detail::as_list(B.coords)},
                            {"C", detail::as_list(C.coords)},
                            {"lhs", lhs},
                            {"zeta_side", upper},
                            {"sigma_side", lower}};
    });
  }
  rep.worst_case["max_abs_slack"] = max_abs_slack;
  return rep;
}

/// d(exp_x(log_x y), y) for x, y within `radius` of a random center.
inline ProbeReport roundtrip_probe(const Manifold& m, int n, double radius, std::uint64_t seed) {
  ProbeReport rep{"exp_log_roundtrip"};
  Rng rng(seed);
  for (int k = 0; k < n; ++k) {
    const Point c = random_point(m, rng);
    const Point x = random_point(m, rng, c, radius), y = random_point(m, rng, c, radius);
    const double err = m.distance(m.exp(x, m.log(x, y)), y);
    rep.record(err, [&] {
      return nlohmann::json{{"x", detail::as_list(x.coords)}, {"y", detail::as_list(y.coords)}};
    });
  }
  return rep;
}

/// |<Gu, Gv>_y - <u, v>_x| for random unit-scale tangents u, v.
inline ProbeReport isometry_probe(const Manifold& m, int n, double radius, std::uint64_t seed) {
  ProbeReport rep{"transport_isometry"};
  Rng rng(seed);
  for (int k = 0; k < n; ++k) {
    const Point c = random_point(m, rng);
    const Point x = random_point(m, rng, c, radius), y = random_point(m, rng, c, radius);
    const TangentVector u = random_tangent(m, x, rng, 1.0), v = random_tangent(m, x, rng, 1.0);
    const double err =
        std::abs(m.inner(y, m.transport(x, y, u), m.transport(x, y, v)) - m.inner(x, u, v));
    rep.record(err, [&] {
      return nlohmann::json{{"x", detail::as_list(x.coords)}, {"y", detail::as_list(y.coords)}};
    });
  }
  return rep;
}

/// |d(x, y) - |log_x y||.
inline ProbeReport distance_log_probe(const Manifold& m, int n, double radius, std::uint64_t seed) {
  ProbeReport rep{"distance_log_consistency"};
  Rng rng(seed);
  for (int k = 0; k < n; ++k) {
    const Point c = random_point(m, rng);
    const Point x = random_point(m, rng, c, radius), y = random_point(m, rng, c, radius);
    const double err = std::abs(m.distance(x, y) - m.norm(m.log(x, y)));
    rep.record(err, [&] {
      return nlohmann::json{{"x", detail::as_list(x.coords)}, {"y", detail::as_list(y.coords)}};
    });
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Holonomy

struct HolonomyResult {
  double defect = 0.0;  // |Gamma_loop z - z|
  double bound = 0.0;   // 12 K_m |z| area
  double area = 0.0;    // product of mean opposite edge lengths
};

/// Corners p0, p1 = exp_p0(a e1), p3 = exp_p0(b e2), p2 = exp_p1(b Gamma_{p0}^{p1} e2).
inline std::array<Point, 4> geodesic_rectangle(const Manifold& m, const Point& p0,
                                               const TangentVector& e1, const TangentVector& e2,
                                               double a, double b) {
  const Point p1 = m.exp(p0, a * e1);
  const Point p3 = m.exp(p0, b * e2);
  const Point p2 = m.exp(p1, b * m.transport(p0, p1, e2));
  return {p0, p1, p2, p3};
}

/// Transports z around p0 -> p1 -> p2 -> p3 -> p0 along minimizing geodesics.
inline HolonomyResult holonomy_probe(const Manifold& m, const std::array<Point, 4>& corners,
                                     const TangentVector& z) {
  m.require_base(corners[0], z);
  TangentVector w = z;
  for (int i = 0; i < 4; ++i) w = m.transport(corners[i], corners[(i + 1) % 4], w);
  HolonomyResult r;
  const TangentVector diff = w - z;
  r.defect = m.norm(diff);
  const double d01 = m.distance(corners[0], corners[1]), d12 = m.distance(corners[1], corners[2]),
               d23 = m.distance(corners[2], corners[3]), d30 = m.distance(corners[3], corners[0]);
  r.area = 0.25 * (d01 + d23) * (d12 + d30);
  r.bound = 12.0 * m.curvature().K_m() * m.norm(z) * r.area;
  return r;
}

/// Random small rectangles with sides in (0, max_side]; the violation is
/// defect - bound (positive only when the curvature bound fails).
inline ProbeReport holonomy_suite(const Manifold& m, int n, double max_side, std::uint64_t seed) {
  ProbeReport rep{"holonomy_bound"};
  Rng rng(seed);
  for (int k = 0; k < n; ++k) {
    const Point p0 = random_point(m, rng);
    const TangentVector e1 = random_tangent(m, p0, rng, 1.0);
    // second side direction: orthonormalize a fresh tangent against e1
    TangentVector e2 = random_tangent(m, p0, rng, 1.0);
    e2 = e2 - m.inner(p0, e1, e2) * e1;
    e2 *= 1.0 / m.norm(e2);
    const double a = max_side * (0.05 + 0.95 * rng.uniform());
    const double b = max_side * (0.05 + 0.95 * rng.uniform());
    const auto corners = geodesic_rectangle(m, p0, e1, e2, a, b);
    const TangentVector z = random_tangent(m, p0, rng, 1.0);
    const HolonomyResult h = holonomy_probe(m, corners, z);
    rep.record(h.defect - h.bound, [&] {
      return nlohmann::json{{"p0", detail::as_list(p0.coords)}, {"a", a}, {"b", b},
                            {"defect", h.defect}, {"bound", h.bound}, {"area", h.area}};
    });
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Distortion recursion of the corrected variant

struct BlowupTrace {
  std::vector<double> values;         // A_1, A_2, ...
  std::optional<long> diverged_at;    // first round whose value overflowed
};

/// A_0 = 0, A_t = K_m (5 eta G + 2 A_{t-1})^2 (3 eta G + A_{t-1}), t = 1..T.
/// Stops at the first non-finite value and records its round.
inline BlowupTrace correction_blowup_trace(double etaG, double K_m, long T) {
  BlowupTrace tr;
  double a = 0.0;
  for (long t = 1; t <= T; ++t) {
    const double s = 5.0 * etaG + 2.0 * a;
    a = K_m * s * s * (3.0 * etaG + a);
    if (!std::isfinite(a)) {
      tr.diverged_at = t;
      break;
    }
    tr.values.push_back(a);
  }
  return tr;
}

}  // namespace ropt
