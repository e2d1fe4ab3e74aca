#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "ropt/core.hpp"
#include "ropt/manifolds.hpp"

using namespace ropt;

namespace {

Vec vec(std::initializer_list<double> v) {
  Vec out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

}  // namespace

TEST(Constants, SigmaFlatAndNegativeIsOne) {
  EXPECT_EQ(sigma_constant(0.0, 5.0), 1.0);
  EXPECT_EQ(sigma_constant(-2.0, 5.0), 1.0);
}

TEST(Constants, SigmaClosedForm) {
  EXPECT_NEAR(sigma_constant(1.0, std::numbers::pi / 4), std::numbers::pi / 4, 1e-12);
  // oracle: x cos x / sin x at x = sqrt(4) * 0.5 = 1
  EXPECT_NEAR(sigma_constant(4.0, 0.5), std::cos(1.0) / std::sin(1.0), 1e-12);
  EXPECT_NEAR(sigma_constant(4.0, 0.5), 0.642093, 1e-6);
}

TEST(Constants, SigmaDomainError) {
  EXPECT_THROW(sigma_constant(1.0, std::numbers::pi / 2), DomainError);
  EXPECT_THROW(sigma_constant(4.0, 1.0), DomainError);
}

TEST(Constants, SigmaContinuousAtZero) {
  EXPECT_NEAR(sigma_constant(1e-14, 1.0), 1.0, 1e-12);
  EXPECT_NEAR(sigma_constant(1.0, 1e-9), 1.0, 1e-12);
  EXPECT_LE(sigma_constant(0.5, 1.0), 1.0);
  EXPECT_GT(sigma_constant(0.5, 1.0), 0.0);
}

TEST(Constants, ZetaClosedForm) {
  EXPECT_EQ(zeta_constant(0.5, 2.0), 1.0);
  EXPECT_NEAR(zeta_constant(-1.0, 1e-12), 1.0, 1e-12);
  EXPECT_NEAR(zeta_constant(-1.0, 1.0), std::cosh(1.0) / std::sinh(1.0), 1e-12);
  EXPECT_NEAR(zeta_constant(-1.0, 1.0), 1.313035, 1e-6);
  // x / tanh x with x = sqrt(0.5) * 3
  const double x = std::sqrt(0.5) * 3.0;
  EXPECT_NEAR(zeta_constant(-0.5, 3.0), x * std::cosh(x) / std::sinh(x), 1e-12);
  EXPECT_GE(zeta_constant(-3.0, 0.2), 1.0);
}

TEST(Constants, GeometryParams) {
  const GeometryParams p = make_geometry_params({-1.0, 1.0}, 0.5);
  EXPECT_LE(p.sigma, 1.0);
  EXPECT_GE(p.zeta, 1.0);
  EXPECT_NEAR(p.sigma, 0.5 / std::tan(0.5), 1e-12);
  EXPECT_NEAR(p.zeta, 0.5 / std::tanh(0.5), 1e-12);
  EXPECT_THROW(make_geometry_params({-1.0, 1.0}, 2.0), DomainError);
  EXPECT_EQ((CurvatureBounds{-0.5, 0.0}).K_m(), 0.5);
  EXPECT_EQ((CurvatureBounds{-0.5, 2.0}).K_m(), 2.0);
}

TEST(ExpLog, SphereQuarterCircle) {
  SphereS s(2);
  const Point e1 = s.point(vec({1, 0, 0}));
  const Point y = s.exp(e1, s.tangent(e1, vec({0, std::numbers::pi / 2, 0})));
  EXPECT_NEAR((y.coords - vec({0, 1, 0})).norm(), 0.0, 1e-12);
  const TangentVector v = s.log(e1, s.point(vec({0, 1, 0})));
  EXPECT_NEAR((v.coords - vec({0, std::numbers::pi / 2, 0})).norm(), 0.0, 1e-12);
}

TEST(ExpLog, ZeroTangentIsIdentity) {
  for (const ManifoldPtr& m : {make_manifold(ManifoldKind::euclidean, 3), make_manifold(ManifoldKind::sphere, 2),
                               make_manifold(ManifoldKind::hyperbolic, 3), make_manifold(ManifoldKind::spd, 3)}) {
    const Point x = random_point(*m, 7);
    EXPECT_NEAR(m->distance(m->exp(x, m->zero_tangent(x)), x), 0.0, 1e-12) << m->name();
    EXPECT_NEAR(m->norm(m->log(x, x)), 0.0, 1e-12) << m->name();
  }
}

TEST(ExpLog, EuclideanIsAddition) {
  EuclideanSpace e(2);
  const Point x = e.point(vec({1, 0}));
  EXPECT_EQ(e.exp(x, e.tangent(x, vec({0, 2}))).coords, vec({1, 2}));
}

TEST(ExpLog, NonFiniteTangentRejected) {
  EuclideanSpace e(2);
  const Point x = e.point(vec({1, 0}));
  EXPECT_THROW(e.exp(x, TangentVector{x, vec({NAN, 0})}), std::exception);
}

TEST(ExpLog, SphereAntipodalLogIsDomainError) {
  SphereS s(2);
  const Point x = s.point(vec({1, 0, 0}));
  EXPECT_THROW(s.log(x, s.point(vec({-1, 0, 0}))), DomainError);
}

TEST(Hyperbolic, LogAndDistanceClosedForm) {
  HyperbolicH h(2);
  const Point x = h.point(vec({0, 0, 1}));
  const Point y = h.point(vec({0, std::sinh(1.0), std::cosh(1.0)}));
  // oracle: arccosh(-<x,y>_M) with <x,y>_M = -cosh 1
  EXPECT_NEAR(h.distance(x, y), std::acosh(std::cosh(1.0)), 1e-12);
  const TangentVector v = h.log(x, y);
  EXPECT_NEAR(h.norm(v), 1.0, 1e-12);
  EXPECT_NEAR((v.coords - vec({0, 1, 0})).norm(), 0.0, 1e-12);
}

TEST(Hyperbolic, MinkowskiInnerIsPositiveOnTangents) {
  HyperbolicH h(4);
  Rng rng(3);
  for (int k = 0; k < 50; ++k) {
    const Point x = random_point(h, rng, h.origin(), 2.0);
    const TangentVector u = random_tangent(h, x, rng, 1.0 + k);
    EXPECT_GT(h.inner(x, u, u), 0.0);
  }
}

TEST(Spd, DistanceToScaledIdentity) {
  SPDManifold spd(2);
  const Point I = spd.origin();
  const Point eI = spd.point(std::exp(1.0) * I.coords);
  EXPECT_NEAR(spd.distance(I, eI), std::sqrt(2.0), 1e-12);
}

TEST(Spd, InnerAtIdentityIsTrace) {
  SPDManifold spd(3);
  const Point I = spd.origin();
  Rng rng(5);
  const TangentVector U = random_tangent(spd, I, rng, 1.0), V = random_tangent(spd, I, rng, 2.0);
  const Mat u = spd.as_matrix(U.coords), v = spd.as_matrix(V.coords);
  EXPECT_NEAR(spd.inner(I, U, V), (u * v).trace(), 1e-12);
}

TEST(Transport, IdentityAndEuclidean) {
  EuclideanSpace e(3);
  const Point x = random_point(e, 1), y = random_point(e, 2);
  const TangentVector v = random_tangent(e, x, 3, 1.5);
  EXPECT_EQ(e.transport(x, y, v).coords, v.coords);
  for (const ManifoldPtr& m : {make_manifold(ManifoldKind::sphere, 3), make_manifold(ManifoldKind::hyperbolic, 3),
                               make_manifold(ManifoldKind::spd, 3)}) {
    const Point p = random_point(*m, 11);
    const TangentVector w = random_tangent(*m, p, 12, 0.7);
    EXPECT_NEAR((m->transport(p, p, w).coords - w.coords).norm(), 0.0, 1e-12) << m->name();
  }
}

TEST(Transport, PreservesNorm) {
  for (const ManifoldPtr& m : {make_manifold(ManifoldKind::sphere, 3), make_manifold(ManifoldKind::hyperbolic, 3),
                               make_manifold(ManifoldKind::spd, 3)}) {
    Rng rng(21);
    for (int k = 0; k < 100; ++k) {
      const Point c = random_point(*m, rng);
      const Point x = random_point(*m, rng, c, 1.0), y = random_point(*m, rng, c, 1.0);
      const TangentVector v = random_tangent(*m, x, rng, 1.3);
      EXPECT_NEAR(m->norm(m->transport(x, y, v)), 1.3, 1e-10) << m->name();
    }
  }
}

TEST(Distance, SymmetricAndMatchesLogNorm) {
  for (const ManifoldPtr& m : {make_manifold(ManifoldKind::euclidean, 3), make_manifold(ManifoldKind::sphere, 3),
                               make_manifold(ManifoldKind::hyperbolic, 3), make_manifold(ManifoldKind::spd, 3)}) {
    Rng rng(31);
    for (int k = 0; k < 100; ++k) {
      const Point c = random_point(*m, rng);
      const Point x = random_point(*m, rng, c, 1.0), y = random_point(*m, rng, c, 1.0);
      EXPECT_NEAR(m->distance(x, y), m->distance(y, x), 1e-10) << m->name();
      EXPECT_NEAR(m->distance(x, y), m->norm(m->log(x, y)), 1e-10) << m->name();
      EXPECT_NEAR(m->distance(x, x), 0.0, 1e-14) << m->name();
    }
  }
}

TEST(Frechet, SinglePoint) {
  HyperbolicH h(3);
  const Point p = random_point(h, 1);
  const std::vector<Point> pts{p};
  EXPECT_NEAR(h.distance(frechet_mean(h, pts), p), 0.0, 1e-12);
}

TEST(Frechet, SphereMidpoint) {
  SphereS s(2);
  const Point a = s.point(vec({1, 0, 0}));
  const Point b = s.point(vec({0, 1, 0}));
  const std::vector<Point> pts{a, b};
  const Point m = weighted_frechet_mean(s, pts, std::vector<double>{0.5, 0.5});
  // oracle: normalized chord midpoint
  const Vec mid = (a.coords + b.coords).normalized();
  EXPECT_NEAR((m.coords - mid).norm(), 0.0, 1e-9);
}

TEST(Frechet, EuclideanIsWeightedAverage) {
  EuclideanSpace e(3);
  const std::vector<Point> pts{random_point(e, 1), random_point(e, 2), random_point(e, 3)};
  const std::vector<double> w{0.2, 0.3, 0.5};
  const Point m = weighted_frechet_mean(e, pts, w);
  const Vec avg = 0.2 * pts[0].coords + 0.3 * pts[1].coords + 0.5 * pts[2].coords;
  EXPECT_NEAR((m.coords - avg).norm(), 0.0, 1e-12);
}

TEST(Frechet, HyperbolicStationarity) {
  HyperbolicH h(2);
  Rng rng(4);
  const std::vector<Point> pts{random_point(h, rng, h.origin(), 1.0), random_point(h, rng, h.origin(), 1.0),
                               random_point(h, rng, h.origin(), 1.0)};
  const std::vector<double> w{0.2, 0.3, 0.5};
  const Point m = weighted_frechet_mean(h, pts, w);
  // residual recomputed with the closed-form Lorentz log
  Vec g = Vec::Zero(3);
  for (int i = 0; i < 3; ++i) {
    const Vec& x = m.coords;
    const Vec& y = pts[i].coords;
    const double mink = x[0] * y[0] + x[1] * y[1] - x[2] * y[2];
    const double d = std::acosh(std::max(1.0, -mink));
    const Vec dir = y + mink * x;
    if (d > 0) g += w[i] * d * dir / std::sinh(d);
  }
  const double res = std::sqrt(g[0] * g[0] + g[1] * g[1] - g[2] * g[2]);
  EXPECT_LT(res, 1e-8);
  // a perturbed point has larger objective
  auto obj = [&](const Point& x) {
    double s = 0;
    for (int i = 0; i < 3; ++i) s += w[i] * std::pow(h.distance(x, pts[i]), 2);
    return s;
  };
  for (int k = 0; k < 10; ++k)
    EXPECT_GE(obj(h.exp(m, random_tangent(h, m, rng, 0.05))), obj(m));
}

TEST(Frechet, PermutationInvariant) {
  SPDManifold spd(3);
  Rng rng(8);
  std::vector<Point> pts;
  for (int i = 0; i < 5; ++i) pts.push_back(random_point(spd, rng));
  const Point a = frechet_mean(spd, pts);
  std::reverse(pts.begin(), pts.end());
  std::swap(pts[0], pts[2]);
  const Point b = frechet_mean(spd, pts);
  EXPECT_LT(spd.distance(a, b), 1e-8);
}

TEST(Frechet, NonConvergenceCarriesIterate) {
  HyperbolicH h(2);
  Rng rng(9);
  std::vector<Point> pts;
  for (int i = 0; i < 4; ++i) pts.push_back(random_point(h, rng, h.origin(), 2.0));
  FrechetOptions opts;
  opts.max_iter = 1;
  opts.tol = 1e-15;
  try {
    frechet_mean(h, pts, opts);
    FAIL() << "expected FrechetMeanError";
  } catch (const FrechetMeanError& e) {
    EXPECT_GT(e.residual, 0.0);
    EXPECT_EQ(e.last_iterate.coords.size(), 3);
  }
}

TEST(Frechet, RejectsBadWeights) {
  EuclideanSpace e(2);
  const std::vector<Point> pts{random_point(e, 1), random_point(e, 2)};
  EXPECT_THROW(weighted_frechet_mean(e, pts, std::vector<double>{0.7, 0.7}), std::invalid_argument);
  EXPECT_THROW(weighted_frechet_mean(e, pts, std::vector<double>{1.5, -0.5}), std::invalid_argument);
  EXPECT_THROW(weighted_frechet_mean(e, pts, std::vector<double>{1.0}), std::invalid_argument);
}

TEST(Points, OwnershipChecked) {
  SphereS s(2);
  HyperbolicH h(2);
  const Point p = s.point(vec({1, 0, 0}));
  EXPECT_THROW(h.require_owned(p), std::exception);
  EXPECT_THROW(s.point(vec({1, 1, 0})), std::exception);
  EXPECT_THROW(s.tangent(p, vec({1, 0, 0})), std::exception);
}
