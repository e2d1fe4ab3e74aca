#pragma once

// Zero-sum games on product manifolds and first-order NE solvers:
// optimistic gradient descent-ascent with geodesic averaging, plain GDA and
// corrected extragradient.

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <stdexcept>
#include <vector>

#include "ropt/core.hpp"
#include "ropt/manifolds.hpp"

namespace ropt {

struct QuadLogdetParams {
  int d = 1;
  double c1 = 0.0;
  double c2 = 1.0;
};

/// min_x max_y f(x, y) over M x N.
struct ZeroSumGame {
  std::shared_ptr<const ProductManifold> space;
  std::function<double(const Point&, const Point&)> payoff;
  std::function<TangentVector(const Point&, const Point&)> grad_x;  // in T_x M
  std::function<TangentVector(const Point&, const Point&)> grad_y;  // in T_y N
  double mu = 0.0;            // strong convexity-concavity modulus, 0 if unknown
  double smoothness_L = 0.0;  // 0 if unknown
  std::function<Vec(const Point&, const Point&)> residual;  // optional NE residual
  std::optional<double> equilibrium_value;
  std::optional<QuadLogdetParams> quad;

  const Manifold& M() const { return space->factor(0); }
  const Manifold& N() const { return space->factor(1); }
  Point x_of(const Point& z) const { return space->component(z, 0); }
  Point y_of(const Point& z) const { return space->component(z, 1); }
  Point join(const Point& x, const Point& y) const { return space->join({x, y}); }

  double value(const Point& z) const { return payoff(x_of(z), y_of(z)); }

  /// F(z) = [grad_x f, -grad_y f].
  TangentVector field(const Point& z) const {
    const Point x = x_of(z), y = y_of(z);
    return space->join(z, {grad_x(x, y), -grad_y(x, y)});
  }
};

// ---------------------------------------------------------------------------
// Solvers

struct GameState {
  Point z_prev;
  Point z_cur;
  TangentVector grad_prev;  // F(z_prev)
  Point z_bar;              // geodesic running average of z_1..z_round
  long round = 1;           // index of z_cur
  double best_grad_norm = std::numeric_limits<double>::infinity();
};

inline GameState game_init(const ZeroSumGame& g, const Point& z0) {
  g.space->require_owned(z0);
  return GameState{z0, z0, g.space->zero_tangent(z0), z0, 1,
                   std::numeric_limits<double>::infinity()};
}

/// z_bar <- exp_{z_bar}(log_{z_bar}(z_new) / (t + 1)).
inline Point geodesic_average(const Manifold& m, const Point& z_bar, const Point& z_new, long t) {
  if (t < 1) throw std::invalid_argument("geodesic_average: t must be >= 1");
  return m.exp(z_bar, (1.0 / static_cast<double>(t + 1)) * m.log(z_bar, z_new));
}

/// One optimistic descent-ascent step: z+ = exp_z(-2 eta F(z) + eta Gamma F(z_prev)),
/// which descends in x and ascends in y. The first step uses F(z_1) as its
/// own memory.
inline GameState rogda_step(const ZeroSumGame& g, const GameState& s, double eta) {
  if (!(eta > 0.0)) throw std::invalid_argument("rogda_step: step size must be positive");
  const Manifold& m = *g.space;
  const TangentVector F = g.field(s.z_cur);
  if (!F.coords.allFinite()) throw NumericError("rogda_step: non-finite gradient");
  const TangentVector memory = s.round == 1 ? F : m.transport(s.z_prev, s.z_cur, s.grad_prev);
  const Point z_next = m.exp(s.z_cur, -2.0 * eta * F + eta * memory);
  GameState out{s.z_cur, z_next, F, geodesic_average(m, s.z_bar, z_next, s.round), s.round + 1,
                std::min(s.best_grad_norm, m.norm(F))};
  return out;
}

/// Simultaneous gradient descent-ascent, exp_z(-eta F(z)).
inline Point rgda_step(const ZeroSumGame& g, const Point& z, double eta) {
  if (!(eta > 0.0)) throw std::invalid_argument("rgda_step: step size must be positive");
  const TangentVector F = g.field(z);
  if (!F.coords.allFinite()) throw NumericError("rgda_step: non-finite gradient");
  return g.space->exp(z, -eta * F);
}

/// Corrected extragradient: w = exp_z(-eta F(z)); z+ = exp_w(-eta F(w) + log_w(z)).
inline Point rceg_step(const ZeroSumGame& g, const Point& z, double eta) {
  if (!(eta > 0.0)) throw std::invalid_argument("rceg_step: step size must be positive");
  const Manifold& m = *g.space;
  const TangentVector Fz = g.field(z);
  if (!Fz.coords.allFinite()) throw NumericError("rceg_step: non-finite gradient");
  const Point w = m.exp(z, -eta * Fz);
  const TangentVector Fw = g.field(w);
  if (!Fw.coords.allFinite()) throw NumericError("rceg_step: non-finite gradient");
  return m.exp(w, -eta * Fw + m.log(w, z));
}

// ---------------------------------------------------------------------------
// Diagnostics

struct NEDiagnostics {
  double grad_norm = 0.0;
  double best_grad_norm = 0.0;
  Vec ne_residual;
};

inline NEDiagnostics ne_diagnostics(const ZeroSumGame& g, const GameState& s) {
  NEDiagnostics d;
  d.grad_norm = g.space->norm(g.field(s.z_cur));
  d.best_grad_norm = std::min(s.best_grad_norm, d.grad_norm);
  if (g.residual) d.ne_residual = g.residual(g.x_of(s.z_cur), g.y_of(s.z_cur));
  return d;
}

// ---------------------------------------------------------------------------
// Quadratic logdet game on SPD x SPD

/// f(X, Y) = c1 u^2 + c2 u v - c1 v^2 with u = logdet X, v = logdet Y.
/// logdet is geodesically linear with affine-invariant gradient X, hence
/// grad_X f = (2 c1 u + c2 v) X and grad_Y f = (c2 u - 2 c1 v) Y.
inline ZeroSumGame quad_logdet_game(int d, double c1, double c2) {
  if (d < 1) throw std::invalid_argument("quad_logdet_game: d must be >= 1");
  if (c1 < 0.0) throw std::invalid_argument("quad_logdet_game: c1 must be >= 0");
  auto spd = std::make_shared<SPDManifold>(d);
  auto space = std::make_shared<ProductManifold>(std::vector<ManifoldPtr>{spd, spd});
  ZeroSumGame g;
  g.space = space;
  g.payoff = [spd, c1, c2](const Point& x, const Point& y) {
    const double u = spd->logdet(x.coords), v = spd->logdet(y.coords);
    return c1 * u * u + c2 * u * v - c1 * v * v;
  };
  g.grad_x = [spd, c1, c2](const Point& x, const Point& y) {
    const double u = spd->logdet(x.coords), v = spd->logdet(y.coords);
    return TangentVector{x, (2.0 * c1 * u + c2 * v) * x.coords};
  };
  g.grad_y = [spd, c1, c2](const Point& x, const Point& y) {
    const double u = spd->logdet(x.coords), v = spd->logdet(y.coords);
    return TangentVector{y, (c2 * u - 2.0 * c1 * v) * y.coords};
  };
  g.residual = [spd](const Point& x, const Point& y) {
    Vec r(2);
    r << spd->logdet(x.coords), spd->logdet(y.coords);
    return r;
  };
  // |grad logdet| = sqrt(d) in the affine-invariant metric.
  g.mu = 2.0 * c1 * d;
  g.smoothness_L = d * std::sqrt(4.0 * c1 * c1 + c2 * c2);
  g.equilibrium_value = 0.0;
  g.quad = QuadLogdetParams{d, c1, c2};
  return g;
}

/// Bound on |F| over points within `radius` of the equilibrium set
/// {det X = det Y = 1}: |F| <= d sqrt(4 c1^2 + c2^2) radius.
inline double quad_lipschitz_bound(const QuadLogdetParams& p, double radius) {
  return p.d * std::sqrt(4.0 * p.c1 * p.c1 + p.c2 * p.c2) * radius;
}

/// Nearest equilibrium to z along its scaling geodesic: X det(X)^{-1/d}.
inline Point quad_nearest_equilibrium(const ZeroSumGame& g, const Point& z) {
  if (!g.quad) throw std::invalid_argument("quad_nearest_equilibrium: not a logdet game");
  const auto& spd = static_cast<const SPDManifold&>(g.M());
  const double d = g.quad->d;
  const Point x = g.x_of(z), y = g.y_of(z);
  const double u = spd.logdet(x.coords), v = spd.logdet(y.coords);
  return g.join(Point{std::exp(-u / d) * x.coords, x.manifold_id},
                Point{std::exp(-v / d) * y.coords, y.manifold_id});
}

/// max_y f(x̄, y) - min_x f(x, ȳ) in closed form. With u = logdet x̄ and
/// v = logdet ȳ ranging over all of R, the inner problems are scalar
/// quadratics and the gap is (c1 + c2^2 / (4 c1)) (u^2 + v^2).
inline double quad_duality_gap(const QuadLogdetParams& p, double u, double v) {
  if (!(p.c1 > 0.0))
    throw DomainError("quad_duality_gap: c1 must be positive (gap is unbounded otherwise)");
  return (p.c1 + p.c2 * p.c2 / (4.0 * p.c1)) * (u * u + v * v);
}

inline double quad_duality_gap(const ZeroSumGame& g, const Point& x_bar, const Point& y_bar) {
  if (!g.quad) throw std::invalid_argument("quad_duality_gap: not a logdet game");
  const auto& spd = static_cast<const SPDManifold&>(g.M());
  return quad_duality_gap(*g.quad, spd.logdet(x_bar.coords), spd.logdet(y_bar.coords));
}

// ---------------------------------------------------------------------------
// Robust geometry-aware PCA on SPD(d) x S^{d-1}

/// f(A, X) = X^T A X + (alpha / n) sum_i d(A, A_i).
///   grad_A = A X X^T A - (alpha / n) sum_{d_i > 0} log_A(A_i) / d_i
///   grad_X = 2 (A X - (X^T A X) X)
/// A summand with d(A, A_i) = 0 contributes the zero subgradient; distances
/// below kCoincident count as zero, since log and distance round differently there.
inline constexpr double kCoincident = 1e-10;

inline ZeroSumGame robust_pca_game(std::vector<Point> data, double alpha) {
  if (data.empty()) throw std::invalid_argument("robust_pca_game: empty data");
  const Eigen::Index n2 = data.front().coords.size();
  const int d = static_cast<int>(std::lround(std::sqrt(static_cast<double>(n2))));
  if (d < 2) throw std::invalid_argument("robust_pca_game: matrices must be at least 2x2");
  auto spd = std::make_shared<SPDManifold>(d);
  auto sph = std::make_shared<SphereS>(d - 1);
  for (auto& a : data) a = spd->point(a.coords);
  auto space = std::make_shared<ProductManifold>(std::vector<ManifoldPtr>{spd, sph});
  auto pts = std::make_shared<const std::vector<Point>>(std::move(data));
  const double scale = alpha / static_cast<double>(pts->size());

  ZeroSumGame g;
  g.space = space;
  g.payoff = [spd, pts, scale](const Point& a, const Point& x) {
    const Mat A = spd->as_matrix(a.coords);
    double s = 0.0;
    for (const auto& ai : *pts) s += spd->distance_raw(a.coords, ai.coords);
    return x.coords.dot(A * x.coords) + scale * s;
  };
  g.grad_x = [spd, pts, scale](const Point& a, const Point& x) {
    const Mat A = spd->as_matrix(a.coords);
    const Vec Ax = A * x.coords;
    Mat G = Ax * Ax.transpose();
    for (const auto& ai : *pts) {
      const double di = spd->distance_raw(a.coords, ai.coords);
      if (di < kCoincident) continue;
      G -= (scale / di) * spd->as_matrix(spd->log_raw(a.coords, ai.coords));
    }
    return TangentVector{a, spd->as_vector(detail::symmetrize(G))};
  };
  g.grad_y = [spd](const Point& a, const Point& x) {
    const Vec Ax = spd->as_matrix(a.coords) * x.coords;
    return TangentVector{x, 2.0 * (Ax - x.coords.dot(Ax) * x.coords)};
  };
  g.residual = [spd](const Point& a, const Point& x) {
    const Vec Ax = spd->as_matrix(a.coords) * x.coords;
    Vec r(1);
    r << (2.0 * (Ax - x.coords.dot(Ax) * x.coords)).norm();
    return r;
  };
  g.mu = 0.0;
  return g;
}

// ---------------------------------------------------------------------------
// Step-size caps from the convergence analysis

/// Boundedness cap: eta <= min(sigma1 / (zeta1 L), D1 / (3 G)).
inline double bounded_step_cap(double sigma1, double zeta1, double L, double G, double D1) {
  return std::min(sigma1 / (zeta1 * L), D1 / (3.0 * G));
}

/// Average-iterate cap: eta <= sigma1 / (2 zeta1 L).
inline double average_iterate_step_cap(double sigma1, double zeta1, double L) {
  return sigma1 / (2.0 * zeta1 * L);
}

/// Best-iterate cap: eta <= min(1 / (20 L), 1 / (8 G), sigma1 / (2 Upsilon)), with
/// Upsilon = sigma1 L / 5 + 28/5 (zeta1 - sigma1) L + 104 (2 D1 + 1/5) K_m G + 8 sigma1 K_m G.
inline double best_iterate_step_cap(double sigma1, double zeta1, double L, double G, double D1,
                                    double K_m) {
  const double ups = sigma1 * L / 5.0 + 28.0 / 5.0 * (zeta1 - sigma1) * L +
                     104.0 * (2.0 * D1 + 0.2) * K_m * G + 8.0 * sigma1 * K_m * G;
  return std::min({1.0 / (20.0 * L), 1.0 / (8.0 * G), sigma1 / (2.0 * ups)});
}

}  // namespace ropt
