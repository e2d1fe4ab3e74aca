#pragma once

// Online learners on manifolds: Riemannian OGD, optimistic OGD (with
// parallel-transported or base-point-corrected memory), the adaptive
// meta-expert combination, and regret bookkeeping.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "ropt/core.hpp"

namespace ropt {

// ---------------------------------------------------------------------------
// Optimistic OGD

struct OptimisticState {
  Point x_prev;
  Point x_cur;
  TangentVector grad_prev;  // based at x_prev
  double step_size = 0.0;
  long rounds = 0;          // completed updates
};

inline OptimisticState roogd_init(const Manifold& m, const Point& x0, double eta) {
  if (!(eta > 0.0)) throw std::invalid_argument("roogd_init: step size must be positive");
  m.require_owned(x0);
  return OptimisticState{x0, x0, m.zero_tangent(x0), eta, 0};
}

/// x+ = exp_x(-2 eta g_t + eta Gamma_{x_prev}^{x} g_{t-1}).
///
/// On the first call there is no previous round; the memory is taken to be
/// the current gradient, so the first move is exp_x(-eta g_1).
inline OptimisticState roogd_step(const Manifold& m, const OptimisticState& s,
                                  const TangentVector& grad_cur) {
  m.require_base(s.x_cur, grad_cur);
  if (!grad_cur.coords.allFinite()) throw NumericError("roogd_step: non-finite gradient");
  const double eta = s.step_size;
  TangentVector memory = s.rounds == 0 ? grad_cur : m.transport(s.x_prev, s.x_cur, s.grad_prev);
  TangentVector dir = -2.0 * eta * grad_cur + eta * memory;
  return OptimisticState{s.x_cur, m.exp(s.x_cur, dir), grad_cur, eta, s.rounds + 1};
}

/// State of the variant that replaces parallel transport by a change of
/// base point: x_hat carries the previous half step.
struct CorrectedState {
  Point x_cur;
  Point x_hat;
  double step_size = 0.0;
  long rounds = 0;
};

inline CorrectedState corrected_init(const Manifold& m, const Point& x0, double eta) {
  if (!(eta > 0.0)) throw std::invalid_argument("corrected_init: step size must be positive");
  m.require_owned(x0);
  return CorrectedState{x0, x0, eta, 0};
}

/// x+     = exp_x(-2 eta g + log_x(x_hat))
/// x_hat+ = exp_x(  -eta g + log_x(x_hat))
///
/// First call: x_hat is first set to exp_x(eta g), the same "previous
/// gradient equals current gradient" convention as roogd_step.
inline CorrectedState roogd_corrected_step(const Manifold& m, const CorrectedState& s,
                                           const TangentVector& grad_cur) {
  m.require_base(s.x_cur, grad_cur);
  if (!grad_cur.coords.allFinite()) throw NumericError("roogd_corrected_step: non-finite gradient");
  const double eta = s.step_size;
  const Point hat = s.rounds == 0 ? m.exp(s.x_cur, eta * grad_cur) : s.x_hat;
  const TangentVector to_hat = m.log(s.x_cur, hat);
  return CorrectedState{m.exp(s.x_cur, -2.0 * eta * grad_cur + to_hat),
                        m.exp(s.x_cur, -eta * grad_cur + to_hat), eta, s.rounds + 1};
}

/// Plain Riemannian online gradient descent, exp_x(-eta g).
inline Point rogd_step(const Manifold& m, const Point& x, const TangentVector& grad, double eta) {
  m.require_base(x, grad);
  if (!grad.coords.allFinite()) throw NumericError("rogd_step: non-finite gradient");
  return m.exp(x, -eta * grad);
}

// ---------------------------------------------------------------------------
// Adaptive meta-expert combination

struct StepSizePool {
  std::vector<double> etas;  // etas[i+1] = 2 etas[i]
  int N = 0;
};

struct AoogdConfig {
  StepSizePool pool;
  double beta = 0.0;
};

/// Geometric step-size pool and hedge learning rate:
///   eta_i = 2^{i-1} sqrt(sigma0 D0^2 / (16 zeta0^2 G^2 T)),
///   N     = ceil(1/2 log2(sigma0 G^2 T / (D0^2 L^2))) + 1,
///   beta  = min(1 / sqrt(12 D0^4 L^2 + D0^2 G^2 zeta0^2),
///               sqrt((2 + ln N) / (3 D0^2 (V_T + G^2)))).
/// N is clamped to at least 1 when the logarithm is negative.
inline AoogdConfig aoogd_configure(long T, double D0, double G, double L, double sigma0,
                                   double zeta0, double vt_bound) {
  if (T < 1) throw std::invalid_argument("aoogd_configure: T must be >= 1");
  if (!(D0 > 0 && G > 0 && L > 0 && sigma0 > 0 && zeta0 > 0))
    throw std::invalid_argument("aoogd_configure: constants must be positive");
  if (vt_bound < 0) throw std::invalid_argument("aoogd_configure: negative V_T bound");
  const double Td = static_cast<double>(T);
  const double eta1 = std::sqrt(sigma0 * D0 * D0 / (16.0 * zeta0 * zeta0 * G * G * Td));
  const double lg = 0.5 * std::log2(sigma0 * G * G * Td / (D0 * D0 * L * L));
  const int N = std::max(1, static_cast<int>(std::ceil(lg)) + 1);
  AoogdConfig cfg;
  cfg.pool.N = N;
  for (int i = 0; i < N; ++i) cfg.pool.etas.push_back(std::ldexp(eta1, i));
  const double b1 = 1.0 / std::sqrt(12.0 * std::pow(D0, 4) * L * L + D0 * D0 * G * G * zeta0 * zeta0);
  const double b2 = std::sqrt((2.0 + std::log(static_cast<double>(N))) /
                              (3.0 * D0 * D0 * (vt_bound + G * G)));
  cfg.beta = std::min(b1, b2);
  return cfg;
}

struct MetaWeights {
  Vec w;                     // probability vector
  Vec cumulative_surrogate;  // running sum of l_{i,j}, j < t
};

inline MetaWeights uniform_weights(int N) {
  return MetaWeights{Vec::Constant(N, 1.0 / N), Vec::Zero(N)};
}

/// Exponential weights w_i ∝ exp(-beta * scores_i), shifted by the minimum
/// score so the largest exponent is zero.
inline Vec hedge_weights(const Vec& scores, double beta) {
  const double lo = scores.minCoeff();
  Vec w = (-beta * (scores.array() - lo)).exp().matrix();
  return w / w.sum();
}

struct AoogdState {
  std::vector<OptimisticState> experts;
  MetaWeights weights;
  double beta = 0.0;
  long round = 0;
};

inline AoogdState aoogd_init(const Manifold& m, const Point& x0, const AoogdConfig& cfg) {
  AoogdState s;
  for (double eta : cfg.pool.etas) s.experts.push_back(roogd_init(m, x0, eta));
  s.weights = uniform_weights(static_cast<int>(cfg.pool.etas.size()));
  s.beta = cfg.beta;
  return s;
}

struct AoogdDiagnostics {
  Point combined_prior;  // mean under the previous weights
  Vec optimism;          // m_{i,t}
  Vec surrogate;         // l_{i,t}
};

struct AoogdRoundResult {
  Point played;
  AoogdState next;
  AoogdDiagnostics diagnostics;
};

using GradientOracle = std::function<TangentVector(const Point&)>;

/// One round of the meta algorithm.
///
/// `grad_prev` is the gradient field of the previous round's loss (empty in
/// round 1) and provides the optimistic hint at the prior combination;
/// `grad_cur` is the current loss, revealed after the point is played.
inline AoogdRoundResult aoogd_round(const Manifold& m, const AoogdState& s,
                                    const GradientOracle& grad_cur,
                                    const GradientOracle& grad_prev = {},
                                    FrechetOptions fm = {}) {
  const auto N = static_cast<Eigen::Index>(s.experts.size());
  if (N == 0) throw std::invalid_argument("aoogd_round: no experts");
  std::vector<Point> pts;
  pts.reserve(N);
  for (const auto& e : s.experts) pts.push_back(e.x_cur);

  std::vector<double> w_prev(s.weights.w.data(), s.weights.w.data() + N);
  Point prior = weighted_frechet_mean(m, pts, w_prev, fm);

  Vec optimism = Vec::Zero(N);
  if (grad_prev) {
    const TangentVector hint = grad_prev(prior);
    for (Eigen::Index i = 0; i < N; ++i)
      optimism[i] = m.inner(prior, hint, m.log(prior, pts[i]));
  }

  AoogdState next = s;
  next.weights.w = hedge_weights(s.weights.cumulative_surrogate + optimism, s.beta);
  std::vector<double> w_now(next.weights.w.data(), next.weights.w.data() + N);
  Point played = weighted_frechet_mean(m, pts, w_now, fm);

  const TangentVector g = grad_cur(played);
  Vec surrogate(N);
  for (Eigen::Index i = 0; i < N; ++i) surrogate[i] = m.inner(played, g, m.log(played, pts[i]));
  next.weights.cumulative_surrogate += surrogate;

  for (Eigen::Index i = 0; i < N; ++i)
    next.experts[i] = roogd_step(m, s.experts[i], grad_cur(pts[i]));
  next.round = s.round + 1;
  return {std::move(played), std::move(next), {std::move(prior), optimism, surrogate}};
}

// ---------------------------------------------------------------------------
// Regret accounting

struct RegretLedger {
  double cum_alg_loss = 0.0;
  double cum_comparator_loss = 0.0;
  double path_length = 0.0;     // P_T
  double grad_variation = 0.0;  // V_T estimate
  double max_excursion = 0.0;   // largest observed iterate-to-center distance
  long round = 0;

  double regret() const { return cum_alg_loss - cum_comparator_loss; }
};

/// Gradients of f_t and f_{t-1} at the same probe point.
struct GradientPair {
  TangentVector current;
  TangentVector previous;
};

inline RegretLedger regret_update(const Manifold& m, RegretLedger ledger, double f_alg,
                                  double f_comp, const Point& u_t,
                                  const std::optional<Point>& u_prev,
                                  const std::vector<GradientPair>& grad_samples = {}) {
  ledger.cum_alg_loss += f_alg;
  ledger.cum_comparator_loss += f_comp;
  if (u_prev) ledger.path_length += m.distance(*u_prev, u_t);
  double vmax = 0.0;
  for (const auto& gp : grad_samples) {
    m.require_base(gp.current.base, gp.previous);
    const TangentVector diff = gp.current - gp.previous;
    vmax = std::max(vmax, m.inner(diff.base, diff, diff));
  }
  ledger.grad_variation += vmax;
  ++ledger.round;
  return ledger;
}

inline void note_excursion(const Manifold& m, RegretLedger& ledger, const Point& center,
                           const Point& x) {
  ledger.max_excursion = std::max(ledger.max_excursion, m.distance(center, x));
}

}  // namespace ropt
