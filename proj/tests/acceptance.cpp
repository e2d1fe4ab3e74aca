// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include "ropt/ropt.hpp"

using namespace ropt;
using namespace ropt::bench;

namespace {

// Pinned tolerances.
constexpr double kGeometryTol = 1e-8;
constexpr double kGeometrySeconds = 30;
constexpr double kReductionTol = 1e-12;
constexpr double kRegretRatioMax = 1.7;
constexpr double kStaticSeconds = 120;
constexpr int kOrderingSeedsNeeded = 4;
constexpr double kOrderingSeconds = 300;
constexpr double kAverageRatioMax = 3.0;
constexpr double kGameSeconds = 60;
constexpr double kBestIterateFactor = 0.6;
constexpr double kLastIterateGrad = 1e-6;
constexpr double kContractionSpread = 0.25;
constexpr double kBoundSlack = 1e-6;
constexpr double kBlowupLevel = 1e3;
constexpr double kHolonomyRatioTol = 0.1;
constexpr double kFdTol = 1e-4;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

int failures = 0;

void report(int id, bool pass, const std::string& what, double secs) {
  std::printf("%s criterion %d: %s [%.1f s]\n", pass ? "PASS" : "FAIL", id, what.c_str(), secs);
  std::fflush(stdout);
  if (!pass) ++failures;
}

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

// 1 ---------------------------------------------------------------------------
void geometry_suite() {
  const auto t0 = Clock::now();
  double worst = 0.0;
  std::string where;
  std::uint64_t seed = 1;
  for (const ManifoldPtr& m : {make_manifold(ManifoldKind::euclidean, 4), make_manifold(ManifoldKind::sphere, 3),
                               make_manifold(ManifoldKind::hyperbolic, 4), make_manifold(ManifoldKind::spd, 3)}) {
    const bool sphere = m->curvature().K > 0;
    const double diam = sphere ? std::numbers::pi / 2 - 0.1 : 2.0;
    for (const ProbeReport& r : {roundtrip_probe(*m, 1000, diam / 2, seed++), isometry_probe(*m, 1000, diam / 2, seed++),
                                 triangle_comparison_suite(*m, 1000, diam, seed++)}) {
      if (r.max_violation > worst || where.empty()) {
        worst = std::max(worst, r.max_violation);
        where = r.name + " on " + m->name();
      }
    }
  }
  const double secs = seconds_since(t0);
  report(1, worst <= kGeometryTol && secs < kGeometrySeconds,
         "geometry suite max violation " + fmt("%.3g", worst) + " (" + where + "), limit 1e-8, < 30 s", secs);
}

// 2 ---------------------------------------------------------------------------
void euclidean_reduction() {
  const auto t0 = Clock::now();
  const double eta = 0.08;
  double worst = 0.0;

  // R-OOGD on f_t(x) = 1/2 |x - c_t|^2 in R^5
  EuclideanSpace e(5);
  Rng rng(21);
  OptimisticState s = roogd_init(e, random_point(e, rng), eta);
  Vec x = s.x_cur.coords, g_prev;
  for (int t = 1; t <= 100; ++t) {
    const Vec c = random_point(e, rng).coords;
    const Vec g = x - c;
    x = x - 2.0 * eta * g + eta * (t == 1 ? g : g_prev);
    g_prev = g;
    s = roogd_step(e, s, e.tangent(s.x_cur, s.x_cur.coords - c));
    worst = std::max(worst, (s.x_cur.coords - x).lpNorm<Eigen::Infinity>());
  }

  // R-OGDA on f(x, y) = a/2 |x|^2 + x^T B y - b/2 |y|^2 over R^3 x R^2
  auto rx = std::make_shared<EuclideanSpace>(3), ry = std::make_shared<EuclideanSpace>(2);
  Mat B(3, 2);
  for (int i = 0; i < 6; ++i) B.data()[i] = rng.normal();
  const double a = 0.3, b = 0.2;
  ZeroSumGame g;
  g.space = std::make_shared<ProductManifold>(std::vector<ManifoldPtr>{rx, ry});
  g.payoff = [&](const Point& p, const Point& q) {
    return 0.5 * a * p.coords.squaredNorm() + p.coords.dot(B * q.coords) - 0.5 * b * q.coords.squaredNorm();
  };
  g.grad_x = [&](const Point& p, const Point& q) { return TangentVector{p, a * p.coords + B * q.coords}; };
  g.grad_y = [&](const Point& p, const Point& q) {
    return TangentVector{q, B.transpose() * p.coords - b * q.coords};
  };
  auto F = [&](const Vec& z) {
    Vec out(5);
    out.head(3) = a * z.head(3) + B * z.tail(2);
    out.tail(2) = -(B.transpose() * z.head(3) - b * z.tail(2));
    return out;
  };
  GameState st = game_init(g, random_point(*g.space, rng));
  Vec z = st.z_cur.coords, F_prev;
  for (int t = 1; t <= 100; ++t) {
    const Vec Fz = F(z);
    z = z - 2.0 * eta * Fz + eta * (t == 1 ? Fz : F_prev);
    F_prev = Fz;
    st = rogda_step(g, st, eta);
    worst = std::max(worst, (st.z_cur.coords - z).lpNorm<Eigen::Infinity>());
  }
  report(2, worst <= kReductionTol,
         "Euclidean R-OOGD and R-OGDA vs closed-form recursion over 100 rounds, max deviation " +
             fmt("%.3g", worst) + ", limit 1e-12",
         seconds_since(t0));
}

// 3 ---------------------------------------------------------------------------
FrechetStream prefix(const FrechetStream& s, std::size_t T) {
  FrechetStream p;
  p.space = s.space;
  p.centers.assign(s.centers.begin(), s.centers.begin() + T);
  p.samples.assign(s.samples.begin(), s.samples.begin() + T);
  p.reselected.assign(s.reselected.begin(), s.reselected.begin() + T);
  return p;
}

void static_regret() {
  const auto t0 = Clock::now();
  const std::vector<long> horizons = {500, 1000, 2000, 4000};
  std::vector<double> mean_regret(horizons.size(), 0.0);
  const int seeds = 5;
  for (int seed = 1; seed <= seeds; ++seed) {
    ExperimentConfig cfg = parse_config({{"experiment", "frechet"},
                                         {"rounds", horizons.back()},
                                         {"seed", seed},
                                         {"manifold", {{"kind", "hyperbolic"}, {"dim", 10}}},
                                         {"algorithms", json::array({"roogd"})},
                                         {"environment", {{"S", horizons.back()}, {"num_points", 20}}}});
    const FrechetStream full = gen_frechet_stream(cfg);
    const Manifold& m = *full.space;
    const FrechetConstants k = frechet_constants(cfg);
    const std::vector<Point> probes = frechet_probe_points(full, cfg);
    for (std::size_t h = 0; h < horizons.size(); ++h) {
      const auto T = static_cast<std::size_t>(horizons[h]);
      const FrechetStream s = prefix(full, T);
      const double vt = estimate_gradient_variation(s, probes);
      const double eta = roogd_static_step(k.D0, k.sigma0, k.zeta0, k.G, vt, k.L);
      OptimisticState st = roogd_init(m, m.origin(), eta);
      double alg = 0.0;
      std::vector<Point> all;
      for (std::size_t t = 0; t < T; ++t) {
        alg += frechet_loss(m, s.samples[t], st.x_cur);
        st = roogd_step(m, st, frechet_grad(m, s.samples[t], st.x_cur));
        all.insert(all.end(), s.samples[t].begin(), s.samples[t].end());
      }
      // best fixed point in hindsight: Frechet mean of every sample point
      const Point u = frechet_mean(m, all);
      double comp = 0.0;
      for (std::size_t t = 0; t < T; ++t) comp += frechet_loss(m, s.samples[t], u);
      mean_regret[h] += (alg - comp) / seeds;
    }
  }
  bool ok = true;
  std::string detail = "mean static regret";
  for (std::size_t h = 0; h < horizons.size(); ++h)
    detail += " T=" + std::to_string(horizons[h]) + ":" + fmt("%.2f", mean_regret[h]);
  detail += "; ratios";
  for (std::size_t h = 0; h + 1 < horizons.size(); ++h) {
    const double r = mean_regret[h + 1] / mean_regret[h];
    ok = ok && mean_regret[h] > 0 && r <= kRegretRatioMax;
    detail += " " + fmt("%.3f", r);
  }
  const double secs = seconds_since(t0);
  report(3, ok && secs < kStaticSeconds, detail + ", limit 1.7, < 120 s", secs);
}

// 4 ---------------------------------------------------------------------------
void dynamic_ordering() {
  const auto t0 = Clock::now();
  int good = 0;
  std::string detail;
  for (int seed = 1; seed <= 5; ++seed) {
    const ExperimentConfig cfg = parse_config({{"experiment", "frechet"},
                                               {"rounds", 2000},
                                               {"seed", seed},
                                               {"manifold", {{"kind", "hyperbolic"}, {"dim", 10}}},
                                               {"algorithms", json::array({"rogd", "roogd", "raoogd"})},
                                               {"environment", {{"mode", "abrupt"}, {"S", 250}}}});
    const json a = run_experiment(cfg).summary["algorithms"];
    const double ogd = a["rogd"]["final_cumulative_loss"], oogd = a["roogd"]["final_cumulative_loss"],
                 ada = a["raoogd"]["final_cumulative_loss"];
    if (ada <= oogd && oogd < ogd) ++good;
    char buf[160];
    std::snprintf(buf, sizeof buf, " seed%d(%.1f/%.1f/%.1f)", seed, ada, oogd, ogd);
    detail += buf;
  }
  const double secs = seconds_since(t0);
  report(4, good >= kOrderingSeedsNeeded && secs < kOrderingSeconds,
         "raoogd <= roogd < rogd on " + std::to_string(good) + "/5 seeds, need 4;" + detail + ", < 300 s", secs);
}

// 5 ---------------------------------------------------------------------------
Point quad_start(const ZeroSumGame& g, double radius, std::uint64_t seed) {
  Rng rng = Rng(seed).split({kInitStream});
  return quad_initial_point(g, radius, rng);
}

void average_iterate() {
  const auto t0 = Clock::now();
  const ZeroSumGame g = quad_logdet_game(10, 0.5, 1.0);
  const double eta = quad_default_step(*g.quad);
  const double D1 = 1.0;
  GameState st = game_init(g, quad_start(g, D1, 1));
  const std::vector<long> checkpoints = {100, 400, 1600};
  std::vector<double> scaled;
  bool within_bound = true;
  std::string detail;
  for (long T = 1; T <= checkpoints.back(); ++T) {
    // z_bar averages z_1..z_T once T - 1 steps have been taken
    if (std::find(checkpoints.begin(), checkpoints.end(), T) != checkpoints.end()) {
      const double gap = quad_duality_gap(g, g.x_of(st.z_bar), g.y_of(st.z_bar));
      const double bound = (D1 * D1 * g.smoothness_L + D1 * D1 / (2.0 * eta)) / static_cast<double>(T);
      within_bound = within_bound && gap <= bound;
      scaled.push_back(gap * static_cast<double>(T));
      detail += " T=" + std::to_string(T) + ":" + fmt("%.3g", gap * static_cast<double>(T));
    }
    st = rogda_step(g, st, eta);
  }
  const double ratio = *std::max_element(scaled.begin(), scaled.end()) /
                       *std::min_element(scaled.begin(), scaled.end());
  const double secs = seconds_since(t0);
  report(5, ratio <= kAverageRatioMax && secs < kGameSeconds,
         "gap(z_bar_T)*T" + detail + ", max/min ratio " + fmt("%.3g", ratio) +
             ", limit 3; gap below (D1^2 L + D1^2/(2 eta))/T: " + (within_bound ? "yes" : "no"),
         secs);
}

// 6 ---------------------------------------------------------------------------
void best_iterate() {
  const auto t0 = Clock::now();
  const ZeroSumGame g = quad_logdet_game(10, 0.0, 1.0);
  const double eta = 1.0 / (20.0 * g.smoothness_L);
  bool ok = true;
  std::string detail;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    GameState st = game_init(g, quad_start(g, 1.0, seed));
    double best = INFINITY;
    std::vector<double> at;
    for (long t = 1; t <= 4000; ++t) {
      best = std::min(best, g.space->norm(g.field(st.z_cur)));
      if (t == 250 || t == 1000 || t == 4000) at.push_back(best);
      st = rogda_step(g, st, eta);
    }
    ok = ok && at[2] <= kBestIterateFactor * at[1] && at[1] <= kBestIterateFactor * at[0];
    char buf[160];
    std::snprintf(buf, sizeof buf, " seed%d(%.3g/%.3g/%.3g)", static_cast<int>(seed), at[0], at[1], at[2]);
    detail += buf;
  }
  const double secs = seconds_since(t0);
  report(6, ok && secs < kGameSeconds,
         "min grad norm at T=250/1000/4000, eta=1/(20L)=" + fmt("%.3g", eta) + ";" + detail +
             ", each step <= 0.6x, < 60 s",
         secs);
}

// 7 ---------------------------------------------------------------------------
void last_iterate() {
  const auto t0 = Clock::now();
  const ZeroSumGame g = quad_logdet_game(10, 1.0, 1.0);
  const double eta = quad_default_step(*g.quad);
  GameState st = game_init(g, quad_start(g, 1.0, 1));
  std::vector<double> gn;
  for (long t = 1; t <= 2000; ++t) {
    gn.push_back(g.space->norm(g.field(st.z_cur)));
    st = rogda_step(g, st, eta);
  }
  long hit = -1;
  for (std::size_t i = 0; i < gn.size(); ++i) {
    if (gn[i] < kLastIterateGrad) {
      hit = static_cast<long>(i) + 1;
      break;
    }
  }
  // windows of 100 rounds after a 100-round burn-in
  std::vector<double> ratios;
  for (std::size_t w = 100; w + 100 < gn.size(); w += 100) ratios.push_back(gn[w + 100 - 1] / gn[w - 1]);
  double lo = INFINITY, hi = 0, mean = 0;
  bool below_one = true;
  for (double r : ratios) {
    lo = std::min(lo, r);
    hi = std::max(hi, r);
    mean += r / ratios.size();
    below_one = below_one && r < 1.0;
  }
  const double spread = (hi - lo) / mean;
  const bool contraction_ok = below_one && std::isfinite(spread) && spread < kContractionSpread;
  // diagnostic: the per-round rate before the grad norm reaches rounding level
  double rate_lo = INFINITY, rate_hi = 0;
  for (std::size_t i = 10; i + 10 < gn.size() && gn[i + 10] > 1e-13; i += 10) {
    const double r = std::pow(gn[i + 10] / gn[i], 0.1);
    rate_lo = std::min(rate_lo, r);
    rate_hi = std::max(rate_hi, r);
  }

  const ZeroSumGame g0 = quad_logdet_game(10, 0.0, 1.0);
  Point z = quad_start(g0, 1.0, 1);
  double prev = g0.space->norm(g0.field(z));
  bool gda_grows = true;
  for (long t = 1; t < 2000; ++t) {
    z = rgda_step(g0, z, 1e-3);
    const double n = g0.space->norm(g0.field(z));
    gda_grows = gda_grows && n >= prev;
    prev = n;
  }
  const bool ok = hit > 0 && hit <= 2000 && contraction_ok && gda_grows;
  char buf[512];
  std::snprintf(buf, sizeof buf,
                "R-OGDA c1=1 eta=%.3g: grad < 1e-6 at round %ld; 100-round ratios min %.3g max %.3g spread %.3g "
                "(limit < 1, spread < 0.25); per-round rate above rounding level %.4f..%.4f; "
                "R-GDA c1=0 grad norm non-decreasing: %s",
                eta, hit, lo, hi, spread, rate_lo, rate_hi, gda_grows ? "yes" : "no");
  report(7, ok, buf, seconds_since(t0));
}

// 8 ---------------------------------------------------------------------------
void boundedness() {
  const auto t0 = Clock::now();
  const double D1 = 1.0;
  const ZeroSumGame g = quad_logdet_game(10, 1.0, 1.0);
  const double zeta1 = zeta_constant(g.space->curvature().kappa, 3.0 * D1);
  const double eta = bounded_step_cap(1.0, zeta1, g.smoothness_L, quad_lipschitz_bound(*g.quad, 2.0 * D1), D1);
  double worst = 0.0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const Point z0 = quad_start(g, D1, seed);
    const Point zstar = quad_nearest_equilibrium(g, z0);
    GameState st = game_init(g, z0);
    for (long t = 1; t <= 1000; ++t) {
      worst = std::max(worst, g.space->distance(st.z_cur, zstar));
      st = rogda_step(g, st, eta);
    }
  }
  report(8, worst <= 2.0 * D1 + kBoundSlack,
         "max_t d(z_t, z*) over 10 seeds " + fmt("%.6f", worst) + " at eta " + fmt("%.4g", eta) +
             ", limit 2 D1 + 1e-6 = 2.000001",
         seconds_since(t0));
}

// 9 ---------------------------------------------------------------------------
void blowup() {
  const auto t0 = Clock::now();
  const BlowupTrace tr = correction_blowup_trace(0.1, 1.0, 50);
  bool increasing = !tr.values.empty();
  for (std::size_t i = 1; i < tr.values.size(); ++i) increasing = increasing && tr.values[i] > tr.values[i - 1];
  long crossed = -1;
  for (std::size_t i = 0; i < tr.values.size(); ++i) {
    if (tr.values[i] > kBlowupLevel) {
      crossed = static_cast<long>(i) + 1;
      break;
    }
  }
  if (crossed < 0 && tr.diverged_at) crossed = *tr.diverged_at;
  report(9, increasing && crossed > 0 && crossed < 50,
         "A_t strictly increasing: " + std::string(increasing ? "yes" : "no") + ", exceeds 1e3 at round " +
             std::to_string(crossed) + " (A_1 = " + fmt("%.4g", tr.values.front()) + ")",
         seconds_since(t0));
}

// 10 --------------------------------------------------------------------------
void holonomy() {
  const auto t0 = Clock::now();
  SphereS s(2);
  Vec p(3), a(3), b(3), z(3);
  p << 1, 0, 0;
  a << 0, 1, 0;
  b << 0, 0, 1;
  z << 0, 0.6, 0.8;
  const Point p0 = s.point(p);
  const double eps = 0.01;
  const auto corners = geodesic_rectangle(s, p0, s.tangent(p0, a), s.tangent(p0, b), eps, eps);
  const HolonomyResult h = holonomy_probe(s, corners, s.tangent(p0, z));
  const double ratio = h.defect / h.area;
  const ProbeReport suite = holonomy_suite(s, 200, 0.1, 5);
  report(10, std::abs(ratio - 1.0) <= kHolonomyRatioTol && h.defect <= h.bound && suite.max_violation <= 0.0,
         "sphere defect/area at eps=0.01 " + fmt("%.5f", ratio) + " (limit 1 +- 0.1); 200 rectangles max defect-bound " +
             fmt("%.3g", suite.max_violation) + " (limit <= 0)",
         seconds_since(t0));
}

// 11 --------------------------------------------------------------------------
void gradient_oracles() {
  const auto t0 = Clock::now();
  double worst = 0.0;
  std::string where;
  auto note = [&](const ProbeReport& r, const char* name) {
    if (r.max_violation >= worst) {
      worst = r.max_violation;
      where = name;
    }
  };
  Rng rng(77);

  const ExperimentConfig fc = parse_config({{"experiment", "frechet"}, {"rounds", 1}, {"environment", {{"S", 1}}}});
  const FrechetStream fs = gen_frechet_stream(fc);
  const Manifold& h = *fs.space;
  for (int k = 0; k < 50; ++k) {
    const Point x = random_point(h, rng, h.origin(), 1.5);
    const auto f = [&](const Point& q) { return frechet_loss(h, fs.samples[0], q); };
    note(fd_gradient_check(h, f, frechet_grad(h, fs.samples[0], x), x, 4, 1e-4, rng.next_u64()), "frechet_loss");
  }

  for (double c1 : {0.0, 0.5, 1.0}) {
    const ZeroSumGame q = quad_logdet_game(10, c1, 1.0);
    for (int k = 0; k < 50; ++k) {
      const Point X = random_point(q.M(), rng), Y = random_point(q.N(), rng);
      const auto fx = [&](const Point& p) { return q.payoff(p, Y); };
      const auto fy = [&](const Point& p) { return q.payoff(X, p); };
      note(fd_gradient_check(q.M(), fx, q.grad_x(X, Y), X, 4, 1e-4, rng.next_u64()), "quad_logdet grad_x");
      note(fd_gradient_check(q.N(), fy, q.grad_y(X, Y), Y, 4, 1e-4, rng.next_u64()), "quad_logdet grad_y");
    }
  }

  const ExperimentConfig pc = parse_config({{"experiment", "robust_pca"}});
  const ZeroSumGame r = robust_pca_game(robust_pca_data(pc), pc.game.alpha);
  for (int k = 0; k < 50; ++k) {
    const Point A = random_point(r.M(), rng), X = random_point(r.N(), rng);
    const auto fa = [&](const Point& p) { return r.payoff(p, X); };
    const auto fx = [&](const Point& p) { return r.payoff(A, p); };
    note(fd_gradient_check(r.M(), fa, r.grad_x(A, X), A, 4, 1e-4, rng.next_u64()), "robust_pca grad_A");
    note(fd_gradient_check(r.N(), fx, r.grad_y(A, X), X, 4, 1e-4, rng.next_u64()), "robust_pca grad_X");
  }
  report(11, worst <= kFdTol,
         "finite-difference relative error max " + fmt("%.3g", worst) + " (" + where +
             ") over 50 points per oracle, limit 1e-4",
         seconds_since(t0));
}

// 12 --------------------------------------------------------------------------
void determinism() {
  const auto t0 = Clock::now();
  const std::vector<json> configs = {
      {{"experiment", "frechet"}, {"rounds", 200}, {"seed", 3},
       {"algorithms", json::array({"rogd", "roogd", "roogd_corrected", "raoogd"})},
       {"environment", {{"mode", "drift"}, {"S", 50}}}},
      {{"experiment", "quadgame"}, {"rounds", 300}, {"seed", 3}, {"game", {{"c1", 0.5}}}},
      {{"experiment", "robust_pca"}, {"rounds", 100}, {"seed", 3}},
  };
  bool same = true;
  std::size_t bytes = 0;
  for (const json& j : configs) {
    const ExperimentConfig c = parse_config(j);
    const std::string a = to_csv(run_experiment(c).rows), b = to_csv(run_experiment(c).rows);
    same = same && a == b;
    bytes += a.size();
  }
  report(12, same,
         "frechet, quadgame and robust_pca reruns byte-identical: " + std::string(same ? "yes" : "no") + " (" +
             std::to_string(bytes) + " CSV bytes compared)",
         seconds_since(t0));
}

}  // namespace

int main() {
  const std::vector<std::function<void()>> criteria = {
      geometry_suite, euclidean_reduction, static_regret, dynamic_ordering, average_iterate, best_iterate,
      last_iterate,   boundedness,         blowup,        holonomy,         gradient_oracles, determinism};
  for (const auto& c : criteria) {
    try {
      c();
    } catch (const std::exception& e) {
      std::printf("FAIL criterion: unexpected error: %s\n", e.what());
      ++failures;
    }
  }
  std::printf("%d of %zu criteria failed\n", failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
