#pragma once

// Experiment layer: JSON configs, the synthetic hyperbolic Frechet stream,
// online and game runs, CSV/summary output and seed sweeps.

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <initializer_list>
#include <map>
#include <memory>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "ropt/core.hpp"
#include "ropt/games.hpp"
#include "ropt/manifolds.hpp"
#include "ropt/online.hpp"
#include "ropt/rng.hpp"
#include "ropt/verify.hpp"

namespace ropt::bench {

using json = nlohmann::json;

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class Experiment { frechet, quadgame, robust_pca, verify };

inline std::string to_string(Experiment e) {
  switch (e) {
    case Experiment::frechet: return "frechet";
    case Experiment::quadgame: return "quadgame";
    case Experiment::robust_pca: return "robust_pca";
    case Experiment::verify: return "verify";
  }
  return "?";
}

struct AlgorithmSpec {
  std::string name;
  std::optional<double> eta;  // default chosen per experiment when absent
};

struct EnvironmentConfig {
  std::string mode = "abrupt";  // abrupt | drift
  long S = 250;                 // stationarity window
  double drift = 0.1;           // per-round center displacement in drift mode
  double ball_radius = 1.0;     // c: radius of the sample ball around P_t
  double center_diam = 1.0;     // D: diameter of the set the centers live in
  int num_points = 20;
  double curvature_magnitude = 1.0;  // |kappa| fed to zeta
  std::optional<double> G;           // gradient bound, default center_diam + ball_radius
  std::optional<double> vt_bound;    // default: probe estimate on the generated stream
};

struct GameConfig {
  double c1 = 0.0;
  double c2 = 1.0;
  double alpha = 1.0;      // robust PCA regularization
  int num_samples = 40;    // robust PCA data size
  double init_radius = 1.0;  // quadgame: d(z_0, z*)
};

struct VerifyConfig {
  int samples = 1000;
  std::vector<ManifoldSpec> manifolds;  // empty: euclidean(3), sphere(2), hyperbolic(2), spd(3)
};

struct ExperimentConfig {
  Experiment experiment = Experiment::frechet;
  long rounds = 1000;
  std::uint64_t seed = 0;
  ManifoldSpec manifold;
  std::vector<AlgorithmSpec> algorithms;
  EnvironmentConfig environment;
  GameConfig game;
  VerifyConfig verify;
  std::string output;
  bool record_timing = false;  // wall_micros stays 0 otherwise, keeping CSVs byte-stable
};

struct ResultRow {
  long round = 0;
  std::string algorithm;
  double instantaneous_loss = 0.0;
  double cumulative_loss = 0.0;
  double cumulative_regret = 0.0;
  std::optional<double> grad_norm;
  std::int64_t wall_micros = 0;
};

struct ExperimentResult {
  std::vector<ResultRow> rows;
  json summary;
};

// ---------------------------------------------------------------------------
// Config parsing

namespace detail {

inline std::string join_path(const std::string& where, const std::string& key) {
  return where.empty() ? key : where + "." + key;
}

inline void reject_unknown(const json& j, std::initializer_list<std::string_view> allowed,
                           const std::string& where) {
  if (!j.is_object()) throw ConfigError(where.empty() ? "config: expected an object" : where + ": expected an object");
  for (const auto& [key, _] : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
      throw ConfigError("unknown config key '" + join_path(where, key) + "'");
  }
}

inline double get_double(const json& j, const char* key, const std::string& where, double def) {
  if (!j.contains(key)) return def;
  if (!j[key].is_number()) throw ConfigError(join_path(where, key) + ": expected a number");
  return j[key].get<double>();
}

inline long get_long(const json& j, const char* key, const std::string& where, long def) {
  if (!j.contains(key)) return def;
  if (!j[key].is_number_integer()) throw ConfigError(join_path(where, key) + ": expected an integer");
  return j[key].get<long>();
}

inline std::string get_string(const json& j, const char* key, const std::string& where,
                              std::string def) {
  if (!j.contains(key)) return def;
  if (!j[key].is_string()) throw ConfigError(join_path(where, key) + ": expected a string");
  return j[key].get<std::string>();
}

inline bool get_bool(const json& j, const char* key, const std::string& where, bool def) {
  if (!j.contains(key)) return def;
  if (!j[key].is_boolean()) throw ConfigError(join_path(where, key) + ": expected a boolean");
  return j[key].get<bool>();
}

inline std::uint64_t get_seed(const json& j, const char* key, const std::string& where,
                              std::uint64_t def) {
  if (!j.contains(key)) return def;
  const json& v = j[key];
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer() && v.get<long long>() >= 0) return static_cast<std::uint64_t>(v.get<long long>());
  throw ConfigError(join_path(where, key) + ": expected a non-negative integer");
}

inline ManifoldKind parse_kind(const std::string& s, const std::string& where) {
  if (s == "euclidean") return ManifoldKind::euclidean;
  if (s == "sphere") return ManifoldKind::sphere;
  if (s == "hyperbolic") return ManifoldKind::hyperbolic;
  if (s == "spd") return ManifoldKind::spd;
  throw ConfigError(where + ": unknown manifold kind '" + s + "'");
}

inline std::string kind_name(ManifoldKind k) {
  switch (k) {
    case ManifoldKind::euclidean: return "euclidean";
    case ManifoldKind::sphere: return "sphere";
    case ManifoldKind::hyperbolic: return "hyperbolic";
    case ManifoldKind::spd: return "spd";
    case ManifoldKind::product: return "product";
  }
  return "?";
}

inline ManifoldSpec parse_manifold(const json& j, const std::string& where, ManifoldSpec def) {
  reject_unknown(j, {"kind", "dim", "eig_min", "eig_max"}, where);
  ManifoldSpec s = def;
  if (j.contains("kind")) s.kind = parse_kind(get_string(j, "kind", where, ""), where + ".kind");
  s.dim = static_cast<int>(get_long(j, "dim", where, def.dim));
  s.eig_min = get_double(j, "eig_min", where, def.eig_min);
  s.eig_max = get_double(j, "eig_max", where, def.eig_max);
  if (s.dim < 1) throw ConfigError(where + ".dim: must be >= 1");
  if (!(s.eig_min > 0.0 && s.eig_max >= s.eig_min))
    throw ConfigError(where + ": eigenvalue range must satisfy 0 < eig_min <= eig_max");
  return s;
}

inline Experiment parse_experiment(const std::string& s) {
  if (s == "frechet") return Experiment::frechet;
  if (s == "quadgame") return Experiment::quadgame;
  if (s == "robust_pca" || s == "robust-pca") return Experiment::robust_pca;
  if (s == "verify") return Experiment::verify;
  throw ConfigError("experiment: unknown experiment '" + s + "'");
}

inline ManifoldSpec default_manifold(Experiment e) {
  ManifoldSpec s;
  switch (e) {
    case Experiment::frechet: s.kind = ManifoldKind::hyperbolic; s.dim = 10; break;
    case Experiment::quadgame: s.kind = ManifoldKind::spd; s.dim = 10; break;
    case Experiment::robust_pca: s.kind = ManifoldKind::spd; s.dim = 10; break;
    case Experiment::verify: break;
  }
  return s;
}

inline std::vector<std::string> allowed_algorithms(Experiment e) {
  if (e == Experiment::frechet) return {"rogd", "roogd", "roogd_corrected", "raoogd"};
  if (e == Experiment::verify) return {};
  return {"rogda", "rgda", "rceg"};
}

inline std::vector<AlgorithmSpec> default_algorithms(Experiment e) {
  if (e == Experiment::frechet) return {{"rogd", {}}, {"roogd", {}}, {"raoogd", {}}};
  if (e == Experiment::verify) return {};
  return {{"rogda", {}}, {"rgda", {}}, {"rceg", {}}};
}

}  // namespace detail

/// Checks cross-field constraints. Throws ConfigError naming the field.
inline void validate(const ExperimentConfig& c) {
  if (c.rounds < 1) throw ConfigError("rounds: must be >= 1");
  const auto allowed = detail::allowed_algorithms(c.experiment);
  std::set<std::string> seen;
  for (const auto& a : c.algorithms) {
    if (std::find(allowed.begin(), allowed.end(), a.name) == allowed.end())
      throw ConfigError("algorithms: '" + a.name + "' is not available for experiment " +
                        to_string(c.experiment));
    if (!seen.insert(a.name).second) throw ConfigError("algorithms: duplicate '" + a.name + "'");
    if (a.eta && !(*a.eta > 0.0)) throw ConfigError("algorithms." + a.name + ".eta: must be positive");
  }
  const auto& e = c.environment;
  switch (c.experiment) {
    case Experiment::frechet:
      if (c.manifold.kind != ManifoldKind::hyperbolic)
        throw ConfigError("manifold.kind: frechet runs on the hyperbolic manifold");
      if (e.mode != "abrupt" && e.mode != "drift")
        throw ConfigError("environment.mode: expected 'abrupt' or 'drift'");
      if (e.S < 1) throw ConfigError("environment.S: must be >= 1");
      if (e.num_points < 1) throw ConfigError("environment.num_points: must be >= 1");
      if (!(e.drift >= 0.0)) throw ConfigError("environment.drift: must be >= 0");
      if (!(e.ball_radius > 0.0)) throw ConfigError("environment.ball_radius: must be positive");
      if (!(e.center_diam > 0.0)) throw ConfigError("environment.center_diam: must be positive");
      if (!(e.curvature_magnitude > 0.0))
        throw ConfigError("environment.curvature_magnitude: must be positive");
      if (e.G && !(*e.G > 0.0)) throw ConfigError("environment.G: must be positive");
      if (e.vt_bound && !(*e.vt_bound >= 0.0)) throw ConfigError("environment.vt_bound: must be >= 0");
      break;
    case Experiment::quadgame:
      if (c.manifold.kind != ManifoldKind::spd) throw ConfigError("manifold.kind: quadgame runs on spd");
      if (!(c.game.c1 >= 0.0)) throw ConfigError("game.c1: must be >= 0");
      if (!(c.game.init_radius > 0.0)) throw ConfigError("game.init_radius: must be positive");
      break;
    case Experiment::robust_pca:
      if (c.manifold.kind != ManifoldKind::spd) throw ConfigError("manifold.kind: robust_pca runs on spd");
      if (c.manifold.dim < 2) throw ConfigError("manifold.dim: robust_pca needs dim >= 2");
      if (c.game.num_samples < 1) throw ConfigError("game.num_samples: must be >= 1");
      if (!(c.game.alpha >= 0.0)) throw ConfigError("game.alpha: must be >= 0");
      break;
    case Experiment::verify:
      if (c.verify.samples < 1) throw ConfigError("verify.samples: must be >= 1");
      break;
  }
}

inline ExperimentConfig parse_config(const json& j) {
  using namespace detail;
  reject_unknown(j,
                 {"experiment", "rounds", "seed", "manifold", "algorithms", "environment", "game",
                  "verify", "output", "record_timing"},
                 "");
  if (!j.contains("experiment")) throw ConfigError("experiment: required");
  ExperimentConfig c;
  c.experiment = parse_experiment(get_string(j, "experiment", "", ""));
  c.rounds = get_long(j, "rounds", "", c.rounds);
  c.seed = get_seed(j, "seed", "", 0);
  c.manifold = default_manifold(c.experiment);
  if (j.contains("manifold")) c.manifold = parse_manifold(j["manifold"], "manifold", c.manifold);
  c.output = get_string(j, "output", "", "");
  c.record_timing = get_bool(j, "record_timing", "", false);

  if (j.contains("algorithms")) {
    const json& a = j["algorithms"];
    if (!a.is_array()) throw ConfigError("algorithms: expected an array");
    for (std::size_t i = 0; i < a.size(); ++i) {
      const std::string where = "algorithms[" + std::to_string(i) + "]";
      if (a[i].is_string()) {
        c.algorithms.push_back({a[i].get<std::string>(), {}});
        continue;
      }
      reject_unknown(a[i], {"name", "eta"}, where);
      if (!a[i].contains("name")) throw ConfigError(where + ".name: required");
      AlgorithmSpec s{get_string(a[i], "name", where, ""), {}};
      if (a[i].contains("eta")) s.eta = get_double(a[i], "eta", where, 0.0);
      c.algorithms.push_back(s);
    }
  } else {
    c.algorithms = default_algorithms(c.experiment);
  }

  if (j.contains("environment")) {
    const json& e = j["environment"];
    const std::string w = "environment";
    reject_unknown(e,
                   {"mode", "S", "drift", "ball_radius", "center_diam", "num_points",
                    "curvature_magnitude", "G", "vt_bound"},
                   w);
    auto& env = c.environment;
    env.mode = get_string(e, "mode", w, env.mode);
    env.S = get_long(e, "S", w, env.S);
    env.drift = get_double(e, "drift", w, env.drift);
    env.ball_radius = get_double(e, "ball_radius", w, env.ball_radius);
    env.center_diam = get_double(e, "center_diam", w, env.center_diam);
    env.num_points = static_cast<int>(get_long(e, "num_points", w, env.num_points));
    env.curvature_magnitude = get_double(e, "curvature_magnitude", w, env.curvature_magnitude);
    if (e.contains("G")) env.G = get_double(e, "G", w, 0.0);
    if (e.contains("vt_bound")) env.vt_bound = get_double(e, "vt_bound", w, 0.0);
  }
  if (j.contains("game")) {
    const json& g = j["game"];
    const std::string w = "game";
    reject_unknown(g, {"c1", "c2", "alpha", "num_samples", "init_radius"}, w);
    c.game.c1 = get_double(g, "c1", w, c.game.c1);
    c.game.c2 = get_double(g, "c2", w, c.game.c2);
    c.game.alpha = get_double(g, "alpha", w, c.game.alpha);
    c.game.num_samples = static_cast<int>(get_long(g, "num_samples", w, c.game.num_samples));
    c.game.init_radius = get_double(g, "init_radius", w, c.game.init_radius);
  }
  if (j.contains("verify")) {
    const json& v = j["verify"];
    reject_unknown(v, {"samples", "manifolds"}, "verify");
    c.verify.samples = static_cast<int>(get_long(v, "samples", "verify", c.verify.samples));
    if (v.contains("manifolds")) {
      if (!v["manifolds"].is_array()) throw ConfigError("verify.manifolds: expected an array");
      for (std::size_t i = 0; i < v["manifolds"].size(); ++i)
        c.verify.manifolds.push_back(parse_manifold(
            v["manifolds"][i], "verify.manifolds[" + std::to_string(i) + "]", ManifoldSpec{}));
    }
  }
  validate(c);
  return c;
}

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config file '" + path + "' is not valid JSON: " + e.what());
  }
}

inline ExperimentConfig load_config(const std::string& path) {
  return parse_config(read_json_file(path));
}

// ---------------------------------------------------------------------------
// Hyperbolic Frechet stream

struct FrechetStream {
  std::shared_ptr<const HyperbolicH> space;
  std::vector<Point> centers;               // P_1..P_T
  std::vector<std::vector<Point>> samples;  // A_{t,1..N}
  std::vector<bool> reselected;             // P_t drawn afresh this round
};

// Child-stream tags. Centers use one sequential stream, each sample
// A_{t,i} its own child stream keyed by (t, i).
inline constexpr std::uint64_t kCenterStream = 1;
inline constexpr std::uint64_t kSampleStream = 2;
inline constexpr std::uint64_t kProbeStream = 3;
inline constexpr std::uint64_t kInitStream = 4;
inline constexpr std::uint64_t kDataStream = 5;

/// Abrupt mode: P_t is redrawn within the ball of diameter center_diam around
/// the origin every S rounds and held fixed otherwise. Drift mode: P_t moves
/// `drift` along a random geodesic every round and is redrawn every S rounds.
/// A_{t,i} is drawn within ball_radius of P_t.
inline FrechetStream gen_frechet_stream(const ExperimentConfig& cfg) {
  if (cfg.manifold.kind != ManifoldKind::hyperbolic)
    throw ConfigError("manifold.kind: frechet stream needs the hyperbolic manifold");
  const auto& env = cfg.environment;
  FrechetStream s;
  auto h = std::make_shared<HyperbolicH>(cfg.manifold.dim);
  s.space = h;
  const Rng root(cfg.seed);
  Rng centers = root.split({kCenterStream});
  const Point origin = h->origin();
  const auto T = static_cast<std::size_t>(cfg.rounds);
  s.centers.reserve(T);
  s.samples.reserve(T);
  for (std::size_t t = 1; t <= T; ++t) {
    const bool redraw = (t - 1) % static_cast<std::size_t>(env.S) == 0;
    if (redraw) {
      s.centers.push_back(random_point(*h, centers, origin, 0.5 * env.center_diam));
    } else if (env.mode == "drift") {
      const Point& p = s.centers.back();
      s.centers.push_back(h->exp(p, random_tangent(*h, p, centers, env.drift)));
    } else {
      s.centers.push_back(s.centers.back());
    }
    s.reselected.push_back(redraw);
    std::vector<Point> pts;
    pts.reserve(env.num_points);
    for (int i = 0; i < env.num_points; ++i) {
      Rng r = root.split({kSampleStream, t, static_cast<std::uint64_t>(i)});
      pts.push_back(random_point(*h, r, s.centers.back(), env.ball_radius));
    }
    s.samples.push_back(std::move(pts));
  }
  return s;
}

/// f(x) = 1/(2N) sum_i d^2(x, A_i).
inline double frechet_loss(const Manifold& m, const std::vector<Point>& A, const Point& x) {
  double s = 0.0;
  for (const auto& a : A) {
    const double d = m.distance(x, a);
    s += d * d;
  }
  return 0.5 * s / static_cast<double>(A.size());
}

/// grad f(x) = -(1/N) sum_i log_x(A_i).
inline TangentVector frechet_grad(const Manifold& m, const std::vector<Point>& A, const Point& x) {
  Vec g = Vec::Zero(m.ambient_size());
  for (const auto& a : A) g -= m.log_raw(x.coords, a.coords);
  return TangentVector{x, m.project_tangent_raw(x.coords, g / static_cast<double>(A.size()))};
}

/// Fixed points at which gradient variation is probed, drawn within
/// center_diam/2 + ball_radius of the origin.
inline std::vector<Point> frechet_probe_points(const FrechetStream& s, const ExperimentConfig& cfg,
                                               int count = 14) {
  Rng r = Rng(cfg.seed).split({kProbeStream});
  std::vector<Point> out;
  const double radius = 0.5 * cfg.environment.center_diam + cfg.environment.ball_radius;
  for (int i = 0; i < count; ++i) out.push_back(random_point(*s.space, r, s.space->origin(), radius));
  return out;
}

/// sum_t max_p |grad f_t(p) - grad f_{t-1}(p)|^2 over a fixed probe set.
inline double estimate_gradient_variation(const FrechetStream& s, const std::vector<Point>& probes) {
  double v = 0.0;
  for (std::size_t t = 1; t < s.samples.size(); ++t) {
    double worst = 0.0;
    for (const auto& p : probes) {
      const TangentVector d =
          frechet_grad(*s.space, s.samples[t], p) - frechet_grad(*s.space, s.samples[t - 1], p);
      worst = std::max(worst, s.space->inner(p, d, d));
    }
    v += worst;
  }
  return v;
}

/// Constants shared by the Frechet-stream learners.
struct FrechetConstants {
  double D0 = 1.0;
  double sigma0 = 1.0;
  double zeta0 = 1.0;
  double L = 1.0;
  double G = 1.0;
};

inline FrechetConstants frechet_constants(const ExperimentConfig& cfg) {
  const auto& env = cfg.environment;
  FrechetConstants k;
  k.D0 = env.center_diam;
  k.sigma0 = 1.0;  // K = 0 upper bound on a negatively curved space
  k.zeta0 = zeta_constant(-env.curvature_magnitude, k.D0);
  k.L = k.zeta0;
  k.G = env.G.value_or(env.center_diam + env.ball_radius);
  return k;
}

/// eta <= sigma0 / (4 zeta0 L).
inline double roogd_step_cap(double sigma0, double zeta0, double L) {
  return sigma0 / (4.0 * zeta0 * L);
}

/// eta* = min(sqrt(D0^2 sigma0 / (4 zeta0^2 (G^2 + V_T))), sigma0 / (4 zeta0 L)).
inline double roogd_static_step(double D0, double sigma0, double zeta0, double G, double V_T,
                                double L) {
  return std::min(std::sqrt(D0 * D0 * sigma0 / (4.0 * zeta0 * zeta0 * (G * G + V_T))),
                  roogd_step_cap(sigma0, zeta0, L));
}

// ---------------------------------------------------------------------------
// Runners

namespace detail {

using Clock = std::chrono::steady_clock;

inline std::int64_t micros_since(Clock::time_point t0, bool enabled) {
  if (!enabled) return 0;
  return std::chrono::duration_cast<std::chrono::microseconds>(Clock::now() - t0).count();
}

inline json trajectory_stats(const std::vector<double>& v) {
  if (v.empty()) return json::object();
  double lo = v.front(), hi = v.front(), sum = 0.0;
  for (double x : v) {
    lo = std::min(lo, x);
    hi = std::max(hi, x);
    sum += x;
  }
  return {{"first", v.front()}, {"final", v.back()}, {"min", lo}, {"max", hi},
          {"mean", sum / static_cast<double>(v.size())}};
}

inline void require_finite(double v, const std::string& what, long t) {
  if (!std::isfinite(v))
    throw NumericError(what + ": non-finite value at round " + std::to_string(t));
}

}  // namespace detail

inline ExperimentResult run_frechet(const ExperimentConfig& cfg) {
  const FrechetStream s = gen_frechet_stream(cfg);
  const Manifold& m = *s.space;
  const auto T = static_cast<std::size_t>(cfg.rounds);
  const FrechetConstants k = frechet_constants(cfg);

  std::vector<Point> comparators;
  std::vector<double> comp_loss;
  comparators.reserve(T);
  for (const auto& A : s.samples) {
    comparators.push_back(frechet_mean(m, A));
    comp_loss.push_back(frechet_loss(m, A, comparators.back()));
  }
  const std::vector<Point> probes = frechet_probe_points(s, cfg);
  const double vt_estimate = estimate_gradient_variation(s, probes);
  const double vt_bound = cfg.environment.vt_bound.value_or(vt_estimate);
  double path_length = 0.0;
  for (std::size_t t = 1; t < T; ++t) path_length += m.distance(comparators[t - 1], comparators[t]);

  ExperimentResult res;
  json algs = json::object();
  const Point origin = m.origin();
  for (const auto& spec : cfg.algorithms) {
    json info;
    double eta = 0.0;
    std::optional<OptimisticState> oo;
    std::optional<CorrectedState> cs;
    std::optional<AoogdState> ao;
    Point x = origin;
    if (spec.name == "rogd") {
      eta = spec.eta.value_or(k.D0 / (k.G * std::sqrt(static_cast<double>(T))));
    } else if (spec.name == "roogd") {
      eta = spec.eta.value_or(roogd_static_step(k.D0, k.sigma0, k.zeta0, k.G, vt_bound, k.L));
      oo = roogd_init(m, origin, eta);
    } else if (spec.name == "roogd_corrected") {
      eta = spec.eta.value_or(roogd_static_step(k.D0, k.sigma0, k.zeta0, k.G, vt_bound, k.L));
      cs = corrected_init(m, origin, eta);
    } else {
      AoogdConfig ac =
          aoogd_configure(cfg.rounds, k.D0, k.G, k.L, k.sigma0, k.zeta0, vt_bound);
      if (spec.eta) {
        // an explicit eta rescales the pool so that it starts there
        const double f = *spec.eta / ac.pool.etas.front();
        for (double& e : ac.pool.etas) e *= f;
      }
      ao = aoogd_init(m, origin, ac);
      info["pool"] = ac.pool.etas;
      info["beta"] = ac.beta;
    }
    if (!ao) info["eta"] = eta;

    RegretLedger ledger;
    std::vector<double> grad_norms;
    const auto t0 = detail::Clock::now();
    for (std::size_t i = 0; i < T; ++i) {
      const long t = static_cast<long>(i) + 1;
      const auto& A = s.samples[i];
      const GradientOracle grad_cur = [&](const Point& p) { return frechet_grad(m, A, p); };
      if (oo) x = oo->x_cur;
      if (cs) x = cs->x_cur;
      if (ao) {
        GradientOracle grad_prev;
        if (i > 0) grad_prev = [&](const Point& p) { return frechet_grad(m, s.samples[i - 1], p); };
        AoogdRoundResult r = aoogd_round(m, *ao, grad_cur, grad_prev);
        x = r.played;
        ao = std::move(r.next);
      }
      const double loss = frechet_loss(m, A, x);
      detail::require_finite(loss, spec.name, t);
      std::vector<GradientPair> pairs;
      if (i > 0) {
        std::vector<Point> pts = probes;
        pts.push_back(comparators[i]);
        pts.push_back(x);
        for (const auto& p : pts)
          pairs.push_back({frechet_grad(m, A, p), frechet_grad(m, s.samples[i - 1], p)});
      }
      ledger = regret_update(m, ledger, loss, comp_loss[i], comparators[i],
                             i > 0 ? std::optional<Point>(comparators[i - 1]) : std::nullopt, pairs);
      note_excursion(m, ledger, origin, x);
      const TangentVector g = grad_cur(x);
      grad_norms.push_back(m.norm(g));
      if (spec.name == "rogd") x = rogd_step(m, x, g, eta);
      if (oo) oo = roogd_step(m, *oo, g);
      if (cs) cs = roogd_corrected_step(m, *cs, g);
      res.rows.push_back({t, spec.name, loss, ledger.cum_alg_loss, ledger.regret(), std::nullopt,
                          detail::micros_since(t0, cfg.record_timing)});
    }
    info["final_cumulative_loss"] = ledger.cum_alg_loss;
    info["final_regret"] = ledger.regret();
    info["comparator_loss"] = ledger.cum_comparator_loss;
    info["path_length"] = ledger.path_length;
    info["grad_variation"] = ledger.grad_variation;
    info["max_excursion"] = ledger.max_excursion;
    info["grad_norm"] = detail::trajectory_stats(grad_norms);
    algs[spec.name] = info;
  }
  res.summary = {{"experiment", "frechet"},
                 {"rounds", cfg.rounds},
                 {"seed", cfg.seed},
                 {"path_length", path_length},
                 {"grad_variation_estimate", vt_estimate},
                 {"vt_bound", vt_bound},
                 {"constants",
                  {{"D0", k.D0}, {"sigma0", k.sigma0}, {"zeta0", k.zeta0}, {"L", k.L}, {"G", k.G}}},
                 {"algorithms", algs}};
  return res;
}

/// Starting point at distance `radius` from the nearest equilibrium of the
/// logdet game: random X, Y rescaled so (logdet X, logdet Y) = radius sqrt(d) (cos a, sin a).
inline Point quad_initial_point(const ZeroSumGame& g, double radius, Rng& rng) {
  const auto& spd = static_cast<const SPDManifold&>(g.M());
  const double d = spd.matrix_dim();
  const double a = 2.0 * std::numbers::pi * rng.uniform();
  const double target[2] = {radius * std::sqrt(d) * std::cos(a), radius * std::sqrt(d) * std::sin(a)};
  std::vector<Point> parts;
  for (int k = 0; k < 2; ++k) {
    const Point p = random_point(spd, rng);
    const double u = spd.logdet(p.coords);
    parts.push_back(spd.point(std::exp((target[k] - u) / d) * p.coords));
  }
  return g.join(parts[0], parts[1]);
}

/// Default step for the logdet game: 0.5 for c1 <= 0.1 and 0.2 otherwise,
/// divided by d because the logdet dynamics move at d times the step.
/// (0.5 is unstable from c1 = 0.5 on: spectral radius 1.096 there.)
inline double quad_default_step(const QuadLogdetParams& p) {
  return (p.c1 <= 0.1 ? 0.5 : 0.2) / static_cast<double>(p.d);
}

inline std::vector<Point> robust_pca_data(const ExperimentConfig& cfg) {
  SPDManifold spd(cfg.manifold.dim, cfg.manifold.eig_min, cfg.manifold.eig_max);
  std::vector<Point> data;
  for (int i = 0; i < cfg.game.num_samples; ++i) {
    Rng r = Rng(cfg.seed).split({kDataStream, static_cast<std::uint64_t>(i)});
    data.push_back(random_point(spd, r));
  }
  return data;
}

inline ExperimentResult run_game(const ExperimentConfig& cfg) {
  const bool quad = cfg.experiment == Experiment::quadgame;
  const ZeroSumGame g = quad ? quad_logdet_game(cfg.manifold.dim, cfg.game.c1, cfg.game.c2)
                             : robust_pca_game(robust_pca_data(cfg), cfg.game.alpha);
  const Manifold& m = *g.space;
  Rng init_rng = Rng(cfg.seed).split({kInitStream});
  Point z0;
  if (quad) {
    z0 = quad_initial_point(g, cfg.game.init_radius, init_rng);
  } else {
    const Point a0 = g.M().origin();
    z0 = g.join(a0, random_point(g.N(), init_rng));
  }
  const std::optional<Point> z_star = quad ? std::optional<Point>(quad_nearest_equilibrium(g, z0))
                                           : std::nullopt;
  const double comparator = g.equilibrium_value.value_or(0.0);

  ExperimentResult res;
  json algs = json::object();
  for (const auto& spec : cfg.algorithms) {
    const double eta = spec.eta.value_or(quad ? quad_default_step(*g.quad) : 0.07);
    GameState st = game_init(g, z0);
    Point z = z0;
    Point z_bar = z0;
    double cum = 0.0, cum_regret = 0.0, max_dist = 0.0;
    std::vector<double> grad_norms;
    const auto t0 = detail::Clock::now();
    for (long t = 1; t <= cfg.rounds; ++t) {
      if (spec.name == "rogda") z = st.z_cur;
      const double loss = g.value(z);
      detail::require_finite(loss, spec.name, t);
      const double gn = m.norm(g.field(z));
      detail::require_finite(gn, spec.name, t);
      grad_norms.push_back(gn);
      cum += loss;
      cum_regret += loss - comparator;
      if (z_star) max_dist = std::max(max_dist, m.distance(z, *z_star));
      if (t > 1) z_bar = geodesic_average(m, z_bar, z, t - 1);
      res.rows.push_back({t, spec.name, loss, cum, cum_regret, gn,
                          detail::micros_since(t0, cfg.record_timing)});
      if (spec.name == "rogda") {
        st = rogda_step(g, st, eta);
      } else if (spec.name == "rgda") {
        z = rgda_step(g, z, eta);
      } else {
        z = rceg_step(g, z, eta);
      }
    }
    json info;
    info["eta"] = eta;
    info["final_cumulative_loss"] = cum;
    info["final_regret"] = cum_regret;
    info["grad_norm"] = detail::trajectory_stats(grad_norms);
    info["best_grad_norm"] = *std::min_element(grad_norms.begin(), grad_norms.end());
    info["final_grad_norm"] = grad_norms.back();
    const Point& z_last = spec.name == "rogda" ? st.z_cur : z;
    if (g.residual) {
      const Vec r = g.residual(g.x_of(z_last), g.y_of(z_last));
      info["ne_residual"] = std::vector<double>(r.data(), r.data() + r.size());
    }
    if (quad) {
      info["max_distance_to_equilibrium"] = max_dist;
      if (g.quad->c1 > 0.0) {
        info["duality_gap_average"] = quad_duality_gap(g, g.x_of(z_bar), g.y_of(z_bar));
        info["duality_gap_last"] = quad_duality_gap(g, g.x_of(z_last), g.y_of(z_last));
      }
    }
    algs[spec.name] = info;
  }
  res.summary = {{"experiment", to_string(cfg.experiment)},
                 {"rounds", cfg.rounds},
                 {"seed", cfg.seed},
                 {"comparator_value", comparator},
                 {"mu", g.mu},
                 {"smoothness_L", g.smoothness_L},
                 {"algorithms", algs}};
  if (quad) {
    res.summary["game"] = {{"d", g.quad->d}, {"c1", g.quad->c1}, {"c2", g.quad->c2},
                           {"init_radius", cfg.game.init_radius}};
  } else {
    res.summary["game"] = {{"d", cfg.manifold.dim}, {"alpha", cfg.game.alpha},
                           {"num_samples", cfg.game.num_samples}};
  }
  return res;
}

/// Geometry, gradient-oracle and recursion checks as one JSON report.
inline ExperimentResult run_verify(const ExperimentConfig& cfg) {
  std::vector<ManifoldSpec> specs = cfg.verify.manifolds;
  if (specs.empty()) {
    for (auto [kind, dim] : {std::pair{ManifoldKind::euclidean, 3}, std::pair{ManifoldKind::sphere, 2},
                             std::pair{ManifoldKind::hyperbolic, 2}, std::pair{ManifoldKind::spd, 3}}) {
      ManifoldSpec s;
      s.kind = kind;
      s.dim = dim;
      specs.push_back(s);
    }
  }
  const int n = cfg.verify.samples;
  const Rng root(cfg.seed);
  std::uint64_t tag = 0;
  auto next_seed = [&] { return root.split({++tag}).next_u64(); };

  json probes = json::array();
  for (const auto& spec : specs) {
    const ManifoldPtr m = make_manifold(spec);
    const bool sphere = spec.kind == ManifoldKind::sphere;
    const double tri_diam = sphere ? std::numbers::pi / 2.0 - 0.1 : 2.0;
    const double radius = sphere ? 0.5 * tri_diam : 1.0;
    for (ProbeReport r : {roundtrip_probe(*m, n, radius, next_seed()),
                          isometry_probe(*m, n, radius, next_seed()),
                          distance_log_probe(*m, n, radius, next_seed()),
                          triangle_comparison_suite(*m, n, tri_diam, next_seed()),
                          holonomy_suite(*m, std::min(n, 200), 0.1, next_seed())}) {
      json j = to_json(r);
      j["manifold"] = m->name();
      probes.push_back(j);
    }
  }

  // gradient oracles at random points
  const int n_points = 50;
  auto fd_over_points = [&](const std::string& label, const Manifold& space,
                            const std::function<double(const Point&)>& f,
                            const std::function<TangentVector(const Point&)>& grad,
                            const std::function<Point(Rng&)>& draw) {
    ProbeReport agg{label};
    Rng r = root.split({++tag});
    for (int i = 0; i < n_points; ++i) {
      const Point x = draw(r);
      const ProbeReport p = fd_gradient_check(space, f, grad(x), x, 4, 1e-5, r.next_u64());
      agg.record(p.max_violation, [&] { return p.worst_case; });
    }
    json j = to_json(agg);
    j["manifold"] = space.name();
    probes.push_back(j);
  };
  {
    HyperbolicH h(4);
    Rng r = root.split({++tag});
    std::vector<Point> A;
    for (int i = 0; i < 10; ++i) A.push_back(random_point(h, r, h.origin(), 1.0));
    fd_over_points("fd_frechet_loss", h, [&](const Point& x) { return frechet_loss(h, A, x); },
                   [&](const Point& x) { return frechet_grad(h, A, x); },
                   [&](Rng& rr) { return random_point(h, rr, h.origin(), 1.5); });
  }
  {
    const ZeroSumGame q = quad_logdet_game(3, 0.5, 1.0);
    fd_over_points("fd_quad_logdet", *q.space, [&](const Point& z) { return q.value(z); },
                   [&](const Point& z) {
                     return q.space->join(z, {q.grad_x(q.x_of(z), q.y_of(z)),
                                              q.grad_y(q.x_of(z), q.y_of(z))});
                   },
                   [&](Rng& rr) { return random_point(*q.space, rr); });
  }
  {
    ExperimentConfig pc = cfg;
    pc.manifold.kind = ManifoldKind::spd;
    pc.manifold.dim = 3;
    pc.game.num_samples = 8;
    const ZeroSumGame p = robust_pca_game(robust_pca_data(pc), 1.0);
    fd_over_points("fd_robust_pca", *p.space, [&](const Point& z) { return p.value(z); },
                   [&](const Point& z) {
                     return p.space->join(z, {p.grad_x(p.x_of(z), p.y_of(z)),
                                              p.grad_y(p.x_of(z), p.y_of(z))});
                   },
                   [&](Rng& rr) { return random_point(*p.space, rr); });
  }

  const BlowupTrace bt = correction_blowup_trace(0.1, 1.0, 50);
  json blow = {{"etaG", 0.1}, {"K_m", 1.0}, {"values", bt.values}};
  blow["diverged_at"] = bt.diverged_at ? json(*bt.diverged_at) : json(nullptr);

  double worst = 0.0;
  for (const auto& p : probes) worst = std::max(worst, p["max_violation"].get<double>());
  ExperimentResult res;
  res.summary = {{"experiment", "verify"},
                 {"seed", cfg.seed},
                 {"samples", n},
                 {"probes", probes},
                 {"max_violation", worst},
                 {"correction_blowup", blow}};
  return res;
}

inline ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  validate(cfg);
  switch (cfg.experiment) {
    case Experiment::frechet: return run_frechet(cfg);
    case Experiment::quadgame:
    case Experiment::robust_pca: return run_game(cfg);
    case Experiment::verify: return run_verify(cfg);
  }
  throw ConfigError("experiment: unknown");
}

// ---------------------------------------------------------------------------
// Output

inline constexpr const char* kCsvHeader =
    "round,algorithm,instantaneous_loss,cumulative_loss,cumulative_regret,grad_norm,wall_micros\n";

inline std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string to_csv(const std::vector<ResultRow>& rows) {
  std::string out = kCsvHeader;
  for (const auto& r : rows) {
    out += std::to_string(r.round);
    out += ',';
    out += r.algorithm;
    out += ',';
    out += format_real(r.instantaneous_loss);
    out += ',';
    out += format_real(r.cumulative_loss);
    out += ',';
    out += format_real(r.cumulative_regret);
    out += ',';
    if (r.grad_norm) out += format_real(*r.grad_norm);
    out += ',';
    out += std::to_string(r.wall_micros);
    out += '\n';
  }
  return out;
}

inline void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + p.string() + "'");
  out << text;
  if (!out) throw std::runtime_error("write failed for '" + p.string() + "'");
}

/// results.csv (not for verify) and summary.json in `dir`.
inline void write_outputs(const ExperimentResult& r, const std::filesystem::path& dir,
                          bool with_csv = true) {
  std::filesystem::create_directories(dir);
  if (with_csv) write_text(dir / "results.csv", to_csv(r.rows));
  write_text(dir / "summary.json", r.summary.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// Sweeps

struct SweepConfig {
  ExperimentConfig base;
  std::vector<std::uint64_t> seeds;
  std::vector<long> rounds;
};

inline SweepConfig parse_sweep(const json& j) {
  detail::reject_unknown(j, {"base", "seeds", "rounds"}, "");
  if (!j.contains("base")) throw ConfigError("base: required");
  SweepConfig s;
  s.base = parse_config(j["base"]);
  if (j.contains("seeds")) {
    if (!j["seeds"].is_array()) throw ConfigError("seeds: expected an array");
    for (std::size_t i = 0; i < j["seeds"].size(); ++i) {
      const json& v = j["seeds"][i];
      if (!v.is_number_integer() || v.get<long long>() < 0)
        throw ConfigError("seeds[" + std::to_string(i) + "]: expected a non-negative integer");
      s.seeds.push_back(v.get<std::uint64_t>());
    }
  }
  if (j.contains("rounds")) {
    if (!j["rounds"].is_array()) throw ConfigError("rounds: expected an array");
    for (std::size_t i = 0; i < j["rounds"].size(); ++i) {
      const json& v = j["rounds"][i];
      if (!v.is_number_integer() || v.get<long>() < 1)
        throw ConfigError("rounds[" + std::to_string(i) + "]: expected an integer >= 1");
      s.rounds.push_back(v.get<long>());
    }
  }
  if (s.seeds.empty()) s.seeds.push_back(s.base.seed);
  if (s.rounds.empty()) s.rounds.push_back(s.base.rounds);
  return s;
}

struct SweepEntry {
  ExperimentConfig config;
  std::optional<ExperimentResult> result;
  std::string error;  // set when the run failed
};

/// Runs every (rounds, seed) pair on up to `workers` threads (0: hardware
/// concurrency). A failing run is recorded in its entry; the others proceed.
inline std::vector<SweepEntry> run_sweep(const SweepConfig& sw, unsigned workers = 0) {
  std::vector<SweepEntry> entries;
  for (long T : sw.rounds) {
    for (std::uint64_t seed : sw.seeds) {
      SweepEntry e;
      e.config = sw.base;
      e.config.rounds = T;
      e.config.seed = seed;
      entries.push_back(std::move(e));
    }
  }
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = std::min<unsigned>(workers, static_cast<unsigned>(entries.size()));
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < entries.size(); i = next++) {
      try {
        entries[i].result = run_experiment(entries[i].config);
      } catch (const std::exception& ex) {
        entries[i].error = ex.what();
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  for (auto& th : pool) th.join();
  return entries;
}

namespace detail {

// Scalar leaves of a summary's per-algorithm block, flattened as "a.b".
inline void numeric_leaves(const json& j, const std::string& prefix,
                           std::vector<std::pair<std::string, double>>& out) {
  for (const auto& [key, v] : j.items()) {
    const std::string name = prefix.empty() ? key : prefix + "." + key;
    if (v.is_number()) {
      out.emplace_back(name, v.get<double>());
    } else if (v.is_object()) {
      numeric_leaves(v, name, out);
    }
  }
}

}  // namespace detail

/// Entry list plus mean and sample standard deviation of every scalar
/// per-algorithm metric, grouped by round count.
inline json aggregate_sweep(const std::vector<SweepEntry>& entries) {
  json list = json::array();
  std::map<long, std::map<std::string, std::map<std::string, std::vector<double>>>> acc;
  long failures = 0;
  for (const auto& e : entries) {
    json item = {{"rounds", e.config.rounds}, {"seed", e.config.seed}};
    if (!e.result) {
      item["status"] = "error";
      item["error"] = e.error;
      ++failures;
    } else {
      item["status"] = "ok";
      const json& s = e.result->summary;
      if (s.contains("algorithms")) {
        item["algorithms"] = s["algorithms"];
        for (const auto& [alg, block] : s["algorithms"].items()) {
          std::vector<std::pair<std::string, double>> leaves;
          detail::numeric_leaves(block, "", leaves);
          for (const auto& [name, v] : leaves) acc[e.config.rounds][alg][name].push_back(v);
        }
      } else if (s.contains("max_violation")) {
        item["max_violation"] = s["max_violation"];
      }
    }
    list.push_back(item);
  }
  json groups = json::array();
  for (const auto& [T, by_alg] : acc) {
    json g = {{"rounds", T}};
    json algs = json::object();
    for (const auto& [alg, metrics] : by_alg) {
      json mj = json::object();
      for (const auto& [name, vals] : metrics) {
        double mean = 0.0;
        for (double v : vals) mean += v;
        mean /= static_cast<double>(vals.size());
        double var = 0.0;
        for (double v : vals) var += (v - mean) * (v - mean);
        const double sd = vals.size() > 1 ? std::sqrt(var / static_cast<double>(vals.size() - 1)) : 0.0;
        mj[name] = {{"mean", mean}, {"std", sd}, {"n", vals.size()}};
      }
      algs[alg] = mj;
    }
    g["algorithms"] = algs;
    groups.push_back(g);
  }
  return {{"entries", list}, {"by_rounds", groups}, {"failures", failures}};
}

/// Writes each run to dir/T<rounds>_seed<seed>/ and the aggregate to
/// dir/sweep_summary.json. Returns the aggregate.
inline json write_sweep(const std::vector<SweepEntry>& entries, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  for (const auto& e : entries) {
    if (!e.result) continue;
    const auto sub = dir / ("T" + std::to_string(e.config.rounds) + "_seed" + std::to_string(e.config.seed));
    write_outputs(*e.result, sub, e.config.experiment != Experiment::verify);
  }
  json agg = aggregate_sweep(entries);
  write_text(dir / "sweep_summary.json", agg.dump(2) + "\n");
  return agg;
}

}  // namespace ropt::bench
