// bench: experiment runner.
//
//   bench frechet|quadgame|robust-pca|verify|sweep --config <path> --out <dir>
//         [--seed N] [--rounds N]
//
// Exit codes: 0 success, 2 config error, 3 numeric failure, 1 anything else.

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "ropt/ropt.hpp"

namespace {

using namespace ropt;
using namespace ropt::bench;

struct Options {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<long> rounds;
};

std::filesystem::path output_dir(const Options& o, const std::string& from_config) {
  if (!o.out.empty()) return o.out;
  if (!from_config.empty()) return from_config;
  throw ConfigError("no output directory: pass --out or set \"output\" in the config");
}

Experiment expected_experiment(const std::string& cmd) {
  if (cmd == "frechet") return Experiment::frechet;
  if (cmd == "quadgame") return Experiment::quadgame;
  if (cmd == "robust-pca") return Experiment::robust_pca;
  return Experiment::verify;
}

int run_single(const std::string& cmd, const Options& o) {
  ExperimentConfig cfg = load_config(o.config);
  if (cfg.experiment != expected_experiment(cmd))
    throw ConfigError("experiment: config describes '" + to_string(cfg.experiment) +
                      "' but the command is '" + cmd + "'");
  if (o.seed) cfg.seed = *o.seed;
  if (o.rounds) cfg.rounds = *o.rounds;
  validate(cfg);
  const auto dir = output_dir(o, cfg.output);
  const ExperimentResult r = run_experiment(cfg);
  write_outputs(r, dir, cfg.experiment != Experiment::verify);
  std::cout << to_string(cfg.experiment) << ": wrote " << dir.string() << "\n";
  if (r.summary.contains("algorithms")) {
    for (const auto& [name, info] : r.summary["algorithms"].items())
      std::cout << "  " << name << "  cumulative_loss=" << info["final_cumulative_loss"] << "\n";
  }
  if (r.summary.contains("max_violation"))
    std::cout << "  max_violation=" << r.summary["max_violation"] << "\n";
  return 0;
}

int run_sweep_cmd(const Options& o) {
  SweepConfig sw = parse_sweep(read_json_file(o.config));
  if (o.seed) sw.seeds = {*o.seed};
  if (o.rounds) sw.rounds = {*o.rounds};
  const auto dir = output_dir(o, sw.base.output);
  const auto entries = run_sweep(sw);
  const auto agg = write_sweep(entries, dir);
  for (const auto& e : entries) {
    std::cout << "T=" << e.config.rounds << " seed=" << e.config.seed << ": "
              << (e.result ? "ok" : "error: " + e.error) << "\n";
  }
  std::cout << "sweep: wrote " << (dir / "sweep_summary.json").string() << "\n";
  return agg["failures"].get<long>() == 0 ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Riemannian online optimization and game benchmarks"};
  app.require_subcommand(1);
  Options opt;
  for (const char* name : {"frechet", "quadgame", "robust-pca", "verify", "sweep"}) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", opt.config, "experiment config (JSON)")->required();
    sub->add_option("--out", opt.out, "output directory");
    sub->add_option("--seed", opt.seed, "override the seed");
    sub->add_option("--rounds", opt.rounds, "override the number of rounds");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }
  const std::string cmd = app.get_subcommands().front()->get_name();
  try {
    if (cmd == "sweep") return run_sweep_cmd(opt);
    return run_single(cmd, opt);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return 3;
  } catch (const DomainError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
