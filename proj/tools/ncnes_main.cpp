// Experiment runner: parses a config file, runs one or more seeded
// experiments, and writes CSV curves plus a summary table.
//
// Exit codes: 0 success, 1 run failure, 2 config error.

#include <CLI11.hpp>
#include <iostream>

#include "ncnes/experiment.hpp"

int main(int argc, char** argv) {
  CLI::App app{"ncnes - negatively correlated natural evolution strategies"};

  std::string config_path;
  std::vector<std::uint64_t> seeds;
  std::string mode;
  std::string algo;
  std::string out_dir;
  double phi = 0.0;
  bool quiet = false;

  app.add_option("--config", config_path, "experiment config file")
      ->required();
  app.add_option("--seed", seeds,
                 "seed (repeatable; overrides the config's seed list)");
  auto* mode_opt =
      app.add_option("--mode", mode, "execution mode: serial|island|hybrid")
          ->check(CLI::IsMember({"serial", "island", "hybrid"}));
  auto* algo_opt = app.add_option("--algo", algo, "algorithm: ncnes|ncs-c")
                       ->check(CLI::IsMember({"ncnes", "ncs-c"}));
  auto* out_opt = app.add_option("--out", out_dir, "output directory");
  auto* phi_opt = app.add_option("--phi", phi, "diversity trade-off override");
  app.add_flag("--quiet", quiet, "suppress progress output");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  ncnes::ConfigOverrides overrides;
  overrides.seeds = seeds;
  if (mode_opt->count() > 0) overrides.mode = mode;
  if (algo_opt->count() > 0) overrides.algo = algo;
  if (out_opt->count() > 0) overrides.out_dir = out_dir;
  if (phi_opt->count() > 0) overrides.phi = phi;
  overrides.quiet = quiet;

  const ncnes::ParseResult parsed = ncnes::parse_config(config_path, overrides);
  if (!parsed.ok()) {
    std::cerr << "config error" << (parsed.errors.size() > 1 ? "s" : "")
              << ":\n";
    for (const std::string& e : parsed.errors) std::cerr << "  - " << e << "\n";
    return 2;
  }

  return ncnes::run_experiment(*parsed.config);
}
