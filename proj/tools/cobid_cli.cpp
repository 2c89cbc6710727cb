// SPDX-License-Identifier: Apache-2.0
//
// cobid: train and evaluate coordinated DA/ID/FCR battery bidding policies.
//
// Settings precedence: built-in defaults < --config file < command-line flags.
// Exit codes: 0 ok, 1 configuration error, 2 data error, 3 numerical failure.
#include <iostream>
#include <optional>

#include <omp.h>

#include "CLI11.hpp"
#include "cobid/errors.hpp"
#include "cobid/lattice.hpp"
#include "cobid/pipeline.hpp"
#include "cobid/policy_io.hpp"

namespace {

struct Overrides {
  std::string config;
  std::optional<std::string> markets;
  std::optional<double> fcr_scale;
  bool no_id_constraints = false;
  std::optional<double> penalty;
  std::optional<int> iterations;
  std::optional<int> runs;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::optional<int> days;
  std::optional<std::string> out;
};

cobid::RunConfig resolve(const Overrides& o) {
  cobid::RunConfig cfg = o.config.empty() ? cobid::RunConfig{} : cobid::load_config(o.config);
  if (o.markets) cfg.model.markets = cobid::MarketSet::parse(*o.markets);
  if (o.fcr_scale) cfg.model.fcr_price_scale = *o.fcr_scale;
  if (o.no_id_constraints) cfg.model.id_constraints = false;
  if (o.penalty) cfg.battery.penalty_eur_per_mwh = *o.penalty;
  if (o.iterations) cfg.training.max_iterations = *o.iterations;
  if (o.runs) cfg.simulate.runs = *o.runs;
  if (o.seed) cfg.training.seed = *o.seed;
  if (o.threads) cfg.threads = *o.threads;
  if (o.days) cfg.days = *o.days;
  if (o.out) cfg.output_dir = *o.out;
  cfg.validate();
  if (cfg.threads > 0) omp_set_num_threads(cfg.threads);
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cobid: coordinated battery bidding in DA, ID and FCR markets"};
  app.require_subcommand(0, 1);
  Overrides o;
  bool version = false;
  bool print_config = false;
  app.add_flag("--version", version, "Print tool and artifact-format versions");
  app.add_flag("--print-config", print_config, "Print the resolved configuration and exit");
  app.add_option("-c,--config", o.config, "Config file (TOML-style sections)");
  app.add_option("--markets", o.markets, "Enabled markets, e.g. fcr,da");
  app.add_option("--fcr-scale", o.fcr_scale, "Multiplier on FCR prices");
  app.add_flag("--no-id-constraints", o.no_id_constraints, "Drop the ID storage-consistency constraints (ablation)");
  app.add_option("--penalty", o.penalty, "Slack penalty in EUR/MWh (e.g. 3000, 10000, 100000)");
  app.add_option("--iterations", o.iterations, "Maximum SDDP iterations");
  app.add_option("--runs", o.runs, "Simulation runs");
  app.add_option("--seed", o.seed, "Training seed");
  app.add_option("--threads", o.threads, "Worker thread cap")->check(CLI::NonNegativeNumber);
  app.add_option("--days", o.days, "Horizon length in days");
  app.add_option("--out", o.out, "Output directory");

  bool sweep = false;
  auto* synth = app.add_subcommand("synth", "Generate synthetic prices, fundamentals and forecasts");
  auto* decompose = app.add_subcommand("decompose", "Fit DA and FCR fundamentals models");
  auto* cluster = app.add_subcommand("cluster", "Cluster residual windows, estimate transitions and ID spreads");
  auto* chain = app.add_subcommand("chain", "Assemble the Markov price lattice");
  auto* train = app.add_subcommand("train", "Train a policy with SDDP");
  auto* simulate = app.add_subcommand("simulate", "Simulate the trained policy and write reports");
  auto* report = app.add_subcommand("report", "Re-render report.csv, or run the market-combination sweep");
  report->add_flag("--sweep", sweep, "Train and simulate all seven market combinations");
  auto* all = app.add_subcommand("all", "Run synth (if needed) through simulate");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  if (version) {
    std::cout << "cobid 1.0.0\nartifact formats: " << cobid::kArtifactFormats << "\n";
    return 0;
  }
  try {
    cobid::RunConfig cfg = resolve(o);
    if (print_config) {
      std::cout << cobid::canonical_config(cfg);
      return 0;
    }
    std::ostream& log = std::cout;
    if (synth->parsed()) cobid::cmd_synth(cfg, log);
    else if (decompose->parsed()) cobid::cmd_decompose(cfg, log);
    else if (cluster->parsed()) cobid::cmd_cluster(cfg, log);
    else if (chain->parsed()) cobid::cmd_chain(cfg, log);
    else if (train->parsed()) cobid::cmd_train(cfg, log);
    else if (simulate->parsed()) cobid::cmd_simulate(cfg, log);
    else if (report->parsed()) cobid::cmd_report(cfg, sweep, log);
    else if (all->parsed()) cobid::cmd_all(cfg, log);
    else {
      std::cout << app.help();
      return 1;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return cobid::exit_code_for(e);
  }
  return 0;
}
