// SPDX-License-Identifier: Apache-2.0
//
// Run configuration: a small TOML-shaped file format (sections, key = value,
// strings, numbers, booleans, string arrays, # comments) and the hash chain
// that ties every artifact to the settings that produced it.
#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "cobid/market.hpp"
#include "cobid/sddp.hpp"
#include "cobid/simulation.hpp"
#include "cobid/synth.hpp"

namespace cobid {

using ConfigValue = std::variant<bool, double, std::string, std::vector<std::string>>;

/// "section.key" -> value. Keys outside any section have no prefix.
using ConfigTable = std::map<std::string, ConfigValue>;

/// Throws ConfigError naming the line on syntax errors.
ConfigTable parse_config_text(const std::string& text, const std::string& source = "<config>");

struct RunConfig {
  // [paths]
  std::string prices = "data/prices.csv";
  std::string fundamentals = "data/fundamentals.csv";
  std::string forecast = "data/forecast.csv";
  std::string output_dir = "out";

  // [horizon]
  int days = 3;

  // [battery]
  BatterySpec battery;

  // [clustering]
  int k_da = 5;
  int k_fcr = 3;
  int window_days = 3;
  std::uint64_t cluster_seed = 11;
  int restarts = 10;
  double rl_quantile = 0.10;
  std::array<double, 3> id_probabilities{0.15, 0.70, 0.15};
  int elbow_k_max = 10;

  // [training]
  TrainConfig training;

  // [markets]
  ModelOptions model;

  // [simulate]
  SimOptions simulate;

  // [synth]
  SynthSpec synth;

  int threads = 0;  // 0 = OpenMP default

  /// Throws ConfigError.
  void validate() const;
};

/// Applies a parsed table on top of `base`. Unknown keys are ConfigErrors.
RunConfig apply_config(const ConfigTable& table, RunConfig base = {});
RunConfig load_config(const std::string& path);

/// Canonical text of every setting, used for hashing and `--print-config`.
std::string canonical_config(const RunConfig& cfg);

/// Hashes of the artifact chain. Each link folds in its predecessor plus the
/// settings (and input file contents) that the stage depends on.
struct ConfigHashes {
  std::string decompose;
  std::string cluster;
  std::string chain;
  std::string train;
  std::string simulate;
};

ConfigHashes config_hashes(const RunConfig& cfg);

}  // namespace cobid
