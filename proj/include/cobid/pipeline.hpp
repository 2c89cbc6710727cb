// SPDX-License-Identifier: Apache-2.0
//
// Batch commands of the CLI. Each reads the artifacts of the previous step
// from the output directory, checks their config hash and writes its own.
#pragma once

#include <ostream>
#include <string>

#include "cobid/config.hpp"
#include "cobid/lattice.hpp"
#include "cobid/report.hpp"

namespace cobid {

/// Path of an artifact inside cfg.output_dir.
std::string artifact_path(const RunConfig& cfg, const std::string& name);

void cmd_synth(const RunConfig& cfg, std::ostream& log);
void cmd_decompose(const RunConfig& cfg, std::ostream& log);
void cmd_cluster(const RunConfig& cfg, std::ostream& log);
void cmd_chain(const RunConfig& cfg, std::ostream& log);
void cmd_train(const RunConfig& cfg, std::ostream& log);
void cmd_simulate(const RunConfig& cfg, std::ostream& log);
/// Rewrites report.csv from metrics.json, or with `sweep` trains and simulates
/// all seven market combinations into <out>/sweep.
void cmd_report(const RunConfig& cfg, bool sweep, std::ostream& log);

/// Runs synth (if the inputs are missing) through simulate.
void cmd_all(const RunConfig& cfg, std::ostream& log);

/// Loads the lattice artifact and refuses a config hash mismatch.
MarkovLattice load_checked_lattice(const RunConfig& cfg);

inline constexpr const char* kArtifactFormats =
    "lattice v1, policy v1, decomposition v1, clusters v1, report v1";

}  // namespace cobid
