// SPDX-License-Identifier: Apache-2.0
//
// Stage-indexed Markov price lattice: transition estimation, assembly from
// clustered residuals and forecasts, sampling, and JSON persistence.
#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "cobid/econometrics.hpp"
#include "cobid/kmeans.hpp"
#include "cobid/market.hpp"

namespace cobid {

using Matrix = std::vector<std::vector<double>>;
using DayProfile = std::array<double, kBlocksPerDay>;

struct TransitionMatrix {
  Matrix p;                         // row-stochastic
  std::vector<bool> fallback_rows;  // rows without observed transitions
  std::vector<std::string> warnings;

  [[nodiscard]] int k() const { return static_cast<int>(p.size()); }
};

/// Day-to-day transition counts, row-normalized. Unseen rows take the
/// empirical label frequencies. Throws DataError for fewer than 2 labels.
TransitionMatrix estimate_transitions(const std::vector<int>& labels, int k);

/// Long-run distribution (Cesaro average of the power iteration).
std::vector<double> stationary_distribution(const Matrix& p);

struct DayClustering {
  std::vector<int> labels;            // one per historical day
  std::vector<DayProfile> profiles;   // one per cluster
};

/// Labels each day of a four-hour residual series by the nearest day-slice of
/// the window centroids; profiles are the mean residual of each cluster's days.
DayClustering label_days(const ClusterModel& windows, const std::vector<double>& residuals, int window_days);

struct LatticeNode {
  int da_cluster = 0;
  int fcr_cluster = 0;
  DayProfile da_prices{};   // EUR/MWh, delivery day of this stage
  DayProfile fcr_prices{};  // EUR/MW, day cleared by the next FCR auction (day d+1 from block 4 on)
  std::vector<double> id_prices;  // ascending, delivery block of this stage
  std::vector<double> id_probs;
};

struct LatticeStage {
  StageIndex index;
  std::vector<LatticeNode> nodes;
  Matrix transition;  // [previous node][node]; empty at stage 1
};

struct MarkovLattice {
  std::vector<LatticeStage> stages;
  std::vector<double> initial;
  std::string config_hash;

  [[nodiscard]] int days() const { return static_cast<int>(stages.size()) / kBlocksPerDay; }
  [[nodiscard]] int num_stages() const { return static_cast<int>(stages.size()); }
  [[nodiscard]] const LatticeStage& stage(int linear) const { return stages.at(static_cast<size_t>(linear - 1)); }
  /// Throws DataError describing the first violated invariant.
  void validate() const;
};

struct LatticeInputs {
  std::vector<DayProfile> da_profiles;   // residual EUR/MWh per DA cluster
  std::vector<DayProfile> fcr_profiles;  // log residual per FCR cluster
  TransitionMatrix da_transitions;
  TransitionMatrix fcr_transitions;
  std::vector<SpreadLevels> spreads;       // per DA cluster
  std::vector<DayProfile> da_forecast;     // deterministic DA per horizon day
  std::vector<DayProfile> fcr_log_forecast;  // deterministic log FCR per horizon day
};

/// Node (a, b) has index a * k_fcr + b. DA clusters move at block 1, FCR
/// clusters at block 4; other stages carry the node over.
MarkovLattice assemble_lattice(const LatticeInputs& in, int days);

struct LatticePath {
  std::vector<int> nodes;      // per stage
  std::vector<int> id_levels;  // per stage
};

LatticePath sample_path(const MarkovLattice& lattice, std::mt19937_64& rng);
/// Draws an index from a discrete distribution using one engine call.
int sample_index(const std::vector<double>& probs, std::mt19937_64& rng);

/// Unconditional node probabilities per stage.
Matrix node_marginals(const MarkovLattice& lattice);

struct PathCounts {
  double node_paths = 0;   // positive-probability node sequences
  double price_paths = 0;  // including ID levels at ID clearing stages
  int distinct_price_tuples = 0;  // per-stage (node, ID level) pairs, summed
};
PathCounts count_paths(const MarkovLattice& lattice);

inline constexpr int kLatticeFormatVersion = 1;

std::string export_lattice_json(const MarkovLattice& lattice);
MarkovLattice import_lattice_json(const std::string& text);
void export_lattice(const MarkovLattice& lattice, const std::string& path);
MarkovLattice import_lattice(const std::string& path);

}  // namespace cobid
