// SPDX-License-Identifier: Apache-2.0
//
// Per-stage linear program of the coordinated DA/ID/FCR bidding model.
//
// Sign convention: cleared DA/ID quantities are positive when selling
// (discharging). FCR quantities are reserved MW in [0, L/2].
#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "cobid/lattice.hpp"
#include "cobid/lp.hpp"
#include "cobid/market.hpp"

namespace cobid {

struct ModelOptions {
  MarketSet markets = MarketSet::all();
  bool id_constraints = true;
  double fcr_price_scale = 1.0;
  /// End the horizon at the starting SoC (soft, penalized).
  bool terminal_soc = true;
};

/// 1 iff the bid level is at or below the realized price.
int clearing_indicator(double level_price, double realized_price);

/// Index of the highest level cleared at `price`, or -1 if none clears.
int cleared_level(const std::vector<double>& levels, double price);

enum class StateKind { Soc, IdBid, DaBid, DaCommit, FcrBid, FcrCommit, FcrCache };

struct StateComponent {
  StateKind kind;
  int block = 0;  // 1..6 where applicable
  int level = 0;  // bid level index where applicable
  bool operator==(const StateComponent&) const = default;
};

std::string to_string(const StateComponent& c);

/// Ordered list of state components carried out of a stage.
struct StateLayout {
  std::vector<StateComponent> components;

  [[nodiscard]] int size() const { return static_cast<int>(components.size()); }
  /// -1 if absent.
  [[nodiscard]] int find(StateKind kind, int block = 0, int level = 0) const;
};

/// Everything recorded about one solved stage.
struct StageRecord {
  StageIndex index;
  int node = 0;
  int id_level = 0;
  double soc_in = 0.0;
  double soc_out = 0.0;
  double id_cleared = 0.0;     // delivered in this block
  double da_delivered = 0.0;   // DA commitment delivered in this block
  double fcr_reserved = 0.0;   // FCR MW held in this block
  bool da_cleared = false;
  std::array<double, kBlocksPerDay> da_cleared_blocks{};  // at block 1, for the current day
  bool fcr_cleared = false;
  std::array<double, kBlocksPerDay> fcr_cleared_blocks{};  // at block 4, for the next day
  double revenue_id = 0.0;
  double revenue_da = 0.0;
  double revenue_fcr = 0.0;
  double slack_soc = 0.0;       // storage-bound violation (MWh)
  double slack_id = 0.0;        // ID-constraint relaxation
  double slack_terminal = 0.0;  // terminal SoC deviation
  double penalty = 0.0;         // EUR
  double stage_value = 0.0;     // revenue - penalty
  double theta = 0.0;           // future value estimate
  std::vector<double> state_out;
};

/// LP of one (stage, node, ID level) with handles into its variables.
struct StageLp {
  lp::Problem problem;
  int stage = 0;                 // linear index
  std::vector<int> fix_rows;     // per incoming component, tagged equality rows
  std::vector<int> out_vars;     // per outgoing component
  std::vector<int> out_source;   // incoming index a component copies, -2 fixed zero, -1 decided here
  int theta = -1;                // future value variable (absent at the last stage)
  int soc_out = -1;
  std::vector<int> slack_soc, slack_id, slack_terminal;
  // clearing bookkeeping (incoming component indices, -1 if none)
  int id_clear_in = -1;
  double id_price = 0.0;
  int da_deliver_in = -1;
  std::array<int, kBlocksPerDay> da_clear_in{};
  std::array<double, kBlocksPerDay> da_price{};
  std::array<int, kBlocksPerDay> fcr_clear_in{};
  std::array<double, kBlocksPerDay> fcr_price{};
  int fcr_reserved_in = -1;
};

/// Precomputed per-stage structure for one lattice/battery/options triple.
class StageModel {
 public:
  StageModel(const MarkovLattice& lattice, BatterySpec battery, ModelOptions options);

  [[nodiscard]] const MarkovLattice& lattice() const { return *lattice_; }
  [[nodiscard]] const BatterySpec& battery() const { return battery_; }
  [[nodiscard]] const ModelOptions& options() const { return options_; }
  [[nodiscard]] const Horizon& horizon() const { return horizon_; }
  [[nodiscard]] int num_stages() const { return horizon_.size(); }

  /// Outgoing state layout of stage t (1-based); incoming(t) = outgoing(t-1).
  [[nodiscard]] const StateLayout& outgoing(int t) const { return out_.at(static_cast<size_t>(t - 1)); }
  [[nodiscard]] const StateLayout& incoming(int t) const;
  /// State entering stage 1.
  [[nodiscard]] std::vector<double> initial_state() const { return {battery_.soc_start_mwh}; }

  /// Price levels of the ID bid placed at stage t (cleared at t+1).
  [[nodiscard]] const std::vector<double>& id_levels(int t) const { return id_levels_.at(static_cast<size_t>(t - 1)); }
  /// DA levels for block b of the bid placed on day d.
  [[nodiscard]] const std::vector<double>& da_levels(int d, int b) const;
  /// FCR levels for block b of the bid placed on day d.
  [[nodiscard]] const std::vector<double>& fcr_levels(int d, int b) const;

  /// Upper bound on the value obtainable after stage t.
  [[nodiscard]] double future_cap(int t) const { return cap_.at(static_cast<size_t>(t - 1)); }
  /// Number of ID realizations to enumerate at stage t for a node (1 if ID is off).
  [[nodiscard]] std::vector<double> id_probabilities(int t, int node) const;

  /// Builds the stage LP. `incoming` follows incoming(t).
  [[nodiscard]] StageLp build(int t, int node, int id_level, const std::vector<double>& incoming) const;

  /// Adds  theta <= intercept + coefs . x_out.
  static int add_cut(StageLp& lp, double intercept, const std::vector<double>& coefs);

  /// Reads the solution back. Throws NumericalError unless optimal.
  [[nodiscard]] StageRecord apply_solution(const StageLp& lp, const lp::Solution& sol, int node, int id_level,
                                           const std::vector<double>& incoming) const;

 private:
  const MarkovLattice* lattice_;
  BatterySpec battery_;
  ModelOptions options_;
  Horizon horizon_;
  std::vector<StateLayout> out_;
  StateLayout first_in_;
  std::vector<std::vector<double>> id_levels_;
  std::vector<std::vector<std::vector<double>>> da_levels_;   // [day-1][block-1]
  std::vector<std::vector<std::vector<double>>> fcr_levels_;  // [day-1][block-1]
  std::vector<double> cap_;

  [[nodiscard]] bool on(Market m) const { return options_.markets.contains(m); }
};

/// Sorted union of prices with near-duplicates merged.
std::vector<double> merge_levels(std::vector<double> prices);

}  // namespace cobid
