// SPDX-License-Identifier: Apache-2.0
//
// Policy simulation over sampled lattice paths and per-run accounting.
#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "cobid/sddp.hpp"

namespace cobid {

struct SimOptions {
  int runs = 10000;
  std::uint64_t seed = 7;
  int window_first_day = 2;  // day 1 only carries ID trades
  int window_last_day = 0;   // 0 = last horizon day
  bool parallel = true;
  bool keep_stages = true;   // drop per-stage records to save memory if false
};

struct MarketTotals {
  double revenue = 0.0;  // EUR
  double volume = 0.0;   // MWh (FCR: MW reserved, summed over blocks)
  double balance = 0.0;  // MWh, positive = net bought into storage
};

inline size_t market_slot(Market m) { return static_cast<size_t>(m); }

struct RunSummary {
  std::array<MarketTotals, 3> market{};  // indexed by market_slot
  double penalty = 0.0;
  double total = 0.0;
  double storage_violation_mwh = 0.0;  // SoC slack inside the window
  double slack_mwh = 0.0;              // all slack inside the window
  double soc_window_start = 0.0;
  double soc_window_end = 0.0;
};

struct SimRun {
  LatticePath path;
  std::vector<StageRecord> stages;
  RunSummary summary;
};

/// Solves the stage sequence of one path under the policy's cuts.
SimRun simulate_path(const StageModel& model, const Policy& policy, const LatticePath& path,
                     const SimOptions& opts, const std::vector<std::vector<std::vector<int>>>* hints = nullptr);

/// Runs are independent; run r uses its own RNG stream derived from (seed, r).
std::vector<SimRun> simulate(const StageModel& model, const Policy& policy, const SimOptions& opts);
/// Serial reference of simulate().
std::vector<SimRun> simulate_serial(const StageModel& model, const Policy& policy, const SimOptions& opts);

/// Accounting over the reporting window; revenues are attributed to delivery days.
RunSummary summarize(const StageModel& model, const std::vector<StageRecord>& stages, int first_day, int last_day);

/// Cut indices recently active per (stage, node); used to seed stage LPs.
std::vector<std::vector<std::vector<int>>> recent_cut_hints(const Policy& policy, int lookback = 50);

}  // namespace cobid
