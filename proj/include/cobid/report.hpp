// SPDX-License-Identifier: Apache-2.0
//
// Aggregated simulation reports, arbitrage metrics, market-combination sweep
// and CSV/JSON export.
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "cobid/simulation.hpp"

namespace cobid {

/// Ratio metrics in two readings: the literal signed denominator
/// sum(y_DA + y_ID), and sum(|y_DA| + |y_ID|). Absent when the denominator is 0.
struct MetricPair {
  std::optional<double> literal;
  std::optional<double> absolute;
};

/// Opposing-sign volume covered by the other market at one stage.
double direction_term(double y_da, double y_id);
/// Storage-bound overrun caused by DA and FCR positions at one stage.
double feasibility_term(double y_da, double y_fcr, double soc, double rated_power);

MetricPair direction_metric(const std::vector<SimRun>& runs, int first_day, int last_day);
MetricPair feasibility_metric(const std::vector<SimRun>& runs, double rated_power, int first_day, int last_day);

struct SimReport {
  std::string label;  // e.g. "FCR, DA"
  std::string key;    // e.g. "fcr_da"
  MarketSet markets;
  double fcr_price_scale = 1.0;
  bool id_constraints = true;
  double penalty_eur_mwh = 0.0;
  int runs = 0;
  std::array<MarketTotals, 3> mean{};
  double penalty_mean = 0.0;
  double total_mean = 0.0;
  std::vector<double> revenues;  // per-run totals
  MetricPair direction;
  MetricPair feasibility;
  double storage_violation_mean = 0.0;
  int runs_with_violation = 0;
  PathCounts path_counts;
  long long training_unique_paths = 0;
  long long training_lp_solves = 0;
  int training_iterations = 0;
  double upper_bound = 0.0;
  std::vector<std::vector<double>> soc;  // [run][stage], SoC after each stage
  std::string config_hash;
};

SimReport build_report(const StageModel& model, const Policy& policy, const std::vector<SimRun>& runs,
                       const SimOptions& opts);

struct SweepResult {
  std::vector<SimReport> reports;
  std::vector<Policy> policies;
};

/// Trains and simulates one policy per market combination.
SweepResult market_combination_sweep(const MarkovLattice& lattice, const BatterySpec& battery,
                                     const ModelOptions& base, const TrainConfig& train_cfg,
                                     const SimOptions& sim, const std::vector<MarketSet>& combos);

/// Writes report.csv, distribution_<key>.csv, soc_<key>.csv and metrics.json into `dir`.
void export_reports(const std::vector<SimReport>& reports, const std::string& dir);

std::string report_csv(const std::vector<SimReport>& reports);
std::string distribution_csv(const SimReport& report);
std::string soc_csv(const SimReport& report);
std::string metrics_json(const std::vector<SimReport>& reports);
/// Inverse of metrics_json (SoC matrices are not part of the JSON).
std::vector<SimReport> reports_from_json(const std::string& text);

}  // namespace cobid
