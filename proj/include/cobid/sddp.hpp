// SPDX-License-Identifier: Apache-2.0
//
// Markov-chain SDDP for the stage model: forward sampling, backward cut
// generation per (stage, node), upper-bound tracking and the stall rule.
#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "cobid/stage_problem.hpp"

namespace cobid {

struct TrainConfig {
  int max_iterations = 18000;
  int initial_iterations = 5000;  // no stall check before this
  int stall_window = 3000;
  double stall_improvement = 0.1;  // EUR
  std::uint64_t seed = 42;
  int forward_passes = 1;
  int cut_cap = 0;          // per (stage, node); 0 = unlimited
  int prune_after = 2000;   // inactivity before a cut may be dropped
  bool parallel = true;     // backward-pass child solves under OpenMP
  /// Solve every node of a backward stage, not only the sampled parent's
  /// successors, so each parent node receives a cut per iteration.
  bool backward_all_nodes = false;

  /// Throws ConfigError.
  void validate() const;
};

/// theta <= intercept + coefs . x_out
struct Cut {
  double intercept = 0.0;
  std::vector<double> coefs;
  int iteration = 0;
  int last_active = 0;

  [[nodiscard]] double value(const std::vector<double>& x) const;
};

struct IterationRecord {
  int iteration = 0;
  double upper_bound = 0.0;
  double forward_value = 0.0;
  double slack_mwh = 0.0;
};

struct Policy {
  std::vector<std::vector<std::vector<Cut>>> cuts;  // [stage-1][node]
  std::vector<IterationRecord> history;
  int iterations = 0;
  std::uint64_t seed = 0;
  std::string config_hash;
  std::string stop_reason;
  long long lp_solves = 0;
  long long unique_paths = 0;

  [[nodiscard]] bool trained() const { return iterations > 0; }
  [[nodiscard]] size_t total_cuts() const;
};

using ProgressSink = std::function<void(const IterationRecord&)>;

/// Empty policy with the right (stage, node) shape.
Policy empty_policy(const StageModel& model);

Policy train(const StageModel& model, const TrainConfig& cfg, const ProgressSink& sink = {});

/// True if, at 1-based iteration i, the bound improved by less than the
/// threshold over the last `stall_window` iterations (and i >= initial).
bool stall_rule_fires(const std::vector<double>& bounds, int i, const TrainConfig& cfg);

struct StageSolve {
  StageLp lp;
  lp::Solution solution;
  StageRecord record;
  std::vector<int> active_cuts;  // indices of binding cuts
  int lp_solves = 0;
};

/// Solves one stage LP against the cut set of (t, node), adding violated cuts
/// lazily until none remains. `hint` seeds the LP with cut indices.
StageSolve solve_stage(const StageModel& model, const Policy& policy, int t, int node, int id_level,
                       const std::vector<double>& incoming, const std::vector<int>* hint = nullptr);

struct FirstStageResult {
  std::vector<int> nodes;              // initial nodes with positive probability
  std::vector<StageRecord> decisions;  // per listed node
  std::vector<double> values;          // LP value per listed node
  double expected_value = 0.0;
};

/// Throws NumericalError for an untrained policy.
FirstStageResult evaluate_first_stage(const StageModel& model, const Policy& policy);
/// Initial-distribution weighted stage-1 value (the upper bound).
double upper_bound(const StageModel& model, const Policy& policy);

}  // namespace cobid
