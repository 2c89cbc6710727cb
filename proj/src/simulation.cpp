// SPDX-License-Identifier: Apache-2.0
#include "cobid/simulation.hpp"

#include <exception>
#include <random>

#include "cobid/errors.hpp"
#include "cobid/kmeans.hpp"

namespace cobid {

std::vector<std::vector<std::vector<int>>> recent_cut_hints(const Policy& policy, int lookback) {
  std::vector<std::vector<std::vector<int>>> h(policy.cuts.size());
  for (size_t t = 0; t < policy.cuts.size(); ++t) {
    h[t].resize(policy.cuts[t].size());
    for (size_t n = 0; n < policy.cuts[t].size(); ++n)
      for (size_t k = 0; k < policy.cuts[t][n].size(); ++k)
        if (policy.cuts[t][n][k].last_active >= policy.iterations - lookback) h[t][n].push_back(static_cast<int>(k));
  }
  return h;
}

RunSummary summarize(const StageModel& model, const std::vector<StageRecord>& stages, int first_day, int last_day) {
  RunSummary s;
  const double rho = model.battery().penalty_eur_per_mwh;
  bool started = false;
  for (const auto& r : stages) {
    const int d = r.index.day;
    // FCR revenue is earned for the following day's delivery
    if (r.fcr_cleared && d + 1 >= first_day && d + 1 <= last_day) {
      s.market[market_slot(Market::FCR)].revenue += r.revenue_fcr;
    }
    if (d < first_day || d > last_day) continue;
    if (!started) {
      s.soc_window_start = r.soc_in;
      started = true;
    }
    s.soc_window_end = r.soc_out;
    auto& da = s.market[market_slot(Market::DA)];
    auto& id = s.market[market_slot(Market::ID)];
    auto& fcr = s.market[market_slot(Market::FCR)];
    da.revenue += r.revenue_da;
    da.volume += std::abs(r.da_delivered);
    da.balance -= r.da_delivered;
    id.revenue += r.revenue_id;
    id.volume += std::abs(r.id_cleared);
    id.balance -= r.id_cleared;
    fcr.volume += r.fcr_reserved;
    s.penalty += rho * (r.slack_soc + r.slack_id + r.slack_terminal);
    s.storage_violation_mwh += r.slack_soc;
    s.slack_mwh += r.slack_soc + r.slack_id + r.slack_terminal;
  }
  s.total = -s.penalty;
  for (const auto& m : s.market) s.total += m.revenue;
  return s;
}

SimRun simulate_path(const StageModel& model, const Policy& policy, const LatticePath& path, const SimOptions& opts,
                     const std::vector<std::vector<std::vector<int>>>* hints) {
  SimRun run;
  run.path = path;
  std::vector<double> state = model.initial_state();
  const bool id_on = model.options().markets.contains(Market::ID);
  for (int t = 1; t <= model.num_stages(); ++t) {
    const int n = path.nodes[static_cast<size_t>(t - 1)];
    const int l = id_on && t >= 2 ? path.id_levels[static_cast<size_t>(t - 1)] : 0;
    const std::vector<int>* hint = hints ? &(*hints)[static_cast<size_t>(t - 1)][static_cast<size_t>(n)] : nullptr;
    auto s = solve_stage(model, policy, t, n, l, state, hint);
    state = s.record.state_out;
    run.stages.push_back(std::move(s.record));
  }
  const int last = opts.window_last_day > 0 ? opts.window_last_day : model.horizon().days();
  run.summary = summarize(model, run.stages, opts.window_first_day, last);
  if (!opts.keep_stages) run.stages.clear();
  return run;
}

namespace {

std::vector<SimRun> run_all(const StageModel& model, const Policy& policy, const SimOptions& opts, bool parallel) {
  if (opts.runs < 0) throw ConfigError("simulate.runs must be >= 0");
  const int D = model.horizon().days();
  const int last = opts.window_last_day > 0 ? opts.window_last_day : D;
  if (opts.window_first_day < 1 || opts.window_first_day > last || last > D)
    throw ConfigError("reporting window [" + std::to_string(opts.window_first_day) + ", " + std::to_string(last) +
                      "] is outside the horizon");
  if (static_cast<int>(policy.cuts.size()) != model.num_stages())
    throw DataError("policy has " + std::to_string(policy.cuts.size()) + " stages, model has " +
                    std::to_string(model.num_stages()));
  const auto hints = recent_cut_hints(policy);
  std::vector<SimRun> runs(static_cast<size_t>(opts.runs));
  std::exception_ptr error;
#pragma omp parallel for schedule(dynamic) if (parallel)
  for (int r = 0; r < opts.runs; ++r) {
    try {
      std::mt19937_64 rng(mix_seed(opts.seed, static_cast<std::uint64_t>(r)));
      LatticePath path = sample_path(model.lattice(), rng);
      runs[static_cast<size_t>(r)] = simulate_path(model, policy, path, opts, &hints);
    } catch (...) {
#pragma omp critical(cobid_sim_error)
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
  return runs;
}

}  // namespace

std::vector<SimRun> simulate(const StageModel& model, const Policy& policy, const SimOptions& opts) {
  return run_all(model, policy, opts, opts.parallel);
}

std::vector<SimRun> simulate_serial(const StageModel& model, const Policy& policy, const SimOptions& opts) {
  return run_all(model, policy, opts, false);
}

}  // namespace cobid
