// SPDX-License-Identifier: Apache-2.0
#include "cobid/sddp.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <random>
#include <unordered_set>

#include "cobid/errors.hpp"
#include "cobid/hash.hpp"
#include "cobid/kmeans.hpp"

namespace cobid {

void TrainConfig::validate() const {
  if (max_iterations < 1) throw ConfigError("training.max_iterations must be >= 1");
  if (initial_iterations < 1) throw ConfigError("training.initial_iterations must be >= 1");
  if (stall_window < 1) throw ConfigError("training.stall_window must be >= 1");
  if (forward_passes < 1) throw ConfigError("training.forward_passes must be >= 1");
  if (cut_cap < 0) throw ConfigError("training.cut_cap must be >= 0");
  if (prune_after < 1) throw ConfigError("training.prune_after must be >= 1");
  if (!(stall_improvement >= 0)) throw ConfigError("training.stall_improvement must be >= 0");
}

double Cut::value(const std::vector<double>& x) const {
  double v = intercept;
  for (size_t k = 0; k < coefs.size(); ++k) v += coefs[k] * x[k];
  return v;
}

size_t Policy::total_cuts() const {
  size_t n = 0;
  for (const auto& st : cuts)
    for (const auto& c : st) n += c.size();
  return n;
}

Policy empty_policy(const StageModel& model) {
  Policy p;
  for (int t = 1; t <= model.num_stages(); ++t)
    p.cuts.emplace_back(model.lattice().stage(t).nodes.size());
  return p;
}

bool stall_rule_fires(const std::vector<double>& bounds, int i, const TrainConfig& cfg) {
  if (i < cfg.initial_iterations || i <= cfg.stall_window || i > static_cast<int>(bounds.size())) return false;
  double best = -std::numeric_limits<double>::infinity();
  for (int j = i - cfg.stall_window; j <= i; ++j) best = std::max(best, bounds[static_cast<size_t>(j - 1)]);
  return best - bounds[static_cast<size_t>(i - 1)] < cfg.stall_improvement;
}

StageSolve solve_stage(const StageModel& model, const Policy& policy, int t, int node, int id_level,
                       const std::vector<double>& incoming, const std::vector<int>* hint) {
  StageSolve out;
  out.lp = model.build(t, node, id_level, incoming);
  const std::vector<Cut>* cuts = nullptr;
  if (t < model.num_stages() && static_cast<size_t>(t - 1) < policy.cuts.size())
    cuts = &policy.cuts[static_cast<size_t>(t - 1)][static_cast<size_t>(node)];
  std::vector<char> in_lp(cuts ? cuts->size() : 0, 0);
  if (cuts && hint)
    for (int k : *hint)
      if (k >= 0 && static_cast<size_t>(k) < cuts->size() && !in_lp[static_cast<size_t>(k)]) {
        in_lp[static_cast<size_t>(k)] = 1;
        StageModel::add_cut(out.lp, (*cuts)[static_cast<size_t>(k)].intercept, (*cuts)[static_cast<size_t>(k)].coefs);
      }
  std::vector<double> x(out.lp.out_vars.size());
  for (int round = 0;; ++round) {
    out.solution = lp::solve(out.lp.problem);
    ++out.lp_solves;
    if (!out.solution.optimal())
      throw NumericalError("stage " + to_string(StageIndex::from_linear(t)) + " node " + std::to_string(node) +
                           " LP is " + lp::to_string(out.solution.status));
    if (!cuts || cuts->empty()) break;
    for (size_t k = 0; k < x.size(); ++k) x[k] = out.solution.values[static_cast<size_t>(out.lp.out_vars[k])];
    const double theta = out.solution.values[static_cast<size_t>(out.lp.theta)];
    const double tol = 1e-7 * std::max(1.0, std::abs(theta));
    int worst = -1;
    double worst_v = tol;
    for (size_t k = 0; k < cuts->size(); ++k) {
      if (in_lp[k]) continue;
      double viol = theta - (*cuts)[k].value(x);
      if (viol > worst_v) {
        worst_v = viol;
        worst = static_cast<int>(k);
      }
    }
    if (worst < 0) {
      for (size_t k = 0; k < cuts->size(); ++k)
        if (std::abs(theta - (*cuts)[k].value(x)) <= 1e-6 * std::max(1.0, std::abs(theta)))
          out.active_cuts.push_back(static_cast<int>(k));
      break;
    }
    in_lp[static_cast<size_t>(worst)] = 1;
    StageModel::add_cut(out.lp, (*cuts)[static_cast<size_t>(worst)].intercept,
                        (*cuts)[static_cast<size_t>(worst)].coefs);
    if (round > 100000) throw NumericalError("lazy cut loop did not terminate");
  }
  out.record = model.apply_solution(out.lp, out.solution, node, id_level, incoming);
  return out;
}

double upper_bound(const StageModel& model, const Policy& policy) {
  const auto& init = model.lattice().initial;
  double ub = 0.0;
  for (size_t n = 0; n < init.size(); ++n) {
    if (init[n] <= 0) continue;
    auto s = solve_stage(model, policy, 1, static_cast<int>(n), 0, model.initial_state());
    ub += init[n] * s.solution.objective;
  }
  return ub;
}

FirstStageResult evaluate_first_stage(const StageModel& model, const Policy& policy) {
  if (!policy.trained()) throw NumericalError("policy has not been trained");
  FirstStageResult r;
  const auto& init = model.lattice().initial;
  for (size_t n = 0; n < init.size(); ++n) {
    if (init[n] <= 0) continue;
    auto s = solve_stage(model, policy, 1, static_cast<int>(n), 0, model.initial_state());
    r.nodes.push_back(static_cast<int>(n));
    r.decisions.push_back(s.record);
    r.values.push_back(s.solution.objective);
    r.expected_value += init[n] * s.solution.objective;
  }
  return r;
}

namespace {

struct ChildResult {
  double value = 0.0;
  std::vector<double> duals;
  std::vector<int> active;
  int solves = 0;
};

bool has_duplicate(const std::vector<Cut>& cuts, const Cut& c) {
  auto close = [](double a, double b) { return std::abs(a - b) <= 1e-9 * std::max(1.0, std::abs(a)); };
  for (const auto& e : cuts) {
    if (!close(e.intercept, c.intercept)) continue;
    bool same = true;
    for (size_t k = 0; k < c.coefs.size() && same; ++k) same = close(e.coefs[k], c.coefs[k]);
    if (same) return true;
  }
  return false;
}

void prune(std::vector<Cut>& cuts, std::vector<int>& hint, int iteration, const TrainConfig& cfg) {
  if (cfg.cut_cap <= 0 || static_cast<int>(cuts.size()) <= cfg.cut_cap) return;
  std::vector<Cut> kept;
  for (auto& c : cuts)
    if (iteration - c.last_active <= cfg.prune_after) kept.push_back(std::move(c));
  cuts = std::move(kept);
  hint.clear();
}

}  // namespace

Policy train(const StageModel& model, const TrainConfig& cfg, const ProgressSink& sink) {
  cfg.validate();
  const int T = model.num_stages();
  const auto& lat = model.lattice();
  Policy policy = empty_policy(model);
  policy.seed = cfg.seed;
  std::vector<std::vector<std::vector<int>>> hints(static_cast<size_t>(T));
  for (int t = 1; t <= T; ++t) hints[static_cast<size_t>(t - 1)].resize(lat.stage(t).nodes.size());
  std::unordered_set<std::uint64_t> paths;
  std::vector<double> bounds;
  std::mt19937_64 rng(cfg.seed);

  for (int it = 1; it <= cfg.max_iterations; ++it) {
    double fwd_sum = 0.0, slack_sum = 0.0;
    for (int pass = 0; pass < cfg.forward_passes; ++pass) {
      LatticePath path = sample_path(lat, rng);
      std::uint64_t h = 0xcbf29ce484222325ULL;
      for (int n : path.nodes) h = fnv1a64(std::string_view(reinterpret_cast<const char*>(&n), sizeof n), h);
      paths.insert(h);

      // forward pass
      std::vector<std::vector<double>> states;  // outgoing state per stage
      std::vector<double> state = model.initial_state();
      double value = 0.0;
      for (int t = 1; t <= T; ++t) {
        const int n = path.nodes[static_cast<size_t>(t - 1)];
        const int l = model.options().markets.contains(Market::ID) && t >= 2 ? path.id_levels[static_cast<size_t>(t - 1)] : 0;
        auto& hint = hints[static_cast<size_t>(t - 1)][static_cast<size_t>(n)];
        auto s = solve_stage(model, policy, t, n, l, state, &hint);
        policy.lp_solves += s.lp_solves;
        hint = s.active_cuts;
        auto& cs = policy.cuts[static_cast<size_t>(t - 1)][static_cast<size_t>(n)];
        for (int k : s.active_cuts) cs[static_cast<size_t>(k)].last_active = it;
        value += s.record.stage_value;
        slack_sum += s.record.slack_soc + s.record.slack_id + s.record.slack_terminal;
        state = s.record.state_out;
        states.push_back(state);
      }
      fwd_sum += value;

      // backward pass
      for (int t = T; t >= 2; --t) {
        const int parent = path.nodes[static_cast<size_t>(t - 2)];
        const auto& xhat = states[static_cast<size_t>(t - 2)];
        const auto& tr = lat.stage(t).transition;
        const auto& row = tr[static_cast<size_t>(parent)];
        std::vector<char> solved(row.size(), 0);
        std::vector<std::pair<int, int>> jobs;  // (node, level)
        std::vector<std::vector<double>> probs(row.size());
        for (size_t j = 0; j < row.size(); ++j) {
          if (row[j] <= 0 && !cfg.backward_all_nodes) continue;
          solved[j] = 1;
          probs[j] = model.id_probabilities(t, static_cast<int>(j));
          for (size_t l = 0; l < probs[j].size(); ++l)
            if (probs[j][l] > 0) jobs.emplace_back(static_cast<int>(j), static_cast<int>(l));
        }
        std::vector<ChildResult> results(jobs.size());
        std::exception_ptr error;
#pragma omp parallel for schedule(dynamic) if (cfg.parallel)
        for (size_t q = 0; q < jobs.size(); ++q) {
          try {
            const auto [j, l] = jobs[q];
            const auto& hint = hints[static_cast<size_t>(t - 1)][static_cast<size_t>(j)];
            auto s = solve_stage(model, policy, t, j, l, xhat, &hint);
            ChildResult& r = results[q];
            r.value = s.solution.objective;
            r.duals.reserve(s.lp.fix_rows.size());
            for (int rowi : s.lp.fix_rows) r.duals.push_back(s.solution.dual(rowi));
            r.active = std::move(s.active_cuts);
            r.solves = s.lp_solves;
          } catch (...) {
#pragma omp critical(cobid_backward_error)
            if (!error) error = std::current_exception();
          }
        }
        if (error) std::rethrow_exception(error);

        const size_t dim = xhat.size();
        std::vector<double> node_value(row.size(), 0.0);
        std::vector<std::vector<double>> node_grad(row.size(), std::vector<double>(dim, 0.0));
        for (size_t q = 0; q < jobs.size(); ++q) {
          const auto [j, l] = jobs[q];
          const double w = probs[static_cast<size_t>(j)][static_cast<size_t>(l)];
          const auto& r = results[q];
          policy.lp_solves += r.solves;
          double a = r.value;
          for (size_t k = 0; k < dim; ++k) a -= r.duals[k] * xhat[k];
          node_value[static_cast<size_t>(j)] += w * a;
          for (size_t k = 0; k < dim; ++k) node_grad[static_cast<size_t>(j)][k] += w * r.duals[k];
          auto& cs = policy.cuts[static_cast<size_t>(t - 1)][static_cast<size_t>(j)];
          for (int k : r.active) cs[static_cast<size_t>(k)].last_active = it;
        }
        // share the cut with every parent-stage node whose successors were all solved
        const size_t parents = tr.size();
        for (size_t i = 0; i < parents; ++i) {
          bool covered = true;
          for (size_t j = 0; j < row.size() && covered; ++j)
            if (tr[i][j] > 0 && !solved[j]) covered = false;
          if (!covered) continue;
          Cut c;
          c.iteration = it;
          c.last_active = it;
          c.coefs.assign(dim, 0.0);
          for (size_t j = 0; j < row.size(); ++j) {
            if (tr[i][j] <= 0) continue;
            c.intercept += tr[i][j] * node_value[j];
            for (size_t k = 0; k < dim; ++k) c.coefs[k] += tr[i][j] * node_grad[j][k];
          }
          auto& cs = policy.cuts[static_cast<size_t>(t - 2)][i];
          if (has_duplicate(cs, c)) continue;
          cs.push_back(std::move(c));
          prune(cs, hints[static_cast<size_t>(t - 2)][i], it, cfg);
        }
      }
    }

    IterationRecord rec;
    rec.iteration = it;
    {
      const auto& init = lat.initial;
      double ub = 0.0;
      for (size_t n = 0; n < init.size(); ++n) {
        if (init[n] <= 0) continue;
        auto& hint = hints[0][n];
        auto s = solve_stage(model, policy, 1, static_cast<int>(n), 0, model.initial_state(), &hint);
        policy.lp_solves += s.lp_solves;
        hint = s.active_cuts;
        ub += init[n] * s.solution.objective;
      }
      rec.upper_bound = ub;
    }
    rec.forward_value = fwd_sum / cfg.forward_passes;
    rec.slack_mwh = slack_sum / cfg.forward_passes;
    if (!std::isfinite(rec.upper_bound))
      throw NumericalError("upper bound became non-finite at iteration " + std::to_string(it));
    bounds.push_back(rec.upper_bound);
    policy.history.push_back(rec);
    policy.iterations = it;
    if (sink) sink(rec);
    if (stall_rule_fires(bounds, it, cfg)) {
      policy.stop_reason = "stall";
      break;
    }
  }
  if (policy.stop_reason.empty()) policy.stop_reason = "max_iterations";
  policy.unique_paths = static_cast<long long>(paths.size());
  return policy;
}

}  // namespace cobid
