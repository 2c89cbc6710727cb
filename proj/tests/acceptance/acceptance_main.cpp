// SPDX-License-Identifier: Apache-2.0
//
// Acceptance runner: one [PASS]/[FAIL] line per criterion. Exits non-zero if
// any criterion fails.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <limits>
#include <random>
#include <sstream>

#include "cobid/config.hpp"
#include "cobid/csv_io.hpp"
#include "cobid/econometrics.hpp"
#include "cobid/errors.hpp"
#include "cobid/kmeans.hpp"
#include "cobid/lattice.hpp"
#include "cobid/pipeline.hpp"
#include "cobid/policy_io.hpp"
#include "cobid/report.hpp"
#include "cobid/simulation.hpp"
#include "support.hpp"

using namespace cobid;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(int id, const std::string& name, const std::function<Outcome()>& body) {
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  if (!o.pass) ++failures;
  std::cout << (o.pass ? "[PASS] " : "[FAIL] ") << id << " " << name << ": " << o.detail << std::endl;
}

bool non_increasing(const Policy& p, double* worst) {
  bool ok = true;
  for (size_t i = 1; i < p.history.size(); ++i) {
    const double up = p.history[i].upper_bound - p.history[i - 1].upper_bound;
    const double tol = 1e-9 * std::max(1.0, std::abs(p.history[i - 1].upper_bound));
    if (worst) *worst = std::max(*worst, up);
    if (up > tol) ok = false;
  }
  return ok;
}

// ---------------------------------------------------------------- 1
Outcome oracle_equivalence() {
  const auto instances = testing::load_oracle_instances();
  int ok = 0;
  double worst_rel = 0.0, worst_time = 0.0;
  for (const auto& I : instances) {
    const auto t0 = Clock::now();
    StageModel model(I.lattice, I.battery, I.options);
    TrainConfig cfg;
    cfg.max_iterations = 300;
    cfg.backward_all_nodes = true;
    cfg.seed = static_cast<std::uint64_t>(I.seed);
    Policy pol = train(model, cfg);
    const double v = testing::exact_policy_value(model, pol);
    const double secs = seconds_since(t0);
    const double rel = std::abs(v - I.oracle_value) / std::max(1.0, std::abs(I.oracle_value));
    worst_rel = std::max(worst_rel, rel);
    worst_time = std::max(worst_time, secs);
    if (rel <= 0.01 && secs <= 60.0) ++ok;
    else std::cerr << "  instance " << I.seed << " (" << I.family << "): policy " << v << ", oracle " << I.oracle_value
                   << ", " << secs << " s\n";
  }
  const bool pass = instances.size() >= 20 && ok == static_cast<int>(instances.size());
  return {pass, std::to_string(ok) + "/" + std::to_string(instances.size()) + " instances within 1%, worst rel " +
                    fmt("%.2e", worst_rel) + ", slowest " + fmt("%.2f", worst_time) + " s"};
}

// ---------------------------------------------------------------- 2
Outcome sddp_soundness() {
  std::ostringstream d;
  bool pass = true;

  // (a) bound monotone on the toy and on sampled-backward desk instances
  auto lat = testing::toy_lattice();
  StageModel toy(lat, BatterySpec{}, testing::toy_options());
  TrainConfig tc;
  tc.max_iterations = 200;
  Policy tp = train(toy, tc);
  double worst_up = -std::numeric_limits<double>::infinity();
  bool mono = non_increasing(tp, &worst_up);
  const auto instances = testing::load_oracle_instances();
  for (size_t i = 0; i < instances.size(); i += 4) {
    StageModel m(instances[i].lattice, instances[i].battery, instances[i].options);
    TrainConfig c;
    c.max_iterations = 200;
    mono = non_increasing(train(m, c), &worst_up) && mono;
  }
  pass = pass && mono;
  d << "bound non-increasing " << (mono ? "yes" : "no") << " (largest step " << fmt("%.2e", worst_up) << ")";

  // (b) relative gap on the toy
  SimOptions so;
  so.runs = 1000;
  so.window_first_day = 1;
  auto runs = simulate(toy, tp, so);
  double mean = 0.0;
  for (const auto& r : runs) mean += r.summary.total / static_cast<double>(runs.size());
  const double ub = tp.history.back().upper_bound;
  const double gap = (ub - mean) / ub;
  const bool gap_ok = gap <= 0.02 && std::abs(ub - 750.0) <= 1e-6 * 750.0;
  pass = pass && gap_ok;
  d << "; toy bound " << fmt("%.4f", ub) << ", gap " << fmt("%.2e", gap);

  // (c) stall rule on a constructed stalled run and on a synthetic bound curve
  TrainConfig sc;  // defaults: 5000 initial, 3000 window, 0.1 EUR, 18000 cap
  Policy stalled = train(toy, sc);
  std::vector<double> ubs;
  for (const auto& r : stalled.history) ubs.push_back(r.upper_bound);
  int expected = -1;
  for (int i = sc.initial_iterations; i <= static_cast<int>(ubs.size()) && expected < 0; ++i)
    if (i > sc.stall_window && ubs[static_cast<size_t>(i - sc.stall_window - 1)] - ubs[static_cast<size_t>(i - 1)] < 0.1)
      expected = i;
  bool stall_ok = stalled.stop_reason == "stall" && stalled.iterations == expected && expected == 5000;

  // b_i = 1000 + 400 exp(-i / 1500): fires at the first i >= 5000 with b_{i-3000} - b_i < 0.1
  std::vector<double> curve;
  for (int i = 1; i <= 18000; ++i) curve.push_back(1000.0 + 400.0 * std::exp(-i / 1500.0));
  int first = -1;
  for (int i = 1; i <= 18000 && first < 0; ++i)
    if (stall_rule_fires(curve, i, sc)) first = i;
  // closed form: 400 e^{-i/1500} (e^{2} - 1) < 0.1
  const int closed = static_cast<int>(std::floor(1500.0 * std::log(400.0 * (std::exp(2.0) - 1.0) / 0.1))) + 1;
  stall_ok = stall_ok && first == std::max(closed, sc.initial_iterations);
  pass = pass && stall_ok;
  d << "; stalled run stopped at " << stalled.iterations << " (" << stalled.stop_reason << "), synthetic curve at "
    << first << " vs " << closed;
  return {pass, d.str()};
}

// ---------------------------------------------------------------- 3
Outcome model_constraints() {
  const auto instances = testing::load_oracle_instances();
  const testing::OracleInstance* pick = nullptr;
  for (const auto& I : instances)
    if (I.family == "all_3d") {
      pick = &I;
      break;
    }
  if (!pick) return {false, "no three-day all-market instance in the fixture"};
  StageModel model(pick->lattice, pick->battery, pick->options);
  TrainConfig cfg;
  cfg.max_iterations = 300;
  cfg.backward_all_nodes = true;
  Policy pol = train(model, cfg);
  const double value = testing::exact_policy_value(model, pol);
  const bool converged = std::abs(value - pick->oracle_value) <= 1e-3 * std::abs(pick->oracle_value);

  SimOptions so;
  so.runs = 10000;
  so.window_first_day = 1;
  auto runs = simulate(model, pol, so);
  const double Q = pick->battery.capacity_mwh, L = pick->battery.rated_power_mw;
  long long mono_bad = 0, cache_bad = 0, tele_bad = 0, soc_bad = 0, fcr_bad = 0, checked_soc = 0;
  for (const auto& run : runs) {
    const auto& st = run.stages;
    double sum_flow = 0.0;
    for (size_t i = 0; i < st.size(); ++i) {
      const int t = static_cast<int>(i) + 1;
      const auto& r = st[i];
      const auto& out = model.outgoing(t);
      for (int k = 0; k < out.size(); ++k) {
        const auto& c = out.components[static_cast<size_t>(k)];
        const double x = r.state_out[static_cast<size_t>(k)];
        if (c.kind == StateKind::FcrBid && (x < 0.0 || x > 0.5 * L)) ++fcr_bad;
        if (k > 0 && c.level > 0 &&
            (c.kind == StateKind::IdBid || c.kind == StateKind::DaBid || c.kind == StateKind::FcrBid)) {
          const auto& p = out.components[static_cast<size_t>(k - 1)];
          if (p.kind == c.kind && p.block == c.block && r.state_out[static_cast<size_t>(k - 1)] > x) ++mono_bad;
        }
      }
      if (i > 0 && r.soc_in != st[i - 1].soc_out) ++tele_bad;
      sum_flow += r.id_cleared + r.da_delivered;
      if (r.slack_soc == 0.0) {
        ++checked_soc;
        const double tol = 1e-9 * Q;
        if (r.soc_out < r.fcr_reserved - tol || r.soc_out > Q - r.fcr_reserved + tol) ++soc_bad;
      }
      if (r.fcr_cleared) {
        const int d = r.index.day;
        for (int b = 1; b <= kBlocksPerDay; ++b) {
          const auto& del = st[static_cast<size_t>(StageIndex{d + 1, b}.linear() - 1)];
          if (del.fcr_reserved != r.fcr_cleared_blocks[static_cast<size_t>(b - 1)]) ++cache_bad;
        }
      }
    }
    const double lhs = st.back().soc_out - st.front().soc_in, rhs = -sum_flow;
    if (std::abs(lhs - rhs) > 1e-9 * std::max(1.0, Q)) ++tele_bad;
  }
  const bool pass = converged && mono_bad == 0 && cache_bad == 0 && tele_bad == 0 && soc_bad == 0 && fcr_bad == 0;
  std::ostringstream d;
  d << runs.size() << " paths (instance " << pick->seed << ", value " << fmt("%.4f", value) << " vs "
    << fmt("%.4f", pick->oracle_value) << "): monotonicity " << mono_bad << ", FCR cache " << cache_bad
    << ", telescoping " << tele_bad << ", SoC band " << soc_bad << "/" << checked_soc << ", FCR range " << fcr_bad
    << " violations";
  return {pass, d.str()};
}

// ---------------------------------------------------------------- 4
// Two days, one node. Day 1 carries an ID spread, day 2 is flat, FCR pays
// `fcr` EUR/MW per block for day 2.
MarkovLattice coordination_lattice(double fcr) {
  MarkovLattice lat;
  for (int t = 1; t <= 2 * kBlocksPerDay; ++t) {
    LatticeStage st;
    st.index = StageIndex::from_linear(t);
    LatticeNode n;
    n.da_prices.fill(50.0);
    n.fcr_prices.fill(fcr);
    const double id = t <= kBlocksPerDay ? (t % 2 == 0 ? 30.0 : 90.0) : 50.0;
    n.id_prices = {id};
    n.id_probs = {1.0};
    st.nodes.push_back(n);
    if (t > 1) st.transition = {{1.0}};
    lat.stages.push_back(st);
  }
  lat.initial = {1.0};
  return lat;
}

std::vector<double> combo_values(const MarkovLattice& lat, double scale, std::vector<std::string>* labels) {
  ModelOptions base;
  base.fcr_price_scale = scale;
  TrainConfig tc;
  tc.max_iterations = 100;
  tc.backward_all_nodes = true;
  SimOptions so;
  so.runs = 4;
  so.window_first_day = 1;
  auto sweep = market_combination_sweep(lat, BatterySpec{}, base, tc, so, all_market_combinations());
  std::vector<double> v;
  for (const auto& r : sweep.reports) {
    v.push_back(r.total_mean);
    if (labels) labels->push_back(r.key);
  }
  return v;
}

Outcome coordination() {
  std::ostringstream d;
  std::vector<std::string> keys;
  auto a = combo_values(coordination_lattice(40.0), 0.5, &keys);
  const double best_single = std::max({a[0], a[1], a[2]});
  double best_multi = -std::numeric_limits<double>::infinity();
  std::string multi_key;
  for (size_t i = 3; i < a.size(); ++i)
    if (a[i] > best_multi) {
      best_multi = a[i];
      multi_key = keys[i];
    }
  const bool strict = best_multi > best_single + 1e-6 * std::max(1.0, std::abs(best_single));
  d << "scale 0.5: best single " << fmt("%.2f", best_single) << ", " << multi_key << " " << fmt("%.2f", best_multi);

  auto b = combo_values(coordination_lattice(5000.0), 1.0, nullptr);
  const double best = *std::max_element(b.begin(), b.end());
  const double rel = (best - b[0]) / best;
  const bool fcr_ok = rel <= 0.02;
  d << "; scale 1.0, dominant FCR: FCR-only " << fmt("%.2f", b[0]) << " vs best " << fmt("%.2f", best) << " (rel "
    << fmt("%.2e", rel) << ")";
  return {strict && fcr_ok, d.str()};
}

// ---------------------------------------------------------------- 5
double brute_inertia(const std::vector<Point>& pts, int k) {
  const size_t n = pts.size(), dim = pts[0].size();
  std::vector<int> lab(n, 0);
  double best = std::numeric_limits<double>::infinity();
  std::function<void(size_t, int)> rec = [&](size_t i, int used) {
    if (n - i < static_cast<size_t>(k - used)) return;
    if (i == n) {
      double total = 0.0;
      for (int c = 0; c < k; ++c) {
        std::vector<double> mean(dim, 0.0);
        int cnt = 0;
        for (size_t p = 0; p < n; ++p)
          if (lab[p] == c) {
            ++cnt;
            for (size_t q = 0; q < dim; ++q) mean[q] += pts[p][q];
          }
        for (auto& m : mean) m /= cnt;
        for (size_t p = 0; p < n; ++p)
          if (lab[p] == c)
            for (size_t q = 0; q < dim; ++q) total += (pts[p][q] - mean[q]) * (pts[p][q] - mean[q]);
      }
      best = std::min(best, total);
      return;
    }
    for (int c = 0; c <= std::min(used, k - 1); ++c) {
      lab[i] = c;
      rec(i + 1, std::max(used, c + 1));
    }
  };
  rec(0, 0);
  return best;
}

Outcome econometrics() {
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> z(0.0, 1.0);
  std::ostringstream d;

  double ols_err = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    Eigen::MatrixXd D(50, 3);
    Eigen::VectorXd y(50);
    for (int i = 0; i < 50; ++i) {
      for (int j = 0; j < 3; ++j) D(i, j) = 5.0 * z(rng);
      y(i) = 1.0 + D(i, 0) - 2.0 * D(i, 1) + 0.3 * D(i, 2) + z(rng);
    }
    auto fit = fit_ols(D, y);
    Eigen::MatrixXd X(50, 4);
    X.col(0).setOnes();
    X.rightCols(3) = D;
    Eigen::VectorXd beta = (X.transpose() * X).ldlt().solve(X.transpose() * y);
    ols_err = std::max(ols_err, std::abs(fit.intercept - beta(0)));
    for (int j = 0; j < 3; ++j) ols_err = std::max(ols_err, std::abs(fit.coefficients[static_cast<size_t>(j)] - beta(j + 1)));
  }
  const bool ols_ok = ols_err <= 1e-8;
  d << "OLS max diff " << fmt("%.1e", ols_err);

  SynthSpec ss;
  ss.days = 60;
  auto data = generate(ss);
  auto frame = downsample_to_blocks(merge_frames(data.prices, data.fundamentals));
  auto dec = decompose_da(frame);
  bool recon_ok = true;
  for (size_t i = 0; i < frame.size(); ++i)
    if (dec.deterministic[i] + dec.stochastic[i] != frame.da_price[i]) recon_ok = false;
  d << "; reconstruction " << (recon_ok ? "exact" : "inexact");

  // quantile flags against sorted order statistics
  bool flags_ok = true;
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> v(41);
    for (auto& x : v) x = z(rng);
    auto s = v;
    std::sort(s.begin(), s.end());
    // n = 41, q = 0.1: position 4 exactly; q = 0.9: position 36
    auto fl = residual_load_quantile_flags(v, 0.1);
    flags_ok = flags_ok && fl.low_threshold == s[4] && fl.high_threshold == s[36];
    for (size_t i = 0; i < v.size(); ++i)
      flags_ok = flags_ok && fl.low[i] == (v[i] <= s[4] ? 1 : 0) && fl.high[i] == (v[i] >= s[36] ? 1 : 0);
  }
  d << "; quantile flags " << (flags_ok ? "match" : "differ");

  double row_err = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const int k = 2 + trial % 6;
    std::vector<int> labels(30 + trial);
    for (auto& l : labels) l = static_cast<int>(rng() % static_cast<std::uint64_t>(k));
    auto tm = estimate_transitions(labels, k);
    for (const auto& row : tm.p) {
      double s = 0.0;
      for (double p : row) {
        if (p < 0) row_err = 1.0;
        s += p;
      }
      row_err = std::max(row_err, std::abs(s - 1.0));
    }
  }
  const bool rows_ok = row_err <= 1e-9;
  d << "; transition rows max error " << fmt("%.1e", row_err);

  int hits = 0;
  const int trials = 40;
  for (int t = 0; t < trials; ++t) {
    const int n = 8 + t % 5;  // 8..12 points
    const int k = 2 + t % 3;
    std::vector<Point> pts;
    for (int i = 0; i < n; ++i) pts.push_back({3.0 * static_cast<double>(rng() % 3) + z(rng), z(rng)});
    auto m = kmeans(pts, k, 500 + static_cast<std::uint64_t>(t));
    if (m.inertia <= brute_inertia(pts, k) * (1 + 1e-9) + 1e-12) ++hits;
  }
  const bool km_ok = hits >= static_cast<int>(std::ceil(0.95 * trials));
  d << "; k-means optimal in " << hits << "/" << trials;
  return {ols_ok && recon_ok && flags_ok && rows_ok && km_ok, d.str()};
}

// ---------------------------------------------------------------- 6, 7
RunConfig pipeline_config(const std::string& dir) {
  RunConfig c;
  c.prices = dir + "/data/prices.csv";
  c.fundamentals = dir + "/data/fundamentals.csv";
  c.forecast = dir + "/data/forecast.csv";
  c.output_dir = dir + "/out";
  c.synth.days = 363;
  c.window_days = 3;
  c.days = 3;
  c.training.max_iterations = 1000;
  c.simulate.runs = 1000;
  return c;
}

struct PipelineRun {
  double seconds = 0.0;
  int windows = 0;
  int iterations = 0;
  int runs = 0;
  int runs_with_violation = 0;
  double violation_mean = 0.0;
};

PipelineRun run_pipeline(const RunConfig& cfg) {
  std::ostringstream log;
  const auto t0 = Clock::now();
  cmd_all(cfg, log);
  PipelineRun r;
  r.seconds = seconds_since(t0);
  auto clusters = testing::load_json(artifact_path(cfg, "clusters.json"));
  r.windows = clusters.at("windows").get<int>();
  auto reports = reports_from_json(read_text_file(artifact_path(cfg, "metrics.json")));
  r.iterations = reports.at(0).training_iterations;
  r.runs = reports.at(0).runs;
  r.runs_with_violation = reports.at(0).runs_with_violation;
  r.violation_mean = reports.at(0).storage_violation_mean;
  return r;
}

fs::path scratch_root() {
  auto p = fs::temp_directory_path() / "cobid_acceptance";
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

Outcome pipeline_closure(const fs::path& root) {
  auto cfg = pipeline_config((root / "run_a").string());
  auto r = run_pipeline(cfg);
  const bool pass = r.windows == 121 && r.iterations == 1000 && r.runs == 1000 && r.seconds <= 300.0 &&
                    r.runs_with_violation == 0;
  std::ostringstream d;
  d << "363 days -> " << r.windows << " windows, " << r.iterations << " iterations + " << r.runs << " runs in "
    << fmt("%.1f", r.seconds) << " s; " << r.runs_with_violation << " runs with storage violations (mean "
    << fmt("%.2e", r.violation_mean) << " MWh)";
  return {pass, d.str()};
}

Outcome determinism(const fs::path& root) {
  const auto a = pipeline_config((root / "run_a").string());
  if (!fs::exists(artifact_path(a, "policy.json"))) run_pipeline(a);
  const auto b = pipeline_config((root / "run_b").string());
  run_pipeline(b);
  std::vector<std::string> files{"bound_history.csv", "policy.json", "report.csv", "distribution_fcr_id_da.csv",
                                 "soc_fcr_id_da.csv", "lattice.json"};
  int same = 0;
  std::string differing;
  for (const auto& f : files) {
    if (read_text_file(artifact_path(a, f)) == read_text_file(artifact_path(b, f))) ++same;
    else differing += " " + f;
  }
  // the config hash folds in file contents, not paths, so both runs agree on it
  const bool pass = same == static_cast<int>(files.size());
  return {pass, std::to_string(same) + "/" + std::to_string(files.size()) + " artifacts byte-identical" +
                    (differing.empty() ? "" : " (differ:" + differing + ")")};
}

}  // namespace

int main(int argc, char** argv) {
  bool skip_pipeline = false;
  for (int i = 1; i < argc; ++i)
    if (std::string(argv[i]) == "--skip-pipeline") skip_pipeline = true;

  report(1, "oracle equivalence", oracle_equivalence);
  report(2, "SDDP soundness", sddp_soundness);
  report(3, "model constraints", model_constraints);
  report(4, "market coordination", coordination);
  report(5, "econometrics", econometrics);
  if (!skip_pipeline) {
    const auto root = scratch_root();
    report(6, "pipeline closure", [&] { return pipeline_closure(root); });
    report(7, "determinism", [&] { return determinism(root); });
    fs::remove_all(root);
  }
  return failures == 0 ? 0 : 1;
}
