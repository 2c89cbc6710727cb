// SPDX-License-Identifier: Apache-2.0
#include "cobid/pipeline.hpp"

#include <filesystem>
#include <iomanip>
#include <sstream>

#include "cobid/csv_io.hpp"
#include "cobid/errors.hpp"
#include "cobid/kmeans.hpp"
#include "cobid/policy_io.hpp"
#include "cobid/synth.hpp"
#include "json.hpp"

namespace cobid {

namespace fs = std::filesystem;
using nlohmann::json;

std::string artifact_path(const RunConfig& cfg, const std::string& name) {
  return (fs::path(cfg.output_dir) / name).string();
}

namespace {

void ensure_output_dir(const RunConfig& cfg) {
  std::error_code ec;
  fs::create_directories(cfg.output_dir, ec);
  if (ec) throw DataError("cannot create output directory " + cfg.output_dir + ": " + ec.message());
}

void require_file(const std::string& path, const std::string& what) {
  std::error_code ec;
  if (!fs::exists(path, ec)) throw DataError(what + " not found: " + path);
}

json read_json_artifact(const std::string& path, const std::string& format, const std::string& expected_hash,
                        const std::string& producer) {
  require_file(path, format + " artifact");
  json doc;
  try {
    doc = json::parse(read_text_file(path));
  } catch (const json::exception& e) {
    throw DataError(path + ": malformed JSON: " + e.what());
  }
  if (doc.value("format", "") != format) throw DataError(path + ": not a " + format + " file");
  if (doc.value("version", 0) != 1) throw DataError(path + ": unsupported version");
  if (doc.value("config_hash", "") != expected_hash)
    throw DataError(path + ": config hash mismatch (artifact " + doc.value("config_hash", "") + ", expected " +
                    expected_hash + "); rerun `" + producer + "`");
  return doc;
}

// Four-hour frame of history: prices merged with fundamentals.
SeriesFrame load_history(const RunConfig& cfg) {
  require_file(cfg.prices, "paths.prices");
  require_file(cfg.fundamentals, "paths.fundamentals");
  SeriesFrame merged = merge_frames(read_prices(cfg.prices), read_fundamentals(cfg.fundamentals));
  SeriesFrame blocks = merged.resolution_hours == 4 ? merged : downsample_to_blocks(merged);
  if (blocks.timestamps.empty()) throw DataError(cfg.prices + ": no rows");
  if (blocks.timestamps.front() % 86400 != 0)
    throw DataError(cfg.prices + ": series must start at midnight UTC");
  if (blocks.size() % kBlocksPerDay != 0) throw DataError(cfg.prices + ": series must cover whole days");
  return blocks;
}

std::vector<double> column(const json& doc, const char* name) { return doc.at(name).get<std::vector<double>>(); }

}  // namespace

void cmd_synth(const RunConfig& cfg, std::ostream& log) {
  SynthData data = generate(cfg.synth);
  for (const auto* p : {&cfg.prices, &cfg.fundamentals, &cfg.forecast}) {
    fs::path parent = fs::path(*p).parent_path();
    std::error_code ec;
    if (!parent.empty()) fs::create_directories(parent, ec);
    if (ec) throw DataError("cannot create directory " + parent.string() + ": " + ec.message());
  }
  write_prices(cfg.prices, data.prices);
  write_fundamentals(cfg.fundamentals, data.fundamentals);
  write_fundamentals(cfg.forecast, data.forecast);
  log << "synth: " << cfg.synth.days << " days -> " << cfg.prices << ", " << cfg.fundamentals << ", " << cfg.forecast
      << "\n";
}

void cmd_decompose(const RunConfig& cfg, std::ostream& log) {
  const auto hashes = config_hashes(cfg);
  SeriesFrame f = load_history(cfg);
  Decomposition da = decompose_da(f);
  QuantileFlags flags = residual_load_quantile_flags(f.residual_load, cfg.rl_quantile);
  Decomposition fcr = fit_fcr(f, flags);
  JarqueBera jb_da = jarque_bera(da.stochastic);

  json doc;
  doc["format"] = "cobid-decomposition";
  doc["version"] = 1;
  doc["config_hash"] = hashes.decompose;
  auto fit_json = [](const OlsFit& fit) {
    return json{{"names", fit.names},
                {"intercept", fit.intercept},
                {"coefficients", fit.coefficients},
                {"intercept_se", fit.intercept_se},
                {"standard_errors", fit.standard_errors},
                {"r2", fit.r2},
                {"adjusted_r2", fit.adjusted_r2},
                {"durbin_watson", fit.durbin_watson}};
  };
  doc["da_fit"] = fit_json(da.fit);
  doc["fcr_fit"] = fit_json(fcr.fit);
  doc["rl_low_threshold"] = flags.low_threshold;
  doc["rl_high_threshold"] = flags.high_threshold;
  doc["da_residual_jarque_bera"] = {{"statistic", jb_da.statistic}, {"p_value", jb_da.p_value}};
  doc["timestamps"] = f.timestamps;
  doc["da_price"] = f.da_price;
  doc["id_price"] = f.id_price;
  doc["da_deterministic"] = da.deterministic;
  doc["da_stochastic"] = da.stochastic;
  doc["fcr_log_deterministic"] = fcr.deterministic;
  doc["fcr_log_stochastic"] = fcr.stochastic;
  ensure_output_dir(cfg);
  write_text_file(artifact_path(cfg, "decomposition.json"), doc.dump() + "\n");

  std::ostringstream csv;
  csv << "timestamp,da_eur_mwh,da_deterministic,da_stochastic,fcr_eur_mw,fcr_log_deterministic,fcr_log_stochastic,"
         "rl_low,rl_high\n";
  for (size_t i = 0; i < f.size(); ++i)
    csv << format_timestamp(f.timestamps[i]) << ',' << format_double(f.da_price[i]) << ','
        << format_double(da.deterministic[i]) << ',' << format_double(da.stochastic[i]) << ','
        << format_double(f.fcr_price[i]) << ',' << format_double(fcr.deterministic[i]) << ','
        << format_double(fcr.stochastic[i]) << ',' << flags.low[i] << ',' << flags.high[i] << "\n";
  write_text_file(artifact_path(cfg, "decomposition.csv"), csv.str());

  log << std::setprecision(4) << "decompose: " << f.size() << " blocks, DA adj. R2 " << da.fit.adjusted_r2 << ", DW "
      << da.fit.durbin_watson << "; FCR adj. R2 " << fcr.fit.adjusted_r2 << ", DW " << fcr.fit.durbin_watson << "\n";
}

void cmd_cluster(const RunConfig& cfg, std::ostream& log) {
  const auto hashes = config_hashes(cfg);
  json dec = read_json_artifact(artifact_path(cfg, "decomposition.json"), "cobid-decomposition", hashes.decompose,
                                "cobid decompose");
  const auto da_res = column(dec, "da_stochastic");
  const auto fcr_res = column(dec, "fcr_log_stochastic");
  std::vector<std::string> warnings;
  auto da_windows = window_observations(da_res, cfg.window_days, &warnings);
  auto fcr_windows = window_observations(fcr_res, cfg.window_days, nullptr);
  if (static_cast<int>(da_windows.size()) < std::max(cfg.k_da, cfg.k_fcr))
    throw DataError("only " + std::to_string(da_windows.size()) + " windows for k_da=" + std::to_string(cfg.k_da) +
                    ", k_fcr=" + std::to_string(cfg.k_fcr));
  KMeansOptions ko;
  ko.restarts = cfg.restarts;
  ClusterModel da_km = kmeans(da_windows, cfg.k_da, mix_seed(cfg.cluster_seed, 1), ko);
  ClusterModel fcr_km = kmeans(fcr_windows, cfg.k_fcr, mix_seed(cfg.cluster_seed, 2), ko);
  ensure_output_dir(cfg);
  const int kmax = std::min<int>(cfg.elbow_k_max, static_cast<int>(da_windows.size()));
  write_elbow_csv(artifact_path(cfg, "elbow_da.csv"), elbow_scan(da_windows, 1, kmax, mix_seed(cfg.cluster_seed, 3), ko));
  write_elbow_csv(artifact_path(cfg, "elbow_fcr.csv"),
                  elbow_scan(fcr_windows, 1, kmax, mix_seed(cfg.cluster_seed, 4), ko));

  DayClustering da_days = label_days(da_km, da_res, cfg.window_days);
  DayClustering fcr_days = label_days(fcr_km, fcr_res, cfg.window_days);
  TransitionMatrix da_tr = estimate_transitions(da_days.labels, cfg.k_da);
  TransitionMatrix fcr_tr = estimate_transitions(fcr_days.labels, cfg.k_fcr);

  SeriesFrame f;
  f.resolution_hours = 4;
  f.timestamps = dec.at("timestamps").get<std::vector<std::int64_t>>();
  f.id_price = column(dec, "id_price");
  const auto det = column(dec, "da_deterministic");
  std::vector<double> recon(f.size());
  for (size_t i = 0; i < f.size(); ++i) {
    const int day = f.day_of(i), block = f.block_of(i);
    recon[i] = det[i] + da_days.profiles[static_cast<size_t>(da_days.labels[static_cast<size_t>(day)])]
                                        [static_cast<size_t>(block - 1)];
  }
  SpreadDistribution spreads = id_spreads(f, da_days.labels, recon, cfg.k_da, cfg.id_probabilities);
  for (const auto& w : spreads.warnings) warnings.push_back(w);
  for (const auto& w : da_tr.warnings) warnings.push_back("DA transitions: " + w);
  for (const auto& w : fcr_tr.warnings) warnings.push_back("FCR transitions: " + w);

  json doc;
  doc["format"] = "cobid-clusters";
  doc["version"] = 1;
  doc["config_hash"] = hashes.cluster;
  doc["windows"] = da_windows.size();
  doc["da_inertia"] = da_km.inertia;
  doc["fcr_inertia"] = fcr_km.inertia;
  doc["da_profiles"] = da_days.profiles;
  doc["fcr_profiles"] = fcr_days.profiles;
  doc["da_labels"] = da_days.labels;
  doc["fcr_labels"] = fcr_days.labels;
  doc["da_transitions"] = da_tr.p;
  doc["fcr_transitions"] = fcr_tr.p;
  json sp = json::array();
  for (size_t c = 0; c < spreads.clusters.size(); ++c) {
    const auto& s = spreads.clusters[c];
    JarqueBera jb = jarque_bera(spreads.cluster_samples[c].size() >= 3 ? spreads.cluster_samples[c]
                                                                       : std::vector<double>{0, 0, 0});
    sp.push_back({{"levels", s.levels},
                  {"probabilities", s.probabilities},
                  {"samples", s.samples},
                  {"pooled_fallback", s.pooled_fallback},
                  {"jarque_bera", jb.statistic},
                  {"jarque_bera_p", jb.p_value}});
  }
  doc["id_spreads"] = sp;
  doc["warnings"] = warnings;
  write_text_file(artifact_path(cfg, "clusters.json"), doc.dump(1) + "\n");
  for (const auto& w : warnings) log << "warning: " << w << "\n";
  log << "cluster: " << da_windows.size() << " windows, k_da=" << cfg.k_da << ", k_fcr=" << cfg.k_fcr << "\n";
}

void cmd_chain(const RunConfig& cfg, std::ostream& log) {
  const auto hashes = config_hashes(cfg);
  json dec = read_json_artifact(artifact_path(cfg, "decomposition.json"), "cobid-decomposition", hashes.decompose,
                                "cobid decompose");
  json cl = read_json_artifact(artifact_path(cfg, "clusters.json"), "cobid-clusters", hashes.cluster, "cobid cluster");
  require_file(cfg.forecast, "paths.forecast");
  SeriesFrame fc = read_fundamentals(cfg.forecast);
  if (fc.resolution_hours != 4) fc = downsample_to_blocks(fc);
  if (fc.timestamps.empty() || fc.timestamps.front() % 86400 != 0)
    throw DataError(cfg.forecast + ": forecast must start at midnight UTC");
  if (static_cast<int>(fc.size()) < cfg.days * kBlocksPerDay)
    throw DataError(cfg.forecast + ": forecast covers " + std::to_string(fc.size() / kBlocksPerDay) +
                    " days, horizon.days is " + std::to_string(cfg.days));

  auto fit_from = [](const json& j) {
    OlsFit fit;
    fit.names = j.at("names").get<std::vector<std::string>>();
    fit.intercept = j.at("intercept").get<double>();
    fit.coefficients = j.at("coefficients").get<std::vector<double>>();
    return fit;
  };
  const OlsFit da_fit = fit_from(dec.at("da_fit"));
  const OlsFit fcr_fit = fit_from(dec.at("fcr_fit"));
  QuantileFlags flags = apply_quantile_thresholds(fc.residual_load, dec.at("rl_low_threshold").get<double>(),
                                                  dec.at("rl_high_threshold").get<double>());

  LatticeInputs in;
  in.da_profiles = cl.at("da_profiles").get<std::vector<DayProfile>>();
  in.fcr_profiles = cl.at("fcr_profiles").get<std::vector<DayProfile>>();
  in.da_transitions.p = cl.at("da_transitions").get<Matrix>();
  in.fcr_transitions.p = cl.at("fcr_transitions").get<Matrix>();
  for (const auto& s : cl.at("id_spreads")) {
    SpreadLevels lv;
    lv.levels = s.at("levels").get<std::array<double, 3>>();
    lv.probabilities = s.at("probabilities").get<std::array<double, 3>>();
    lv.samples = s.at("samples").get<size_t>();
    lv.pooled_fallback = s.at("pooled_fallback").get<bool>();
    in.spreads.push_back(lv);
  }
  for (int d = 0; d < cfg.days; ++d) {
    DayProfile da{}, fcr{};
    for (int b = 0; b < kBlocksPerDay; ++b) {
      const auto r = static_cast<size_t>(d * kBlocksPerDay + b);
      da[static_cast<size_t>(b)] = da_fit.predict(da_regressors(fc.ttf_gas[r], fc.co2[r], fc.residual_load[r]));
      fcr[static_cast<size_t>(b)] = fcr_fit.predict(fcr_regressors(b + 1, flags.low[r], flags.high[r]));
    }
    in.da_forecast.push_back(da);
    in.fcr_log_forecast.push_back(fcr);
  }
  MarkovLattice lat = assemble_lattice(in, cfg.days);
  lat.config_hash = hashes.chain;
  lat.validate();
  ensure_output_dir(cfg);
  export_lattice(lat, artifact_path(cfg, "lattice.json"));
  PathCounts pc = count_paths(lat);
  log << "chain: " << lat.num_stages() << " stages, " << lat.stages.front().nodes.size() << " nodes/stage, "
      << pc.node_paths << " node paths\n";
}

MarkovLattice load_checked_lattice(const RunConfig& cfg) {
  const auto path = artifact_path(cfg, "lattice.json");
  require_file(path, "lattice artifact");
  MarkovLattice lat = import_lattice(path);
  const auto expected = config_hashes(cfg).chain;
  if (lat.config_hash != expected)
    throw DataError(path + ": config hash mismatch (artifact " + lat.config_hash + ", expected " + expected +
                    "); rerun `cobid chain`");
  if (lat.days() != cfg.days)
    throw DataError(path + ": lattice has " + std::to_string(lat.days()) + " days, horizon.days is " +
                    std::to_string(cfg.days));
  return lat;
}

void cmd_train(const RunConfig& cfg, std::ostream& log) {
  const auto hashes = config_hashes(cfg);
  MarkovLattice lat = load_checked_lattice(cfg);
  StageModel model(lat, cfg.battery, cfg.model);
  const int every = std::max(1, cfg.training.max_iterations / 20);
  Policy p = train(model, cfg.training, [&](const IterationRecord& r) {
    if (r.iteration % every == 0)
      log << "  iteration " << r.iteration << "  bound " << format_double(r.upper_bound) << "  forward "
          << format_double(r.forward_value) << "\n";
  });
  p.config_hash = hashes.train;
  ensure_output_dir(cfg);
  export_policy(p, artifact_path(cfg, "policy.json"));
  write_text_file(artifact_path(cfg, "bound_history.csv"), bound_history_csv(p));
  log << "train: " << p.iterations << " iterations (" << p.stop_reason << "), bound "
      << format_double(p.history.back().upper_bound) << ", " << p.total_cuts() << " cuts\n";
}

namespace {

Policy load_checked_policy(const RunConfig& cfg) {
  const auto path = artifact_path(cfg, "policy.json");
  require_file(path, "policy artifact");
  Policy p = import_policy(path);
  const auto expected = config_hashes(cfg).train;
  if (p.config_hash != expected)
    throw DataError(path + ": config hash mismatch (artifact " + p.config_hash + ", expected " + expected +
                    "); rerun `cobid train`");
  return p;
}

void print_table(const std::vector<SimReport>& reports, std::ostream& log) { log << report_csv(reports); }

}  // namespace

void cmd_simulate(const RunConfig& cfg, std::ostream& log) {
  const auto hashes = config_hashes(cfg);
  MarkovLattice lat = load_checked_lattice(cfg);
  Policy p = load_checked_policy(cfg);
  StageModel model(lat, cfg.battery, cfg.model);
  auto runs = simulate(model, p, cfg.simulate);
  SimReport rep = build_report(model, p, runs, cfg.simulate);
  rep.config_hash = hashes.simulate;
  export_reports({rep}, cfg.output_dir);
  log << "simulate: " << runs.size() << " runs, mean total " << format_double(rep.total_mean) << " EUR, "
      << rep.runs_with_violation << " runs with storage violations"
      << (cfg.model.id_constraints ? "" : " [ablation: ID constraints off]") << "\n";
  print_table({rep}, log);
}

void cmd_report(const RunConfig& cfg, bool sweep, std::ostream& log) {
  if (!sweep) {
    const auto path = artifact_path(cfg, "metrics.json");
    require_file(path, "metrics artifact");
    auto reports = reports_from_json(read_text_file(path));
    const auto expected = config_hashes(cfg).simulate;
    for (const auto& r : reports)
      if (r.config_hash != expected)
        throw DataError(path + ": config hash mismatch (artifact " + r.config_hash + ", expected " + expected +
                        "); rerun `cobid simulate`");
    write_text_file(artifact_path(cfg, "report.csv"), report_csv(reports));
    print_table(reports, log);
    return;
  }
  MarkovLattice lat = load_checked_lattice(cfg);
  SweepResult res = market_combination_sweep(lat, cfg.battery, cfg.model, cfg.training, cfg.simulate,
                                             all_market_combinations());
  RunConfig sub = cfg;
  const auto dir = artifact_path(cfg, "sweep");
  for (size_t i = 0; i < res.reports.size(); ++i) {
    sub.model.markets = res.reports[i].markets;
    res.reports[i].config_hash = config_hashes(sub).simulate;
  }
  export_reports(res.reports, dir);
  for (size_t i = 0; i < res.policies.size(); ++i) {
    sub.model.markets = res.reports[i].markets;
    res.policies[i].config_hash = config_hashes(sub).train;
    write_text_file((fs::path(dir) / ("bound_history_" + res.reports[i].key + ".csv")).string(),
                    bound_history_csv(res.policies[i]));
  }
  log << "report --sweep: " << res.reports.size() << " market combinations -> " << dir << "\n";
  print_table(res.reports, log);
}

void cmd_all(const RunConfig& cfg, std::ostream& log) {
  std::error_code ec;
  if (!fs::exists(cfg.prices, ec) || !fs::exists(cfg.fundamentals, ec) || !fs::exists(cfg.forecast, ec))
    cmd_synth(cfg, log);
  cmd_decompose(cfg, log);
  cmd_cluster(cfg, log);
  cmd_chain(cfg, log);
  cmd_train(cfg, log);
  cmd_simulate(cfg, log);
}

}  // namespace cobid
