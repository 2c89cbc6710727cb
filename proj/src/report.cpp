// SPDX-License-Identifier: Apache-2.0
#include "cobid/report.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "cobid/csv_io.hpp"
#include "cobid/errors.hpp"
#include "json.hpp"

namespace cobid {

using nlohmann::json;

double direction_term(double y_da, double y_id) {
  if (y_da * y_id < 0) return std::min(std::abs(y_da), std::abs(y_id));
  return 0.0;
}

double feasibility_term(double y_da, double y_fcr, double soc, double L) {
  const double over = y_da + y_fcr - soc;
  if (over > 0) return over;
  const double under = L + y_da - y_fcr - soc;
  if (under < 0) return std::abs(under);
  return 0.0;
}

namespace {

MetricPair ratio(double num, double den_literal, double den_abs) {
  MetricPair m;
  if (den_literal != 0.0) m.literal = num / den_literal;
  if (den_abs != 0.0) m.absolute = num / den_abs;
  return m;
}

template <class F>
MetricPair accumulate_metric(const std::vector<SimRun>& runs, int first_day, int last_day, F term) {
  double num = 0.0, lit = 0.0, ab = 0.0;
  for (const auto& run : runs)
    for (const auto& r : run.stages) {
      if (r.index.day < first_day || r.index.day > last_day) continue;
      num += term(r);
      lit += r.da_delivered + r.id_cleared;
      ab += std::abs(r.da_delivered) + std::abs(r.id_cleared);
    }
  return ratio(num, lit, ab);
}

}  // namespace

MetricPair direction_metric(const std::vector<SimRun>& runs, int first_day, int last_day) {
  return accumulate_metric(runs, first_day, last_day,
                           [](const StageRecord& r) { return direction_term(r.da_delivered, r.id_cleared); });
}

MetricPair feasibility_metric(const std::vector<SimRun>& runs, double L, int first_day, int last_day) {
  return accumulate_metric(runs, first_day, last_day, [L](const StageRecord& r) {
    return feasibility_term(r.da_delivered, r.fcr_reserved, r.soc_in, L);
  });
}

SimReport build_report(const StageModel& model, const Policy& policy, const std::vector<SimRun>& runs,
                       const SimOptions& opts) {
  SimReport rep;
  const auto& o = model.options();
  rep.markets = o.markets;
  rep.label = o.markets.label();
  rep.key = o.markets.key();
  rep.fcr_price_scale = o.fcr_price_scale;
  rep.id_constraints = o.id_constraints;
  rep.penalty_eur_mwh = model.battery().penalty_eur_per_mwh;
  rep.runs = static_cast<int>(runs.size());
  rep.config_hash = policy.config_hash;
  rep.training_unique_paths = policy.unique_paths;
  rep.training_lp_solves = policy.lp_solves;
  rep.training_iterations = policy.iterations;
  rep.upper_bound = policy.history.empty() ? 0.0 : policy.history.back().upper_bound;
  rep.path_counts = count_paths(model.lattice());
  for (const auto& run : runs) {
    for (size_t m = 0; m < 3; ++m) {
      rep.mean[m].revenue += run.summary.market[m].revenue;
      rep.mean[m].volume += run.summary.market[m].volume;
      rep.mean[m].balance += run.summary.market[m].balance;
    }
    rep.penalty_mean += run.summary.penalty;
    rep.total_mean += run.summary.total;
    rep.storage_violation_mean += run.summary.storage_violation_mwh;
    if (run.summary.storage_violation_mwh > 1e-6) ++rep.runs_with_violation;
    rep.revenues.push_back(run.summary.total);
    std::vector<double> soc;
    for (const auto& r : run.stages) soc.push_back(r.soc_out);
    rep.soc.push_back(std::move(soc));
  }
  if (!runs.empty()) {
    const double n = static_cast<double>(runs.size());
    for (auto& m : rep.mean) {
      m.revenue /= n;
      m.volume /= n;
      m.balance /= n;
    }
    rep.penalty_mean /= n;
    rep.total_mean /= n;
    rep.storage_violation_mean /= n;
  }
  const int last = opts.window_last_day > 0 ? opts.window_last_day : model.horizon().days();
  rep.direction = direction_metric(runs, opts.window_first_day, last);
  rep.feasibility = feasibility_metric(runs, model.battery().rated_power_mw, opts.window_first_day, last);
  return rep;
}

SweepResult market_combination_sweep(const MarkovLattice& lattice, const BatterySpec& battery,
                                     const ModelOptions& base, const TrainConfig& train_cfg, const SimOptions& sim,
                                     const std::vector<MarketSet>& combos) {
  SweepResult out;
  for (const auto& combo : combos) {
    ModelOptions o = base;
    o.markets = combo;
    StageModel model(lattice, battery, o);
    Policy p = train(model, train_cfg);
    p.config_hash = lattice.config_hash;
    auto runs = simulate(model, p, sim);
    out.reports.push_back(build_report(model, p, runs, sim));
    out.policies.push_back(std::move(p));
  }
  return out;
}

namespace {

const std::array<Market, 3> kRowOrder{Market::DA, Market::ID, Market::FCR};


}  // namespace

std::string report_csv(const std::vector<SimReport>& reports) {
  std::ostringstream os;
  os << "market,quantity";
  for (const auto& r : reports) os << ",\"" << r.label << "\"";
  os << "\n";
  const char* quantities[3] = {"revenue_eur", "volume", "balance_mwh"};
  for (Market m : kRowOrder) {
    for (int q = 0; q < 3; ++q) {
      os << to_string(m) << ',' << quantities[q];
      for (const auto& r : reports) {
        os << ',';
        if (!r.markets.contains(m)) {
          os << '-';
          continue;
        }
        const auto& t = r.mean[market_slot(m)];
        os << format_double(q == 0 ? t.revenue : q == 1 ? t.volume : t.balance);
      }
      os << "\n";
    }
  }
  os << "Penalty,cost_eur";
  for (const auto& r : reports) os << ',' << format_double(r.penalty_mean);
  os << "\nTotal,revenue_eur";
  for (const auto& r : reports) os << ',' << format_double(r.total_mean);
  os << "\n";
  return os.str();
}

std::string distribution_csv(const SimReport& r) {
  std::ostringstream os;
  os << "run,revenue_eur\n";
  for (size_t i = 0; i < r.revenues.size(); ++i) os << i << ',' << format_double(r.revenues[i]) << "\n";
  return os.str();
}

std::string soc_csv(const SimReport& r) {
  std::ostringstream os;
  os << "stage,run,soc_mwh\n";
  size_t stages = 0;
  for (const auto& row : r.soc) stages = std::max(stages, row.size());
  for (size_t t = 0; t < stages; ++t)
    for (size_t run = 0; run < r.soc.size(); ++run)
      if (t < r.soc[run].size()) os << t + 1 << ',' << run << ',' << format_double(r.soc[run][t]) << "\n";
  return os.str();
}

namespace {

json metric_json(const MetricPair& m) {
  json j;
  j["literal"] = m.literal ? json(*m.literal) : json(nullptr);
  j["absolute"] = m.absolute ? json(*m.absolute) : json(nullptr);
  return j;
}

MetricPair metric_from(const json& j) {
  MetricPair m;
  if (!j.at("literal").is_null()) m.literal = j.at("literal").get<double>();
  if (!j.at("absolute").is_null()) m.absolute = j.at("absolute").get<double>();
  return m;
}

}  // namespace

std::string metrics_json(const std::vector<SimReport>& reports) {
  json arr = json::array();
  for (const auto& r : reports) {
    json j;
    j["label"] = r.label;
    j["key"] = r.key;
    j["fcr_price_scale"] = r.fcr_price_scale;
    j["id_constraints"] = r.id_constraints;
    j["ablation_no_id_constraints"] = !r.id_constraints;
    j["penalty_eur_mwh"] = r.penalty_eur_mwh;
    j["runs"] = r.runs;
    json markets;
    for (Market m : kRowOrder) {
      if (!r.markets.contains(m)) continue;
      const auto& t = r.mean[market_slot(m)];
      markets[std::string(to_string(m))] = {{"revenue_eur", t.revenue}, {"volume", t.volume}, {"balance_mwh", t.balance}};
    }
    j["markets"] = markets;
    j["penalty_eur"] = r.penalty_mean;
    j["total_eur"] = r.total_mean;
    j["direction"] = metric_json(r.direction);
    j["feasibility"] = metric_json(r.feasibility);
    j["storage_violation_mwh_mean"] = r.storage_violation_mean;
    j["runs_with_storage_violation"] = r.runs_with_violation;
    j["path_counts"] = {{"lattice_node_paths", r.path_counts.node_paths},
                        {"lattice_price_paths", r.path_counts.price_paths},
                        {"stage_price_tuples", r.path_counts.distinct_price_tuples},
                        {"training_unique_node_paths", r.training_unique_paths},
                        {"training_lp_solves", r.training_lp_solves}};
    j["training_iterations"] = r.training_iterations;
    j["upper_bound_eur"] = r.upper_bound;
    j["revenues"] = r.revenues;
    j["config_hash"] = r.config_hash;
    arr.push_back(j);
  }
  json doc;
  doc["format"] = "cobid-report";
  doc["version"] = 1;
  doc["reports"] = arr;
  return doc.dump(1) + "\n";
}

std::vector<SimReport> reports_from_json(const std::string& text) {
  std::vector<SimReport> out;
  try {
    json doc = json::parse(text);
    if (doc.value("format", "") != "cobid-report") throw DataError("not a report file");
    for (const auto& j : doc.at("reports")) {
      SimReport r;
      r.label = j.at("label").get<std::string>();
      r.key = j.at("key").get<std::string>();
      r.fcr_price_scale = j.at("fcr_price_scale").get<double>();
      r.id_constraints = j.at("id_constraints").get<bool>();
      r.penalty_eur_mwh = j.at("penalty_eur_mwh").get<double>();
      r.runs = j.at("runs").get<int>();
      for (const auto& [name, v] : j.at("markets").items()) {
        Market m = name == "DA" ? Market::DA : name == "ID" ? Market::ID : Market::FCR;
        r.markets.insert(m);
        auto& t = r.mean[market_slot(m)];
        t.revenue = v.at("revenue_eur").get<double>();
        t.volume = v.at("volume").get<double>();
        t.balance = v.at("balance_mwh").get<double>();
      }
      r.penalty_mean = j.at("penalty_eur").get<double>();
      r.total_mean = j.at("total_eur").get<double>();
      r.direction = metric_from(j.at("direction"));
      r.feasibility = metric_from(j.at("feasibility"));
      r.storage_violation_mean = j.at("storage_violation_mwh_mean").get<double>();
      r.runs_with_violation = j.at("runs_with_storage_violation").get<int>();
      const auto& pc = j.at("path_counts");
      r.path_counts.node_paths = pc.at("lattice_node_paths").get<double>();
      r.path_counts.price_paths = pc.at("lattice_price_paths").get<double>();
      r.path_counts.distinct_price_tuples = pc.at("stage_price_tuples").get<int>();
      r.training_unique_paths = pc.at("training_unique_node_paths").get<long long>();
      r.training_lp_solves = pc.at("training_lp_solves").get<long long>();
      r.training_iterations = j.at("training_iterations").get<int>();
      r.upper_bound = j.at("upper_bound_eur").get<double>();
      r.revenues = j.at("revenues").get<std::vector<double>>();
      r.config_hash = j.at("config_hash").get<std::string>();
      out.push_back(std::move(r));
    }
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed report JSON: ") + e.what());
  }
  return out;
}

void export_reports(const std::vector<SimReport>& reports, const std::string& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError("cannot create output directory " + dir + ": " + ec.message());
  auto write = [&](const std::string& name, const std::string& content) {
    std::ofstream out(fs::path(dir) / name, std::ios::binary);
    if (!out) throw DataError("cannot write " + (fs::path(dir) / name).string());
    out << content;
    if (!out) throw DataError("write failed: " + (fs::path(dir) / name).string());
  };
  write("report.csv", report_csv(reports));
  for (const auto& r : reports) {
    write("distribution_" + r.key + ".csv", distribution_csv(r));
    write("soc_" + r.key + ".csv", soc_csv(r));
  }
  write("metrics.json", metrics_json(reports));
}

}  // namespace cobid
