// SPDX-License-Identifier: Apache-2.0
//
// Helpers shared by the unit tests and the acceptance runner.
#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "cobid/sddp.hpp"
#include "json.hpp"

namespace cobid::testing {

inline std::string fixture_path(const std::string& name) { return std::string(COBID_FIXTURE_DIR) + "/" + name; }

inline nlohmann::json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return nlohmann::json::parse(in);
}

/// Desk-scale instance as stored in the oracle fixture.
struct OracleInstance {
  int seed = 0;
  std::string family;
  MarkovLattice lattice;
  BatterySpec battery;
  ModelOptions options;
  double oracle_value = 0.0;
};

inline OracleInstance parse_instance(const nlohmann::json& j) {
  OracleInstance out;
  out.seed = j.at("seed").get<int>();
  out.family = j.at("family").get<std::string>();
  for (const auto& s : j.at("stages")) {
    LatticeStage st;
    st.index = {s.at("day").get<int>(), s.at("block").get<int>()};
    for (const auto& n : s.at("nodes")) {
      LatticeNode node;
      for (int b = 0; b < kBlocksPerDay; ++b) {
        node.da_prices[static_cast<size_t>(b)] = n.at("da_prices").at(static_cast<size_t>(b)).get<double>();
        node.fcr_prices[static_cast<size_t>(b)] = n.at("fcr_prices").at(static_cast<size_t>(b)).get<double>();
      }
      node.id_prices = n.at("id_prices").get<std::vector<double>>();
      node.id_probs = n.at("id_probs").get<std::vector<double>>();
      st.nodes.push_back(std::move(node));
    }
    st.transition = s.at("transition").get<Matrix>();
    out.lattice.stages.push_back(std::move(st));
  }
  out.lattice.initial = j.at("initial").get<std::vector<double>>();
  const auto& b = j.at("battery");
  out.battery.capacity_mwh = b.at("capacity_mwh").get<double>();
  out.battery.rated_power_mw = b.at("rated_power_mw").get<double>();
  out.battery.soc_start_mwh = b.at("soc_start_mwh").get<double>();
  out.battery.penalty_eur_per_mwh = b.at("penalty_eur_mwh").get<double>();
  std::string markets;
  for (const auto& m : j.at("markets")) markets += (markets.empty() ? "" : ",") + m.get<std::string>();
  out.options.markets = MarketSet::parse(markets);
  out.options.fcr_price_scale = j.at("fcr_price_scale").get<double>();
  out.options.id_constraints = j.at("id_constraints").get<bool>();
  out.options.terminal_soc = j.at("terminal_soc").get<bool>();
  out.oracle_value = j.at("oracle_value").get<double>();
  return out;
}

inline std::vector<OracleInstance> load_oracle_instances() {
  std::vector<OracleInstance> out;
  const auto doc = load_json(fixture_path("oracle_instances.json"));
  for (const auto& j : doc.at("instances")) out.push_back(parse_instance(j));
  return out;
}

/// Exact expected value of following the policy, by enumerating every
/// positive-probability (node, ID level) sequence of the lattice.
inline double exact_policy_value(const StageModel& model, const Policy& policy, int t, int node, int level, double prob,
                                 const std::vector<double>& incoming) {
  auto s = solve_stage(model, policy, t, node, level, incoming);
  double v = prob * s.record.stage_value;
  if (t == model.num_stages()) return v;
  const auto& next = model.lattice().stage(t + 1);
  for (size_t j = 0; j < next.nodes.size(); ++j) {
    const double p = next.transition[static_cast<size_t>(node)][j];
    if (p <= 0) continue;
    const auto probs = model.id_probabilities(t + 1, static_cast<int>(j));
    for (size_t l = 0; l < probs.size(); ++l)
      if (probs[l] > 0)
        v += exact_policy_value(model, policy, t + 1, static_cast<int>(j), static_cast<int>(l), prob * p * probs[l],
                                s.record.state_out);
  }
  return v;
}

inline double exact_policy_value(const StageModel& model, const Policy& policy) {
  double v = 0.0;
  const auto& init = model.lattice().initial;
  for (size_t n = 0; n < init.size(); ++n)
    if (init[n] > 0) v += exact_policy_value(model, policy, 1, static_cast<int>(n), 0, init[n], model.initial_state());
  return v;
}

/// Two-day ID-only lattice: buy at 50 in block 2, sell at 100 afterwards.
/// Starting half full with Q = L = 10 the optimum is 5*(-50) + 10*100 = 750.
inline MarkovLattice toy_lattice() {
  MarkovLattice lat;
  for (int t = 1; t <= 2 * kBlocksPerDay; ++t) {
    LatticeStage st;
    st.index = StageIndex::from_linear(t);
    LatticeNode n;
    n.da_prices.fill(50.0);
    n.fcr_prices.fill(10.0);
    n.id_prices = {t == 2 ? 50.0 : 100.0};
    n.id_probs = {1.0};
    st.nodes.push_back(n);
    if (t > 1) st.transition = {{1.0}};
    lat.stages.push_back(st);
  }
  lat.initial = {1.0};
  return lat;
}

inline ModelOptions toy_options() {
  ModelOptions o;
  o.markets = MarketSet{Market::ID};
  o.terminal_soc = false;
  return o;
}

/// Scratch directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    path_ = std::filesystem::temp_directory_path() /
            ("cobid_" + tag + "_" + std::to_string(reinterpret_cast<std::uintptr_t>(this)));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  [[nodiscard]] std::string str() const { return path_.string(); }
  [[nodiscard]] std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

}  // namespace cobid::testing
