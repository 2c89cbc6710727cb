// SPDX-License-Identifier: Apache-2.0
#include "cobid/stage_problem.hpp"

#include <algorithm>
#include <cmath>

#include "cobid/errors.hpp"

namespace cobid {

using lp::kInf;
using lp::Relation;

int clearing_indicator(double level_price, double realized_price) { return level_price <= realized_price ? 1 : 0; }

int cleared_level(const std::vector<double>& levels, double price) {
  int best = -1;
  const double tol = 1e-9 * std::max(1.0, std::abs(price));
  for (size_t i = 0; i < levels.size(); ++i)
    if (levels[i] <= price + tol) best = static_cast<int>(i);
  return best;
}

std::string to_string(const StateComponent& c) {
  auto b = std::to_string(c.block), l = std::to_string(c.level);
  switch (c.kind) {
    case StateKind::Soc: return "soc";
    case StateKind::IdBid: return "id_bid[" + l + "]";
    case StateKind::DaBid: return "da_bid[" + b + "][" + l + "]";
    case StateKind::DaCommit: return "da_commit[" + b + "]";
    case StateKind::FcrBid: return "fcr_bid[" + b + "][" + l + "]";
    case StateKind::FcrCommit: return "fcr_commit[" + b + "]";
    case StateKind::FcrCache: return "fcr_cache[" + b + "]";
  }
  return "?";
}

int StateLayout::find(StateKind kind, int block, int level) const {
  for (size_t i = 0; i < components.size(); ++i) {
    const auto& c = components[i];
    if (c.kind == kind && c.block == block && c.level == level) return static_cast<int>(i);
  }
  return -1;
}

std::vector<double> merge_levels(std::vector<double> prices) {
  std::sort(prices.begin(), prices.end());
  std::vector<double> out;
  for (double p : prices)
    if (out.empty() || p - out.back() > 1e-9 * std::max(1.0, std::abs(p))) out.push_back(p);
  return out;
}

StageModel::StageModel(const MarkovLattice& lattice, BatterySpec battery, ModelOptions options)
    : lattice_(&lattice), battery_(battery), options_(options), horizon_(lattice.days()) {
  lattice.validate();
  battery_.validate();
  if (options_.markets.empty()) throw ConfigError("at least one market must be enabled");
  if (!(options_.fcr_price_scale >= 0)) throw ConfigError("fcr_price_scale must be >= 0");
  const int D = horizon_.days(), T = horizon_.size();

  id_levels_.assign(static_cast<size_t>(T), {});
  if (on(Market::ID))
    for (int t = 1; t < T; ++t) {
      std::vector<double> p;
      for (const auto& n : lattice.stage(t + 1).nodes) p.insert(p.end(), n.id_prices.begin(), n.id_prices.end());
      id_levels_[static_cast<size_t>(t - 1)] = merge_levels(p);
    }
  da_levels_.assign(static_cast<size_t>(D), std::vector<std::vector<double>>(kBlocksPerDay));
  fcr_levels_.assign(static_cast<size_t>(D), std::vector<std::vector<double>>(kBlocksPerDay));
  for (int d = 1; d < D; ++d)
    for (int b = 1; b <= kBlocksPerDay; ++b) {
      std::vector<double> pd, pf;
      for (const auto& n : lattice.stage(StageIndex{d + 1, 1}.linear()).nodes)
        pd.push_back(n.da_prices[static_cast<size_t>(b - 1)]);
      for (const auto& n : lattice.stage(StageIndex{d, 4}.linear()).nodes)
        pf.push_back(n.fcr_prices[static_cast<size_t>(b - 1)]);
      if (on(Market::DA)) da_levels_[static_cast<size_t>(d - 1)][static_cast<size_t>(b - 1)] = merge_levels(pd);
      if (on(Market::FCR)) fcr_levels_[static_cast<size_t>(d - 1)][static_cast<size_t>(b - 1)] = merge_levels(pf);
    }

  first_in_.components = {{StateKind::Soc}};
  for (int t = 1; t <= T; ++t) {
    const auto s = StageIndex::from_linear(t);
    const int d = s.day, f = s.block;
    StateLayout L;
    L.components.push_back({StateKind::Soc});
    if (on(Market::ID) && t < T)
      for (int l = 0; l < static_cast<int>(id_levels(t).size()); ++l) L.components.push_back({StateKind::IdBid, 0, l});
    if (on(Market::DA) && d < D && f >= 4)
      for (int b = 1; b <= kBlocksPerDay; ++b)
        for (int l = 0; l < static_cast<int>(da_levels(d, b).size()); ++l)
          L.components.push_back({StateKind::DaBid, b, l});
    if (on(Market::DA) && d >= 2)
      for (int b = f + 1; b <= kBlocksPerDay; ++b) L.components.push_back({StateKind::DaCommit, b});
    if (on(Market::FCR) && d < D && f == 3)
      for (int b = 1; b <= kBlocksPerDay; ++b)
        for (int l = 0; l < static_cast<int>(fcr_levels(d, b).size()); ++l)
          L.components.push_back({StateKind::FcrBid, b, l});
    if (on(Market::FCR)) {
      if (d < D && f >= 4)
        for (int b = 1; b <= 3; ++b) L.components.push_back({StateKind::FcrCommit, b});
      if (d >= 2)
        for (int b = f + 1; b <= kBlocksPerDay; ++b) L.components.push_back({StateKind::FcrCommit, b});
      if (d < D && f >= 4)
        for (int b = 4; b <= kBlocksPerDay; ++b) L.components.push_back({StateKind::FcrCache, b});
    }
    out_.push_back(std::move(L));
  }

  // Crude per-stage revenue ceilings; their tail sums bound the future value.
  std::vector<double> stage_max(static_cast<size_t>(T), 0.0);
  const double L = battery_.rated_power_mw;
  for (int t = 1; t <= T; ++t) {
    const auto s = StageIndex::from_linear(t);
    double best = 0.0;
    for (const auto& n : lattice.stage(t).nodes) {
      double v = 0.0;
      if (on(Market::ID) && t >= 2)
        for (double p : n.id_prices) v = std::max(v, L * std::abs(p));
      if (on(Market::DA) && s.block == 1 && s.day >= 2)
        for (double p : n.da_prices) v += L * std::abs(p);
      if (on(Market::FCR) && s.block == 4 && s.day < D)
        for (double p : n.fcr_prices) v += options_.fcr_price_scale * 0.5 * L * std::max(0.0, p);
      best = std::max(best, v);
    }
    stage_max[static_cast<size_t>(t - 1)] = best;
  }
  cap_.assign(static_cast<size_t>(T), 0.0);
  double acc = 0.0;
  for (int t = T; t >= 1; --t) {
    cap_[static_cast<size_t>(t - 1)] = acc;
    acc += stage_max[static_cast<size_t>(t - 1)];
  }
}

const StateLayout& StageModel::incoming(int t) const { return t == 1 ? first_in_ : outgoing(t - 1); }

const std::vector<double>& StageModel::da_levels(int d, int b) const {
  return da_levels_.at(static_cast<size_t>(d - 1)).at(static_cast<size_t>(b - 1));
}

const std::vector<double>& StageModel::fcr_levels(int d, int b) const {
  return fcr_levels_.at(static_cast<size_t>(d - 1)).at(static_cast<size_t>(b - 1));
}

std::vector<double> StageModel::id_probabilities(int t, int node) const {
  if (!on(Market::ID) || t < 2) return {1.0};
  return lattice_->stage(t).nodes.at(static_cast<size_t>(node)).id_probs;
}

StageLp StageModel::build(int t, int node, int id_level, const std::vector<double>& incoming_values) const {
  const auto& in = incoming(t);
  const auto& out = outgoing(t);
  if (static_cast<int>(incoming_values.size()) != in.size())
    throw std::invalid_argument("stage " + std::to_string(t) + ": incoming state has " +
                                std::to_string(incoming_values.size()) + " values, layout expects " +
                                std::to_string(in.size()));
  const auto s = StageIndex::from_linear(t);
  const int d = s.day, f = s.block, D = horizon_.days(), T = horizon_.size();
  const auto& nd = lattice_->stage(t).nodes.at(static_cast<size_t>(node));
  const double L = battery_.rated_power_mw, Q = battery_.capacity_mwh, rho = battery_.penalty_eur_per_mwh;

  StageLp S;
  S.stage = t;
  S.da_clear_in.fill(-1);
  S.fcr_clear_in.fill(-1);
  auto& P = S.problem;

  std::vector<int> in_var;
  for (int k = 0; k < in.size(); ++k) {
    int v = P.add_variable(-kInf, kInf, 0.0, "in_" + to_string(in.components[static_cast<size_t>(k)]));
    in_var.push_back(v);
    S.fix_rows.push_back(P.add_row({{v, 1.0}}, Relation::Equal, incoming_values[static_cast<size_t>(k)], true,
                                   "fix_" + to_string(in.components[static_cast<size_t>(k)])));
  }
  auto in_at = [&](StateKind kind, int block = 0, int level = 0) {
    int k = in.find(kind, block, level);
    if (k < 0)
      throw std::logic_error("stage " + to_string(s) + ": missing incoming component " +
                             to_string(StateComponent{kind, block, level}));
    return k;
  };
  auto add_obj = [&](int k, double c) {
    int v = in_var[static_cast<size_t>(k)];
    P.set_objective(v, P.var(v).objective + c);
  };

  // clearing of incoming bids
  if (on(Market::ID) && t >= 2) {
    S.id_price = nd.id_prices.at(static_cast<size_t>(id_level));
    int l = cleared_level(id_levels(t - 1), S.id_price);
    if (l >= 0) {
      S.id_clear_in = in_at(StateKind::IdBid, 0, l);
      add_obj(S.id_clear_in, S.id_price);
    }
  }
  std::array<int, kBlocksPerDay> da_src{};
  da_src.fill(-1);
  if (on(Market::DA) && d >= 2 && f == 1) {
    for (int b = 1; b <= kBlocksPerDay; ++b) {
      double price = nd.da_prices[static_cast<size_t>(b - 1)];
      S.da_price[static_cast<size_t>(b - 1)] = price;
      int l = cleared_level(da_levels(d - 1, b), price);
      if (l < 0) continue;
      int k = in_at(StateKind::DaBid, b, l);
      S.da_clear_in[static_cast<size_t>(b - 1)] = k;
      da_src[static_cast<size_t>(b - 1)] = k;
      add_obj(k, price);
    }
    S.da_deliver_in = S.da_clear_in[0];
  } else if (on(Market::DA) && d >= 2) {
    S.da_deliver_in = in_at(StateKind::DaCommit, f);
  }
  std::array<int, kBlocksPerDay> fcr_src{};
  fcr_src.fill(-1);
  if (on(Market::FCR) && f == 4 && d < D) {
    for (int b = 1; b <= kBlocksPerDay; ++b) {
      double price = nd.fcr_prices[static_cast<size_t>(b - 1)];
      S.fcr_price[static_cast<size_t>(b - 1)] = price;
      int l = cleared_level(fcr_levels(d, b), price);
      if (l < 0) continue;
      int k = in_at(StateKind::FcrBid, b, l);
      S.fcr_clear_in[static_cast<size_t>(b - 1)] = k;
      fcr_src[static_cast<size_t>(b - 1)] = k;
      add_obj(k, options_.fcr_price_scale * price);
    }
  }
  if (on(Market::FCR) && d >= 2) S.fcr_reserved_in = in_at(StateKind::FcrCommit, f);

  // outgoing state
  int carried = -1;  // incoming index copied into the current component, -2 for a fixed zero
  auto carry = [&](int src_k, const std::string& name) {
    carried = src_k < 0 ? -2 : src_k;
    if (src_k < 0) return P.add_variable(0.0, 0.0, 0.0, name);
    int v = P.add_variable(-kInf, kInf, 0.0, name);
    P.add_row({{v, 1.0}, {in_var[static_cast<size_t>(src_k)], -1.0}}, Relation::Equal, 0.0, false, "carry_" + name);
    return v;
  };
  for (int k = 0; k < out.size(); ++k) {
    const auto& c = out.components[static_cast<size_t>(k)];
    const std::string name = "out_" + to_string(c);
    int v = -1;
    carried = -1;
    switch (c.kind) {
      case StateKind::Soc: v = P.add_variable(-kInf, kInf, 0.0, name); break;
      case StateKind::IdBid: v = P.add_variable(-L, L, 0.0, name); break;
      case StateKind::DaBid:
        if (f == 4) v = P.add_variable(-L, L, 0.0, name);
        else v = carry(in_at(StateKind::DaBid, c.block, c.level), name);
        break;
      case StateKind::DaCommit:
        if (f == 1) v = carry(da_src[static_cast<size_t>(c.block - 1)], name);
        else v = carry(in_at(StateKind::DaCommit, c.block), name);
        break;
      case StateKind::FcrBid: v = P.add_variable(0.0, 0.5 * L, 0.0, name); break;
      case StateKind::FcrCommit:
        if (c.block > f) {  // today's commitment
          if (f == 1 && c.block >= 4) v = carry(in_at(StateKind::FcrCache, c.block), name);
          else v = carry(in_at(StateKind::FcrCommit, c.block), name);
        } else {  // next day's, cleared at block 4
          if (f == 4) v = carry(fcr_src[static_cast<size_t>(c.block - 1)], name);
          else v = carry(in_at(StateKind::FcrCommit, c.block), name);
        }
        break;
      case StateKind::FcrCache:
        if (f == 4) v = carry(fcr_src[static_cast<size_t>(c.block - 1)], name);
        else v = carry(in_at(StateKind::FcrCache, c.block), name);
        break;
    }
    S.out_vars.push_back(v);
    S.out_source.push_back(carried);
    // monotone bid curves (x_{n-1} <= x_n) for curves decided here
    bool decided = c.kind == StateKind::IdBid || c.kind == StateKind::FcrBid || (c.kind == StateKind::DaBid && f == 4);
    if (decided && c.level > 0) {
      int prev = S.out_vars[static_cast<size_t>(k - 1)];
      P.add_row({{prev, 1.0}, {v, -1.0}}, Relation::LessEqual, 0.0, false, "mono_" + to_string(c));
    }
  }
  S.soc_out = S.out_vars[0];

  // SoC dynamics: SoC_out = SoC_in - y_ID - y_DA
  {
    std::vector<lp::Term> terms{{S.soc_out, 1.0}, {in_var[0], -1.0}};
    if (S.id_clear_in >= 0) terms.push_back({in_var[static_cast<size_t>(S.id_clear_in)], 1.0});
    if (S.da_deliver_in >= 0) terms.push_back({in_var[static_cast<size_t>(S.da_deliver_in)], 1.0});
    P.add_row(std::move(terms), Relation::Equal, 0.0, false, "soc_balance");
  }
  // soft storage bounds with symmetric FCR reservation
  {
    int up = P.add_variable(0.0, kInf, -rho, "slack_soc_up");
    int dn = P.add_variable(0.0, kInf, -rho, "slack_soc_down");
    S.slack_soc = {up, dn};
    std::vector<lp::Term> hi{{S.soc_out, 1.0}, {up, -1.0}}, lo{{S.soc_out, 1.0}, {dn, 1.0}};
    if (S.fcr_reserved_in >= 0) {
      hi.push_back({in_var[static_cast<size_t>(S.fcr_reserved_in)], 1.0});
      lo.push_back({in_var[static_cast<size_t>(S.fcr_reserved_in)], -1.0});
    }
    P.add_row(std::move(hi), Relation::LessEqual, Q, false, "soc_upper");
    P.add_row(std::move(lo), Relation::GreaterEqual, 0.0, false, "soc_lower");
  }
  if (t == T && options_.terminal_soc) {
    int up = P.add_variable(0.0, kInf, -rho, "slack_terminal_up");
    int dn = P.add_variable(0.0, kInf, -rho, "slack_terminal_down");
    S.slack_terminal = {up, dn};
    P.add_row({{S.soc_out, 1.0}, {up, -1.0}, {dn, 1.0}}, Relation::Equal, battery_.soc_start_mwh, false,
              "terminal_soc");
  }
  // ID bid limits from the storage position after this stage
  if (on(Market::ID) && options_.id_constraints && t < T) {
    const auto& lv = id_levels(t);
    int top = S.out_vars[static_cast<size_t>(out.find(StateKind::IdBid, 0, static_cast<int>(lv.size()) - 1))];
    int bot = S.out_vars[static_cast<size_t>(out.find(StateKind::IdBid, 0, 0))];
    int da_up = -1, da_lo = -1, fcr_next = -1;
    if (on(Market::DA)) {
      if (f < kBlocksPerDay && d >= 2) {
        da_up = da_lo = S.out_vars[static_cast<size_t>(out.find(StateKind::DaCommit, f + 1))];
      } else if (f == kBlocksPerDay) {
        int n1 = static_cast<int>(da_levels(d, 1).size());
        da_up = S.out_vars[static_cast<size_t>(out.find(StateKind::DaBid, 1, n1 - 1))];
        da_lo = S.out_vars[static_cast<size_t>(out.find(StateKind::DaBid, 1, 0))];
      }
    }
    if (on(Market::FCR)) {
      if (f < kBlocksPerDay && d >= 2) fcr_next = S.out_vars[static_cast<size_t>(out.find(StateKind::FcrCommit, f + 1))];
      else if (f == kBlocksPerDay) fcr_next = S.out_vars[static_cast<size_t>(out.find(StateKind::FcrCommit, 1))];
    }
    int su = P.add_variable(0.0, kInf, -rho, "slack_id_up");
    int sd = P.add_variable(0.0, kInf, -rho, "slack_id_down");
    S.slack_id = {su, sd};
    std::vector<lp::Term> hi{{top, 1.0}, {S.soc_out, -1.0}, {su, -1.0}};
    std::vector<lp::Term> lo{{bot, 1.0}, {S.soc_out, -1.0}, {sd, 1.0}};
    if (da_up >= 0) hi.push_back({da_up, 1.0});
    if (da_lo >= 0) lo.push_back({da_lo, 1.0});
    if (fcr_next >= 0) {
      hi.push_back({fcr_next, 1.0});
      lo.push_back({fcr_next, -1.0});
    }
    P.add_row(std::move(hi), Relation::LessEqual, 0.0, false, "id_upper");
    P.add_row(std::move(lo), Relation::GreaterEqual, -Q, false, "id_lower");
  }
  if (t < T) S.theta = P.add_variable(-kInf, future_cap(t), 1.0, "theta");
  return S;
}

int StageModel::add_cut(StageLp& S, double intercept, const std::vector<double>& coefs) {
  std::vector<lp::Term> terms{{S.theta, 1.0}};
  for (size_t k = 0; k < coefs.size(); ++k)
    if (coefs[k] != 0.0) terms.push_back({S.out_vars[k], -coefs[k]});
  return S.problem.add_row(std::move(terms), Relation::LessEqual, intercept, false, "cut");
}

StageRecord StageModel::apply_solution(const StageLp& S, const lp::Solution& sol, int node, int id_level,
                                       const std::vector<double>& in) const {
  if (!sol.optimal())
    throw NumericalError("stage " + to_string(StageIndex::from_linear(S.stage)) + " LP is " +
                         lp::to_string(sol.status) + " despite slack variables");
  StageRecord r;
  r.index = StageIndex::from_linear(S.stage);
  r.node = node;
  r.id_level = id_level;
  auto inval = [&](int k) { return k >= 0 ? in[static_cast<size_t>(k)] : 0.0; };
  auto val = [&](int v) { return sol.values[static_cast<size_t>(v)]; };
  r.soc_in = in[0];
  r.id_cleared = inval(S.id_clear_in);
  r.da_delivered = inval(S.da_deliver_in);
  r.fcr_reserved = inval(S.fcr_reserved_in);
  r.revenue_id = S.id_price * r.id_cleared;
  const auto s = r.index;
  r.da_cleared = on(Market::DA) && s.block == 1 && s.day >= 2;
  r.fcr_cleared = on(Market::FCR) && s.block == 4 && s.day < horizon_.days();
  for (size_t b = 0; b < kBlocksPerDay; ++b) {
    r.da_cleared_blocks[b] = inval(S.da_clear_in[b]);
    r.fcr_cleared_blocks[b] = inval(S.fcr_clear_in[b]);
    r.revenue_da += S.da_price[b] * r.da_cleared_blocks[b];
    r.revenue_fcr += options_.fcr_price_scale * S.fcr_price[b] * r.fcr_cleared_blocks[b];
  }
  r.soc_out = r.soc_in - r.id_cleared - r.da_delivered;
  for (int v : S.slack_soc) r.slack_soc += val(v);
  for (int v : S.slack_id) r.slack_id += val(v);
  for (int v : S.slack_terminal) r.slack_terminal += val(v);
  r.penalty = battery_.penalty_eur_per_mwh * (r.slack_soc + r.slack_id + r.slack_terminal);
  r.stage_value = r.revenue_id + r.revenue_da + r.revenue_fcr - r.penalty;
  r.theta = S.theta >= 0 ? val(S.theta) : 0.0;
  r.state_out.reserve(S.out_vars.size());
  const auto& out = outgoing(S.stage);
  const double L = battery_.rated_power_mw;
  for (size_t k = 0; k < S.out_vars.size(); ++k) {
    const int src = S.out_source[k];
    if (src >= 0) {
      r.state_out.push_back(in[static_cast<size_t>(src)]);
      continue;
    }
    if (src == -2) {
      r.state_out.push_back(0.0);
      continue;
    }
    // bids decided here: clip LP round-off so the submitted curve is monotone and in range
    const auto& c = out.components[k];
    double x = val(S.out_vars[k]);
    if (c.kind == StateKind::FcrBid) x = std::clamp(x, 0.0, 0.5 * L);
    else if (c.kind != StateKind::Soc) x = std::clamp(x, -L, L);
    if (c.level > 0 && c.kind != StateKind::Soc) x = std::max(x, r.state_out[k - 1]);
    r.state_out.push_back(x);
  }
  r.state_out[0] = r.soc_out;
  return r;
}

}  // namespace cobid
