// SPDX-License-Identifier: Apache-2.0
#include "cobid/market.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

#include "cobid/errors.hpp"

namespace cobid {

std::string_view to_string(Market m) {
  switch (m) {
    case Market::DA: return "DA";
    case Market::ID: return "ID";
    case Market::FCR: return "FCR";
  }
  return "?";
}

StageIndex StageIndex::from_linear(int t) {
  if (t < 1) throw ConfigError("stage index must be >= 1, got " + std::to_string(t));
  return {(t - 1) / kBlocksPerDay + 1, (t - 1) % kBlocksPerDay + 1};
}

std::string to_string(StageIndex s) {
  return "(" + std::to_string(s.day) + "," + std::to_string(s.block) + ")";
}

MarketSet::MarketSet(std::initializer_list<Market> markets) {
  for (Market m : markets) insert(m);
}

MarketSet MarketSet::parse(std::string_view text) {
  MarketSet set;
  std::string token;
  auto flush = [&] {
    std::string t;
    for (char c : token)
      if (!std::isspace(static_cast<unsigned char>(c)))
        t.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    token.clear();
    if (t.empty()) return;
    if (t == "da") set.insert(Market::DA);
    else if (t == "id") set.insert(Market::ID);
    else if (t == "fcr") set.insert(Market::FCR);
    else throw ConfigError("unknown market '" + t + "' (expected da, id or fcr)");
  };
  for (char c : text) {
    if (c == ',' || c == '+') flush();
    else token.push_back(c);
  }
  flush();
  if (set.empty()) throw ConfigError("market list is empty");
  return set;
}

std::string MarketSet::label() const {
  std::vector<std::string> parts;
  if (contains(Market::FCR) && !contains(Market::ID)) parts.push_back("FCR");
  if (contains(Market::ID)) parts.push_back("ID");
  if (contains(Market::FCR) && contains(Market::ID)) {
    // table order puts FCR after ID in "ID, FCR" but first in "FCR, ID, DA"
    if (contains(Market::DA)) parts.insert(parts.begin(), "FCR");
    else parts.push_back("FCR");
  }
  if (contains(Market::DA)) parts.push_back("DA");
  std::string out;
  for (size_t i = 0; i < parts.size(); ++i) {
    if (i) out += ", ";
    out += parts[i];
  }
  return out;
}

std::string MarketSet::key() const {
  std::string out = label();
  std::string key;
  for (char c : out) {
    if (c == ',') continue;
    if (c == ' ') key.push_back('_');
    else key.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  return key;
}

std::vector<MarketSet> all_market_combinations() {
  return {{Market::FCR},
          {Market::ID},
          {Market::DA},
          {Market::FCR, Market::DA},
          {Market::ID, Market::FCR},
          {Market::ID, Market::DA},
          {Market::FCR, Market::ID, Market::DA}};
}

MarketSchedule schedule_of(Market m) {
  switch (m) {
    case Market::FCR: return {m, 3, 4, {4, 5, 6}};
    case Market::DA: return {m, 4, 1, {}};
    case Market::ID: return {m, 0, 0, {}};
  }
  return {m, 0, 0, {}};
}

void BatterySpec::validate() const {
  if (!(capacity_mwh > 0)) throw ConfigError("battery.capacity_mwh must be > 0");
  if (!(rated_power_mw > 0)) throw ConfigError("battery.power_mw must be > 0");
  if (!(soc_start_mwh >= 0 && soc_start_mwh <= capacity_mwh))
    throw ConfigError("battery.soc_start_mwh must lie in [0, capacity_mwh]");
  if (!(penalty_eur_per_mwh >= 0)) throw ConfigError("penalty_eur_mwh must be >= 0");
}

Horizon::Horizon(int days) : days_(days) {
  if (days < 2) throw ConfigError("horizon needs at least 2 days, got " + std::to_string(days));
  stages_.reserve(static_cast<size_t>(size()));
  for (int d = 1; d <= days; ++d)
    for (int f = 1; f <= kBlocksPerDay; ++f)
      stages_.push_back({{d, f}, d == 1, d == days, f == kBlocksPerDay});
}

bool Horizon::is_bid_stage(Market m, StageIndex s) const {
  if (s.day < 1 || s.day > days_) return false;
  switch (m) {
    case Market::FCR: return s.block == 3 && s.day < days_;
    case Market::DA: return s.block == 4 && s.day < days_;
    case Market::ID: return s.block < kBlocksPerDay || s.day < days_;
  }
  return false;
}

bool Horizon::is_clearing_stage(Market m, StageIndex s) const {
  if (s.day < 1 || s.day > days_) return false;
  switch (m) {
    case Market::FCR: return s.block == 4 && s.day < days_;
    case Market::DA: return s.block == 1 && s.day >= 2;
    case Market::ID: return !(s.day == 1 && s.block == 1);
  }
  return false;
}

std::vector<StageIndex> Horizon::bid_stages(Market m) const {
  std::vector<StageIndex> out;
  for (const auto& st : stages_)
    if (is_bid_stage(m, st.index)) out.push_back(st.index);
  return out;
}

std::vector<StageIndex> Horizon::clearing_stages(Market m) const {
  std::vector<StageIndex> out;
  for (const auto& st : stages_)
    if (is_clearing_stage(m, st.index)) out.push_back(st.index);
  return out;
}

std::optional<StageIndex> Horizon::clearing_of_bid(Market m, StageIndex bid) const {
  if (!is_bid_stage(m, bid)) return std::nullopt;
  switch (m) {
    case Market::FCR: return StageIndex{bid.day, 4};
    case Market::DA: return StageIndex{bid.day + 1, 1};
    case Market::ID: return next(bid);
  }
  return std::nullopt;
}

std::vector<StageIndex> Horizon::delivery_of_clearing(Market m, StageIndex c) const {
  std::vector<StageIndex> out;
  if (!is_clearing_stage(m, c)) return out;
  switch (m) {
    case Market::FCR:
      for (int f = 1; f <= kBlocksPerDay; ++f) out.push_back({c.day + 1, f});
      break;
    case Market::DA:
      for (int f = 1; f <= kBlocksPerDay; ++f) out.push_back({c.day, f});
      break;
    case Market::ID: out.push_back(c); break;
  }
  return out;
}

std::optional<StageIndex> Horizon::next(StageIndex s) const {
  int t = s.linear() + 1;
  if (t > size()) return std::nullopt;
  return StageIndex::from_linear(t);
}

Horizon build_horizon(int days) { return Horizon(days); }

std::vector<StageIndex> clearing_stages(Market m, const Horizon& horizon) {
  return horizon.clearing_stages(m);
}

}  // namespace cobid
