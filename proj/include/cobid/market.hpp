// SPDX-License-Identifier: Apache-2.0
//
// Market calendar: stage indexing, bid/clearing schedules and battery
// parameters shared by every other module.
#pragma once

#include <array>
#include <compare>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace cobid {

inline constexpr int kBlocksPerDay = 6;

enum class Market { DA, ID, FCR };

inline constexpr std::array<Market, 3> kAllMarkets{Market::DA, Market::ID, Market::FCR};

std::string_view to_string(Market m);

/// (day, block) coordinate; day is 1-based, block in 1..6 (block 1 = 00:00-04:00).
struct StageIndex {
  int day = 1;
  int block = 1;

  /// 1-based linear index t = (day-1)*6 + block.
  [[nodiscard]] int linear() const { return (day - 1) * kBlocksPerDay + block; }
  [[nodiscard]] static StageIndex from_linear(int t);

  auto operator<=>(const StageIndex&) const = default;
};

std::string to_string(StageIndex s);

/// Subset of {DA, ID, FCR}.
class MarketSet {
 public:
  MarketSet() = default;
  MarketSet(std::initializer_list<Market> markets);

  static MarketSet all() { return {Market::DA, Market::ID, Market::FCR}; }
  /// Parses "da,id,fcr" style lists (case-insensitive). Throws ConfigError.
  static MarketSet parse(std::string_view text);

  [[nodiscard]] bool contains(Market m) const { return bits_ & bit(m); }
  [[nodiscard]] bool empty() const { return bits_ == 0; }
  void insert(Market m) { bits_ |= bit(m); }
  void erase(Market m) { bits_ &= ~bit(m); }

  /// Display label in FCR, ID, DA order, e.g. "FCR, DA".
  [[nodiscard]] std::string label() const;
  /// File-safe key, e.g. "fcr_da".
  [[nodiscard]] std::string key() const;

  bool operator==(const MarketSet&) const = default;

 private:
  static unsigned bit(Market m) { return 1u << static_cast<unsigned>(m); }
  unsigned bits_ = 0;
};

/// The seven nonempty market combinations in the column order of the
/// market-comparison table: FCR, ID, DA, FCR+DA, ID+FCR, ID+DA, FCR+ID+DA.
std::vector<MarketSet> all_market_combinations();

/// Bid and clearing rules of one market.
struct MarketSchedule {
  Market market;
  /// Block in which bids are submitted (0 for ID: every block).
  int bid_block;
  /// Block in which the bids clear (ID: the delivery block).
  int clearing_block;
  /// Blocks whose commitments are cached until the next day starts (FCR: 4..6).
  std::vector<int> cache_blocks;
};

MarketSchedule schedule_of(Market m);

struct BatterySpec {
  double capacity_mwh = 10.0;    // Q
  double rated_power_mw = 10.0;  // L, per four-hour block and direction
  double soc_start_mwh = 5.0;    // Q^start, also the terminal target
  double penalty_eur_per_mwh = 3000.0;

  /// Throws ConfigError on violated invariants.
  void validate() const;
};

struct StageInfo {
  StageIndex index;
  bool id_only_day = false;  // day 1: only ID deliveries
  bool last_day = false;     // no new FCR/DA bids
  bool id_rest = false;      // block 6: ID bid targets (d+1, 1)
};

class Horizon {
 public:
  explicit Horizon(int days);

  [[nodiscard]] int days() const { return days_; }
  [[nodiscard]] int size() const { return days_ * kBlocksPerDay; }
  [[nodiscard]] const std::vector<StageInfo>& stages() const { return stages_; }
  [[nodiscard]] const StageInfo& stage(int linear) const { return stages_.at(linear - 1); }

  [[nodiscard]] bool is_bid_stage(Market m, StageIndex s) const;
  [[nodiscard]] bool is_clearing_stage(Market m, StageIndex s) const;

  [[nodiscard]] std::vector<StageIndex> bid_stages(Market m) const;
  [[nodiscard]] std::vector<StageIndex> clearing_stages(Market m) const;

  /// Stage at which the bid placed at `bid` is cleared, if any.
  [[nodiscard]] std::optional<StageIndex> clearing_of_bid(Market m, StageIndex bid) const;
  /// Delivery stages covered by a clearing event at `clearing`.
  [[nodiscard]] std::vector<StageIndex> delivery_of_clearing(Market m, StageIndex clearing) const;

  /// Stage following s inside the horizon.
  [[nodiscard]] std::optional<StageIndex> next(StageIndex s) const;

 private:
  int days_;
  std::vector<StageInfo> stages_;
};

/// Throws ConfigError for days < 2.
Horizon build_horizon(int days);

std::vector<StageIndex> clearing_stages(Market m, const Horizon& horizon);

}  // namespace cobid
