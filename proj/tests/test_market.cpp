// SPDX-License-Identifier: Apache-2.0
#include "doctest.h"

#include "cobid/errors.hpp"
#include "cobid/market.hpp"

using namespace cobid;

TEST_CASE("stage indexing round-trips") {
  for (int t = 1; t <= 18; ++t) {
    auto s = StageIndex::from_linear(t);
    CHECK(s.linear() == t);
    CHECK(s.block >= 1);
    CHECK(s.block <= kBlocksPerDay);
  }
  CHECK(StageIndex::from_linear(7) == StageIndex{2, 1});
  CHECK(to_string(StageIndex{3, 4}) == "(3,4)");
}

TEST_CASE("market set parsing and labels") {
  auto all = MarketSet::parse("DA, id ,fcr");
  CHECK(all == MarketSet::all());
  CHECK(all.label() == "FCR, ID, DA");
  CHECK(MarketSet::parse("da,fcr").key() == "fcr_da");
  CHECK_THROWS_AS(MarketSet::parse("da,xx"), ConfigError);
  CHECK_THROWS_AS(MarketSet::parse(""), ConfigError);

  auto combos = all_market_combinations();
  REQUIRE(combos.size() == 7);
  CHECK(combos[0] == MarketSet{Market::FCR});
  CHECK(combos[1] == MarketSet{Market::ID});
  CHECK(combos[2] == MarketSet{Market::DA});
  CHECK(combos[6] == MarketSet::all());
}

TEST_CASE("bid and clearing calendar on a three-day horizon") {
  Horizon h(3);
  CHECK(h.size() == 18);
  CHECK(h.bid_stages(Market::FCR) == std::vector<StageIndex>{{1, 3}, {2, 3}});
  CHECK(h.clearing_stages(Market::FCR) == std::vector<StageIndex>{{1, 4}, {2, 4}});
  CHECK(h.bid_stages(Market::DA) == std::vector<StageIndex>{{1, 4}, {2, 4}});
  CHECK(h.clearing_stages(Market::DA) == std::vector<StageIndex>{{2, 1}, {3, 1}});
  CHECK(h.bid_stages(Market::ID).size() == 17);
  CHECK(h.clearing_stages(Market::ID).size() == 17);

  CHECK(h.clearing_of_bid(Market::DA, {1, 4}) == StageIndex{2, 1});
  CHECK(h.clearing_of_bid(Market::ID, {1, 6}) == StageIndex{2, 1});
  CHECK_FALSE(h.clearing_of_bid(Market::ID, {3, 6}).has_value());
  CHECK_FALSE(h.clearing_of_bid(Market::FCR, {3, 3}).has_value());

  auto fcr = h.delivery_of_clearing(Market::FCR, {1, 4});
  REQUIRE(fcr.size() == 6);
  CHECK(fcr.front() == StageIndex{2, 1});
  CHECK(fcr.back() == StageIndex{2, 6});
  CHECK(h.delivery_of_clearing(Market::ID, {2, 2}) == std::vector<StageIndex>{{2, 2}});

  CHECK(h.stage(1).id_only_day);
  CHECK(h.stage(18).last_day);
  CHECK(h.stage(6).id_rest);
  CHECK_THROWS_AS(Horizon(1), ConfigError);
}

TEST_CASE("schedules and battery validation") {
  auto f = schedule_of(Market::FCR);
  CHECK(f.bid_block == 3);
  CHECK(f.clearing_block == 4);
  CHECK(f.cache_blocks == std::vector<int>{4, 5, 6});
  CHECK(schedule_of(Market::DA).bid_block == 4);

  BatterySpec b;
  CHECK_NOTHROW(b.validate());
  b.soc_start_mwh = 11.0;
  CHECK_THROWS_AS(b.validate(), ConfigError);
  b = {};
  b.rated_power_mw = 0.0;
  CHECK_THROWS_AS(b.validate(), ConfigError);
}

TEST_CASE("error kinds map to exit codes") {
  CHECK(exit_code_for(ConfigError("x")) == 1);
  CHECK(exit_code_for(DataError("x")) == 2);
  CHECK(exit_code_for(NumericalError("x")) == 3);
}
