// SPDX-License-Identifier: Apache-2.0
#include "doctest.h"

#include <omp.h>

#include "cobid/errors.hpp"
#include "cobid/simulation.hpp"
#include "support.hpp"

using namespace cobid;

namespace {

bool same_runs(const std::vector<SimRun>& a, const std::vector<SimRun>& b) {
  if (a.size() != b.size()) return false;
  for (size_t r = 0; r < a.size(); ++r) {
    if (a[r].path.nodes != b[r].path.nodes || a[r].path.id_levels != b[r].path.id_levels) return false;
    if (a[r].summary.total != b[r].summary.total || a[r].summary.penalty != b[r].summary.penalty) return false;
    if (a[r].stages.size() != b[r].stages.size()) return false;
    for (size_t t = 0; t < a[r].stages.size(); ++t)
      if (a[r].stages[t].state_out != b[r].stages[t].state_out) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("parallel simulation equals the serial reference") {
  auto I = testing::load_oracle_instances().at(0);
  StageModel model(I.lattice, I.battery, I.options);
  TrainConfig cfg;
  cfg.max_iterations = 60;
  auto pol = train(model, cfg);
  SimOptions o;
  o.runs = 200;
  omp_set_num_threads(4);
  auto a = simulate(model, pol, o);
  auto b = simulate_serial(model, pol, o);
  CHECK(same_runs(a, b));
  o.keep_stages = false;
  auto c = simulate(model, pol, o);
  CHECK(c[0].stages.empty());
  CHECK(c[17].summary.total == a[17].summary.total);
}

TEST_CASE("toy simulation books the arbitrage inside the window") {
  auto lat = testing::toy_lattice();
  StageModel model(lat, BatterySpec{}, testing::toy_options());
  TrainConfig cfg;
  cfg.max_iterations = 30;
  auto pol = train(model, cfg);
  SimOptions o;
  o.runs = 3;
  o.window_first_day = 1;
  auto runs = simulate(model, pol, o);
  for (const auto& r : runs) {
    CHECK(r.summary.total == doctest::Approx(750.0).epsilon(1e-6));
    const auto& id = r.summary.market[market_slot(Market::ID)];
    CHECK(id.revenue == doctest::Approx(750.0).epsilon(1e-6));
    CHECK(id.volume == doctest::Approx(15.0).epsilon(1e-6));
    CHECK(id.balance == doctest::Approx(-5.0).epsilon(1e-6));
    CHECK(r.summary.soc_window_start == doctest::Approx(5.0));
    CHECK(r.summary.soc_window_end == doctest::Approx(0.0).epsilon(1e-6));
  }
  // day 2 only: the purchase on day 1 falls outside the window
  auto day2 = summarize(model, runs[0].stages, 2, 2);
  CHECK(day2.total == doctest::Approx(1000.0).epsilon(1e-6));
}

TEST_CASE("FCR revenue is attributed to the delivery day") {
  auto lat = testing::toy_lattice();
  StageModel model(lat, BatterySpec{}, testing::toy_options());
  std::vector<StageRecord> recs(12);
  for (int t = 1; t <= 12; ++t) recs[static_cast<size_t>(t - 1)].index = StageIndex::from_linear(t);
  recs[3].fcr_cleared = true;
  recs[3].revenue_fcr = 40.0;
  recs[9].fcr_cleared = true;  // day 2 clearing, delivered on day 3 outside a 2-day horizon
  recs[9].revenue_fcr = 7.0;
  auto s = summarize(model, recs, 2, 2);
  CHECK(s.market[market_slot(Market::FCR)].revenue == doctest::Approx(40.0));
  auto s1 = summarize(model, recs, 1, 1);
  CHECK(s1.market[market_slot(Market::FCR)].revenue == 0.0);
}

TEST_CASE("simulation options are validated") {
  auto lat = testing::toy_lattice();
  StageModel model(lat, BatterySpec{}, testing::toy_options());
  auto pol = empty_policy(model);
  SimOptions o;
  o.runs = 1;
  o.window_first_day = 3;
  CHECK_THROWS_AS(simulate(model, pol, o), ConfigError);
  o = {};
  o.runs = -1;
  CHECK_THROWS_AS(simulate(model, pol, o), ConfigError);
  pol.cuts.pop_back();
  o = {};
  o.runs = 1;
  CHECK_THROWS_AS(simulate(model, pol, o), DataError);
}
