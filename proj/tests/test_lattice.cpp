// SPDX-License-Identifier: Apache-2.0
#include "doctest.h"

#include <cmath>
#include <numeric>
#include <random>

#include "cobid/errors.hpp"
#include "cobid/hash.hpp"
#include "cobid/lattice.hpp"
#include "cobid/policy_io.hpp"
#include "support.hpp"

using namespace cobid;

namespace {

// Two DA clusters, two FCR clusters, two days; values chosen by hand.
LatticeInputs small_inputs() {
  LatticeInputs in;
  in.da_profiles = {{-10, -5, 0, 5, 10, 0}, {8, 6, 4, 2, 0, -2}};
  in.fcr_profiles = {{0.1, 0.1, 0.0, 0.0, -0.1, -0.1}, {-0.2, 0, 0.2, 0, -0.2, 0}};
  in.da_transitions.p = {{0.75, 0.25}, {0.5, 0.5}};
  in.fcr_transitions.p = {{0.6, 0.4}, {0.3, 0.7}};
  SpreadLevels s0, s1;
  s0.levels = {-6, 0.5, 7};
  s1.levels = {-3, 0, 3};
  in.spreads = {s0, s1};
  in.da_forecast = {{40, 35, 50, 60, 70, 55}, {42, 38, 52, 61, 69, 50}};
  in.fcr_log_forecast = {{2.5, 2.6, 2.7, 2.6, 2.5, 2.4}, {2.4, 2.5, 2.6, 2.7, 2.6, 2.5}};
  return in;
}

}  // namespace

TEST_CASE("FNV-1a reference vectors") {
  CHECK(hex64(fnv1a64("")) == "cbf29ce484222325");
  CHECK(hex64(fnv1a64("a")) == "af63dc4c8601ec8c");
  CHECK(hex64(fnv1a64("foobar")) == "85944171f73967e8");
}

TEST_CASE("transition estimation is row-stochastic") {
  std::vector<int> labels{0, 1, 1, 2, 0, 1, 0, 0, 2, 2, 1};
  auto tm = estimate_transitions(labels, 4);
  REQUIRE(tm.k() == 4);
  for (const auto& row : tm.p) CHECK(std::abs(std::accumulate(row.begin(), row.end(), 0.0) - 1.0) <= 1e-9);
  // counts from label 0: ->1, ->0, ->2 (the 0 at index 6 goes to 0, index 7 to 2)
  CHECK(tm.p[0][0] == doctest::Approx(0.25));
  CHECK(tm.p[0][1] == doctest::Approx(0.5));
  CHECK(tm.p[0][2] == doctest::Approx(0.25));
  CHECK(tm.fallback_rows[3]);
  CHECK(tm.p[3][3] == 0.0);  // frequency fallback for the unused cluster
  CHECK_THROWS_AS(estimate_transitions({1}, 2), DataError);

  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<int> l(200);
    for (auto& v : l) v = static_cast<int>(rng() % 5);
    auto m = estimate_transitions(l, 5);
    for (const auto& row : m.p) CHECK(std::abs(std::accumulate(row.begin(), row.end(), 0.0) - 1.0) <= 1e-9);
  }
}

TEST_CASE("stationary distribution solves pi P = pi") {
  Matrix p{{0.9, 0.1, 0.0}, {0.2, 0.5, 0.3}, {0.0, 0.4, 0.6}};
  auto pi = stationary_distribution(p);
  for (size_t j = 0; j < 3; ++j) {
    double v = 0;
    for (size_t i = 0; i < 3; ++i) v += pi[i] * p[i][j];
    CHECK(v == doctest::Approx(pi[j]).epsilon(1e-9));
  }
  auto periodic = stationary_distribution({{0, 1}, {1, 0}});
  CHECK(periodic[0] == doctest::Approx(0.5));
}

TEST_CASE("lattice assembly follows the node and transition layout") {
  auto lat = assemble_lattice(small_inputs(), 2);
  REQUIRE(lat.num_stages() == 12);
  const auto& s1 = lat.stage(1);
  REQUIRE(s1.nodes.size() == 4);
  // node (a, b) = a * 2 + b
  CHECK(s1.nodes[3].da_cluster == 1);
  CHECK(s1.nodes[3].fcr_cluster == 1);
  CHECK(s1.nodes[2].da_prices[0] == doctest::Approx(48.0));
  // FCR prices from block 4 on refer to the next day
  CHECK(lat.stage(4).nodes[0].fcr_prices[0] == doctest::Approx(std::exp(2.4 + 0.1)));
  CHECK(lat.stage(3).nodes[0].fcr_prices[0] == doctest::Approx(std::exp(2.5 + 0.1)));
  // ID levels sit on the delivery block's DA price
  CHECK(lat.stage(3).nodes[0].id_prices == std::vector<double>{44.0, 50.5, 57.0});
  // DA moves at block 1, FCR at block 4, identity elsewhere
  CHECK(lat.stage(7).transition[0][2] == doctest::Approx(0.25));
  CHECK(lat.stage(7).transition[0][1] == 0.0);
  CHECK(lat.stage(4).transition[0][1] == doctest::Approx(0.4));
  CHECK(lat.stage(5).transition[1][1] == 1.0);
  for (const auto& st : lat.stages)
    for (const auto& row : st.transition) CHECK(std::abs(std::accumulate(row.begin(), row.end(), 0.0) - 1.0) <= 1e-9);
  CHECK(std::abs(std::accumulate(lat.initial.begin(), lat.initial.end(), 0.0) - 1.0) <= 1e-12);

  auto counts = count_paths(lat);
  // transitions at (1,4), (2,1), (2,4): 4 initial nodes times 2 * 2 * 2
  CHECK(counts.node_paths == doctest::Approx(32.0));

  auto marg = node_marginals(lat);
  for (const auto& m : marg) CHECK(std::accumulate(m.begin(), m.end(), 0.0) == doctest::Approx(1.0));
}

TEST_CASE("frozen lattice file imports and re-exports byte for byte") {
  const std::string frozen = read_text_file(testing::fixture_path("lattice_small.json"));
  auto lat = import_lattice_json(frozen);
  CHECK(lat.num_stages() == 12);
  CHECK(export_lattice_json(lat) == frozen);
  auto rebuilt = assemble_lattice(small_inputs(), 2);
  rebuilt.config_hash = lat.config_hash;
  CHECK(export_lattice_json(rebuilt) == frozen);

  std::string tampered = frozen;
  auto pos = tampered.find("\"da_cluster\": 1");
  REQUIRE(pos != std::string::npos);
  tampered.replace(pos, 15, "\"da_cluster\": 0");
  CHECK_THROWS_AS(import_lattice_json(tampered), DataError);
  CHECK_THROWS_AS(import_lattice_json("{"), DataError);
}

TEST_CASE("sampling follows the lattice probabilities") {
  auto lat = assemble_lattice(small_inputs(), 2);
  std::mt19937_64 rng(12);
  std::vector<double> freq(4, 0.0);
  const int n = 40000;
  for (int i = 0; i < n; ++i) {
    auto p = sample_path(lat, rng);
    freq[static_cast<size_t>(p.nodes[11])] += 1.0 / n;
  }
  auto marg = node_marginals(lat).back();
  for (size_t j = 0; j < 4; ++j) CHECK(std::abs(freq[j] - marg[j]) < 0.01);
  CHECK(sample_index({0.0, 0.0, 1.0}, rng) == 2);
}

TEST_CASE("validation catches broken lattices") {
  auto lat = assemble_lattice(small_inputs(), 2);
  auto bad = lat;
  bad.stages[3].transition[0][0] += 0.1;
  CHECK_THROWS_AS(bad.validate(), DataError);
  bad = lat;
  bad.initial.pop_back();
  CHECK_THROWS_AS(bad.validate(), DataError);
  bad = lat;
  std::swap(bad.stages[2].nodes[0].id_prices[0], bad.stages[2].nodes[0].id_prices[2]);
  CHECK_THROWS_AS(bad.validate(), DataError);
}
