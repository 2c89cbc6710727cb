// SPDX-License-Identifier: Apache-2.0
#include "cobid/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

#include "cobid/errors.hpp"
#include "cobid/hash.hpp"
#include "json.hpp"

namespace cobid {

using nlohmann::json;

TransitionMatrix estimate_transitions(const std::vector<int>& labels, int k) {
  if (k < 1) throw ConfigError("transition estimation needs k >= 1");
  if (labels.size() < 2) throw DataError("transition estimation needs at least 2 labelled days");
  TransitionMatrix tm;
  Matrix counts(static_cast<size_t>(k), std::vector<double>(static_cast<size_t>(k), 0.0));
  std::vector<double> freq(static_cast<size_t>(k), 0.0);
  for (size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= k) throw DataError("cluster label out of range");
    freq[static_cast<size_t>(labels[i])] += 1.0;
    if (i + 1 < labels.size())
      counts[static_cast<size_t>(labels[i])][static_cast<size_t>(labels[i + 1])] += 1.0;
  }
  for (double& f : freq) f /= static_cast<double>(labels.size());
  if (std::count_if(freq.begin(), freq.end(), [](double f) { return f > 0; }) == 1)
    tm.warnings.push_back("label sequence uses a single cluster; transitions are degenerate");
  tm.p = counts;
  tm.fallback_rows.assign(static_cast<size_t>(k), false);
  for (size_t r = 0; r < counts.size(); ++r) {
    double s = std::accumulate(counts[r].begin(), counts[r].end(), 0.0);
    if (s > 0) {
      for (double& v : tm.p[r]) v /= s;
    } else {
      tm.p[r] = freq;
      tm.fallback_rows[r] = true;
      tm.warnings.push_back("cluster " + std::to_string(r) + " has no observed successor; using label frequencies");
    }
  }
  return tm;
}

std::vector<double> stationary_distribution(const Matrix& p) {
  const size_t k = p.size();
  std::vector<double> v(k, 1.0 / static_cast<double>(k)), next(k);
  // Power iteration on the lazy chain (I + P) / 2: same fixed points, aperiodic.
  for (int it = 0; it < 1000000; ++it) {
    for (size_t j = 0; j < k; ++j) next[j] = 0.5 * v[j];
    for (size_t i = 0; i < k; ++i)
      for (size_t j = 0; j < k; ++j) next[j] += 0.5 * v[i] * p[i][j];
    double diff = 0.0;
    for (size_t j = 0; j < k; ++j) diff += std::abs(next[j] - v[j]);
    v.swap(next);
    if (diff < 1e-15) break;
  }
  double s = std::accumulate(v.begin(), v.end(), 0.0);
  for (double& x : v) x /= s;
  return v;
}

DayClustering label_days(const ClusterModel& windows, const std::vector<double>& residuals, int window_days) {
  if (residuals.size() % kBlocksPerDay != 0) throw DataError("residual series is not a whole number of days");
  const size_t days = residuals.size() / kBlocksPerDay;
  const auto k = static_cast<size_t>(windows.k);
  for (const auto& c : windows.centroids)
    if (c.size() != static_cast<size_t>(window_days * kBlocksPerDay))
      throw DataError("centroid length does not match the window length");
  DayClustering out;
  out.labels.resize(days);
  std::vector<DayProfile> sums(k, DayProfile{});
  std::vector<int> counts(k, 0);
  for (size_t d = 0; d < days; ++d) {
    double best = std::numeric_limits<double>::infinity();
    int label = 0;
    for (size_t c = 0; c < k; ++c)
      for (int s = 0; s < window_days; ++s) {
        double dist = 0.0;
        for (int b = 0; b < kBlocksPerDay; ++b) {
          double diff = residuals[d * kBlocksPerDay + static_cast<size_t>(b)] -
                        windows.centroids[c][static_cast<size_t>(s * kBlocksPerDay + b)];
          dist += diff * diff;
        }
        if (dist < best) {
          best = dist;
          label = static_cast<int>(c);
        }
      }
    out.labels[d] = label;
    ++counts[static_cast<size_t>(label)];
    for (int b = 0; b < kBlocksPerDay; ++b)
      sums[static_cast<size_t>(label)][static_cast<size_t>(b)] += residuals[d * kBlocksPerDay + static_cast<size_t>(b)];
  }
  out.profiles.resize(k);
  for (size_t c = 0; c < k; ++c)
    for (int b = 0; b < kBlocksPerDay; ++b) {
      auto bb = static_cast<size_t>(b);
      if (counts[c] > 0) {
        out.profiles[c][bb] = sums[c][bb] / counts[c];
      } else {
        double s = 0.0;
        for (int w = 0; w < window_days; ++w) s += windows.centroids[c][static_cast<size_t>(w * kBlocksPerDay + b)];
        out.profiles[c][bb] = s / window_days;
      }
    }
  return out;
}

namespace {

void check_stochastic(const std::vector<double>& row, const std::string& what) {
  double s = 0.0;
  for (double v : row) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw DataError(what + " has a negative or non-finite entry");
    s += v;
  }
  if (std::abs(s - 1.0) > 1e-9) throw DataError(what + " sums to " + std::to_string(s) + ", not 1");
}

}  // namespace

void MarkovLattice::validate() const {
  if (stages.size() < 2 * static_cast<size_t>(kBlocksPerDay) || stages.size() % kBlocksPerDay != 0)
    throw DataError("lattice must cover a whole number of days (at least 2), got " + std::to_string(stages.size()) +
                    " stages");
  if (initial.size() != stages.front().nodes.size())
    throw DataError("initial distribution size does not match stage 1 node count");
  check_stochastic(initial, "initial distribution");
  for (size_t t = 0; t < stages.size(); ++t) {
    const auto& st = stages[t];
    const std::string where = "stage " + to_string(st.index);
    if (st.index.linear() != static_cast<int>(t) + 1) throw DataError(where + " is out of order");
    if (st.nodes.empty()) throw DataError(where + " has no nodes");
    for (size_t n = 0; n < st.nodes.size(); ++n) {
      const auto& node = st.nodes[n];
      const std::string nw = where + " node " + std::to_string(n);
      if (node.id_prices.empty() || node.id_prices.size() != node.id_probs.size())
        throw DataError(nw + " has inconsistent ID levels");
      if (!std::is_sorted(node.id_prices.begin(), node.id_prices.end()))
        throw DataError(nw + " ID levels are not ascending");
      check_stochastic(node.id_probs, nw + " ID probabilities");
      for (double v : node.da_prices)
        if (!std::isfinite(v)) throw DataError(nw + " has a non-finite DA price");
      for (double v : node.fcr_prices)
        if (!std::isfinite(v)) throw DataError(nw + " has a non-finite FCR price");
      for (double v : node.id_prices)
        if (!std::isfinite(v)) throw DataError(nw + " has a non-finite ID price");
    }
    if (t == 0) {
      if (!st.transition.empty()) throw DataError("stage 1 must not carry a transition matrix");
      continue;
    }
    if (st.transition.size() != stages[t - 1].nodes.size())
      throw DataError(where + " transition has wrong row count");
    for (size_t r = 0; r < st.transition.size(); ++r) {
      if (st.transition[r].size() != st.nodes.size()) throw DataError(where + " transition has wrong column count");
      check_stochastic(st.transition[r], where + " transition row " + std::to_string(r));
    }
  }
}

MarkovLattice assemble_lattice(const LatticeInputs& in, int days) {
  Horizon horizon(days);
  const auto kda = in.da_profiles.size(), kfcr = in.fcr_profiles.size();
  if (kda == 0 || kfcr == 0) throw DataError("lattice needs at least one DA and one FCR cluster");
  if (in.da_transitions.p.size() != kda || in.fcr_transitions.p.size() != kfcr)
    throw DataError("transition matrices do not match cluster counts");
  if (in.spreads.size() != kda) throw DataError("ID spread levels missing for some DA clusters");
  for (int d = 1; d <= days; ++d) {
    if (static_cast<int>(in.da_forecast.size()) < d)
      throw DataError("no DA forecast for stage " + to_string(StageIndex{d, 1}));
    if (static_cast<int>(in.fcr_log_forecast.size()) < d)
      throw DataError("no FCR forecast for stage " + to_string(StageIndex{d, 1}));
  }
  MarkovLattice lat;
  for (const auto& info : horizon.stages()) {
    const int d = info.index.day, f = info.index.block;
    LatticeStage st;
    st.index = info.index;
    const int fcr_day = (f >= 4 && d < days) ? d + 1 : d;
    for (size_t a = 0; a < kda; ++a)
      for (size_t b = 0; b < kfcr; ++b) {
        LatticeNode node;
        node.da_cluster = static_cast<int>(a);
        node.fcr_cluster = static_cast<int>(b);
        for (size_t blk = 0; blk < kBlocksPerDay; ++blk) {
          node.da_prices[blk] = in.da_forecast[static_cast<size_t>(d - 1)][blk] + in.da_profiles[a][blk];
          node.fcr_prices[blk] =
              std::exp(in.fcr_log_forecast[static_cast<size_t>(fcr_day - 1)][blk] + in.fcr_profiles[b][blk]);
        }
        const double base = node.da_prices[static_cast<size_t>(f - 1)];
        std::map<double, double> levels;
        for (size_t l = 0; l < 3; ++l) levels[base + in.spreads[a].levels[l]] += in.spreads[a].probabilities[l];
        for (const auto& [price, prob] : levels) {
          node.id_prices.push_back(price);
          node.id_probs.push_back(prob);
        }
        st.nodes.push_back(std::move(node));
      }
    if (info.index.linear() > 1) {
      const size_t n = kda * kfcr;
      st.transition.assign(n, std::vector<double>(n, 0.0));
      for (size_t a = 0; a < kda; ++a)
        for (size_t b = 0; b < kfcr; ++b)
          for (size_t a2 = 0; a2 < kda; ++a2)
            for (size_t b2 = 0; b2 < kfcr; ++b2) {
              double pa = f == 1 ? in.da_transitions.p[a][a2] : (a == a2 ? 1.0 : 0.0);
              double pb = f == 4 ? in.fcr_transitions.p[b][b2] : (b == b2 ? 1.0 : 0.0);
              st.transition[a * kfcr + b][a2 * kfcr + b2] = pa * pb;
            }
    }
    lat.stages.push_back(std::move(st));
  }
  auto pda = stationary_distribution(in.da_transitions.p);
  auto pfcr = stationary_distribution(in.fcr_transitions.p);
  for (size_t a = 0; a < kda; ++a)
    for (size_t b = 0; b < kfcr; ++b) lat.initial.push_back(pda[a] * pfcr[b]);
  double s = std::accumulate(lat.initial.begin(), lat.initial.end(), 0.0);
  for (double& v : lat.initial) v /= s;
  lat.validate();
  return lat;
}

int sample_index(const std::vector<double>& probs, std::mt19937_64& rng) {
  const double u = unit_double(rng());
  double acc = 0.0;
  int last = 0;
  for (size_t i = 0; i < probs.size(); ++i) {
    if (probs[i] <= 0.0) continue;
    acc += probs[i];
    last = static_cast<int>(i);
    if (u < acc) return last;
  }
  return last;
}

LatticePath sample_path(const MarkovLattice& lat, std::mt19937_64& rng) {
  LatticePath p;
  const auto T = lat.stages.size();
  p.nodes.resize(T);
  p.id_levels.resize(T);
  for (size_t t = 0; t < T; ++t) {
    const auto& probs = t == 0 ? lat.initial : lat.stages[t].transition[static_cast<size_t>(p.nodes[t - 1])];
    p.nodes[t] = sample_index(probs, rng);
    p.id_levels[t] = sample_index(lat.stages[t].nodes[static_cast<size_t>(p.nodes[t])].id_probs, rng);
  }
  return p;
}

Matrix node_marginals(const MarkovLattice& lat) {
  Matrix m;
  m.push_back(lat.initial);
  for (size_t t = 1; t < lat.stages.size(); ++t) {
    const auto& tr = lat.stages[t].transition;
    std::vector<double> next(lat.stages[t].nodes.size(), 0.0);
    for (size_t i = 0; i < tr.size(); ++i)
      for (size_t j = 0; j < next.size(); ++j) next[j] += m.back()[i] * tr[i][j];
    m.push_back(std::move(next));
  }
  return m;
}

PathCounts count_paths(const MarkovLattice& lat) {
  PathCounts pc;
  std::vector<double> nodes, prices;
  for (size_t t = 0; t < lat.stages.size(); ++t) {
    const auto& st = lat.stages[t];
    std::vector<double> n2(st.nodes.size(), 0.0), p2(st.nodes.size(), 0.0);
    for (size_t j = 0; j < st.nodes.size(); ++j) {
      double levels = 0;
      for (double q : st.nodes[j].id_probs) levels += q > 0 ? 1 : 0;
      if (t > 0) pc.distinct_price_tuples += static_cast<int>(levels);
      if (t == 0) levels = 1;  // no ID clearing in the first stage
      if (t == 0) {
        n2[j] = lat.initial[j] > 0 ? 1 : 0;
      } else {
        for (size_t i = 0; i < nodes.size(); ++i)
          if (st.transition[i][j] > 0) {
            n2[j] += nodes[i];
            p2[j] += prices[i];
          }
      }
      if (t == 0) p2[j] = n2[j];
      else p2[j] *= levels;
    }
    nodes.swap(n2);
    prices.swap(p2);
  }
  pc.node_paths = std::accumulate(nodes.begin(), nodes.end(), 0.0);
  pc.price_paths = std::accumulate(prices.begin(), prices.end(), 0.0);
  return pc;
}

namespace {

json node_to_json(const LatticeNode& n) {
  return {{"da_cluster", n.da_cluster}, {"fcr_cluster", n.fcr_cluster}, {"da_prices", n.da_prices},
          {"fcr_prices", n.fcr_prices}, {"id_prices", n.id_prices},   {"id_probs", n.id_probs}};
}

}  // namespace

std::string export_lattice_json(const MarkovLattice& lat) {
  json body;
  body["format"] = "cobid-lattice";
  body["version"] = kLatticeFormatVersion;
  body["config_hash"] = lat.config_hash;
  body["days"] = lat.days();
  body["initial"] = lat.initial;
  json stages = json::array();
  for (const auto& st : lat.stages) {
    json s;
    s["day"] = st.index.day;
    s["block"] = st.index.block;
    json nodes = json::array();
    for (const auto& n : st.nodes) nodes.push_back(node_to_json(n));
    s["nodes"] = nodes;
    s["transition"] = st.transition;
    stages.push_back(s);
  }
  body["stages"] = stages;
  body["checksum"] = hex64(fnv1a64(body.dump()));
  return body.dump(1) + "\n";
}

MarkovLattice import_lattice_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw DataError(std::string("lattice file is not valid JSON: ") + e.what());
  }
  try {
    if (doc.value("format", "") != "cobid-lattice") throw DataError("not a lattice file");
    int version = doc.at("version").get<int>();
    if (version != kLatticeFormatVersion)
      throw DataError("lattice format version " + std::to_string(version) + " is not supported (expected " +
                      std::to_string(kLatticeFormatVersion) + ")");
    std::string stored = doc.at("checksum").get<std::string>();
    json body = doc;
    body.erase("checksum");
    if (hex64(fnv1a64(body.dump())) != stored) throw DataError("lattice checksum mismatch");
    MarkovLattice lat;
    lat.config_hash = doc.at("config_hash").get<std::string>();
    lat.initial = doc.at("initial").get<std::vector<double>>();
    for (const auto& s : doc.at("stages")) {
      LatticeStage st;
      st.index = {s.at("day").get<int>(), s.at("block").get<int>()};
      for (const auto& n : s.at("nodes")) {
        LatticeNode node;
        node.da_cluster = n.at("da_cluster").get<int>();
        node.fcr_cluster = n.at("fcr_cluster").get<int>();
        node.da_prices = n.at("da_prices").get<DayProfile>();
        node.fcr_prices = n.at("fcr_prices").get<DayProfile>();
        node.id_prices = n.at("id_prices").get<std::vector<double>>();
        node.id_probs = n.at("id_probs").get<std::vector<double>>();
        st.nodes.push_back(std::move(node));
      }
      st.transition = s.at("transition").get<Matrix>();
      lat.stages.push_back(std::move(st));
    }
    lat.validate();
    return lat;
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed lattice file: ") + e.what());
  }
}

void export_lattice(const MarkovLattice& lat, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  out << export_lattice_json(lat);
}

MarkovLattice import_lattice(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return import_lattice_json(ss.str());
  } catch (const DataError& e) {
    throw DataError(path + ": " + e.what());
  }
}

}  // namespace cobid
