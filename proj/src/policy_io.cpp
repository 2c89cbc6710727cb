// SPDX-License-Identifier: Apache-2.0
#include "cobid/policy_io.hpp"

#include <fstream>
#include <sstream>

#include "cobid/csv_io.hpp"
#include "cobid/errors.hpp"
#include "cobid/hash.hpp"
#include "json.hpp"

namespace cobid {

using nlohmann::json;

std::string export_policy_json(const Policy& p) {
  json body;
  body["format"] = "cobid-policy";
  body["version"] = kPolicyFormatVersion;
  body["config_hash"] = p.config_hash;
  body["seed"] = p.seed;
  body["iterations"] = p.iterations;
  body["stop_reason"] = p.stop_reason;
  body["lp_solves"] = p.lp_solves;
  body["unique_paths"] = p.unique_paths;
  json stages = json::array();
  for (const auto& stage : p.cuts) {
    json nodes = json::array();
    for (const auto& node : stage) {
      json cuts = json::array();
      for (const auto& c : node)
        cuts.push_back({{"intercept", c.intercept},
                        {"coefs", c.coefs},
                        {"iteration", c.iteration},
                        {"last_active", c.last_active}});
      nodes.push_back(std::move(cuts));
    }
    stages.push_back(std::move(nodes));
  }
  body["cuts"] = std::move(stages);
  json hist = json::array();
  for (const auto& h : p.history) hist.push_back({h.iteration, h.upper_bound, h.forward_value, h.slack_mwh});
  body["history"] = std::move(hist);
  body["checksum"] = hex64(fnv1a64(body.dump()));
  return body.dump() + "\n";
}

Policy import_policy_json(const std::string& text) {
  Policy p;
  try {
    json doc = json::parse(text);
    if (doc.value("format", "") != "cobid-policy") throw DataError("not a policy file");
    const int version = doc.at("version").get<int>();
    if (version != kPolicyFormatVersion)
      throw DataError("unsupported policy version " + std::to_string(version));
    const std::string stored = doc.at("checksum").get<std::string>();
    json body = doc;
    body.erase("checksum");
    if (hex64(fnv1a64(body.dump())) != stored) throw DataError("policy checksum mismatch");
    p.config_hash = doc.at("config_hash").get<std::string>();
    p.seed = doc.at("seed").get<std::uint64_t>();
    p.iterations = doc.at("iterations").get<int>();
    p.stop_reason = doc.at("stop_reason").get<std::string>();
    p.lp_solves = doc.at("lp_solves").get<long long>();
    p.unique_paths = doc.at("unique_paths").get<long long>();
    for (const auto& stage : doc.at("cuts")) {
      auto& s = p.cuts.emplace_back();
      for (const auto& node : stage) {
        auto& n = s.emplace_back();
        for (const auto& c : node) {
          Cut cut;
          cut.intercept = c.at("intercept").get<double>();
          cut.coefs = c.at("coefs").get<std::vector<double>>();
          cut.iteration = c.at("iteration").get<int>();
          cut.last_active = c.at("last_active").get<int>();
          n.push_back(std::move(cut));
        }
      }
    }
    for (const auto& h : doc.at("history"))
      p.history.push_back({h.at(0).get<int>(), h.at(1).get<double>(), h.at(2).get<double>(), h.at(3).get<double>()});
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed policy JSON: ") + e.what());
  }
  return p;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  out << content;
  if (!out) throw DataError("write failed: " + path);
}

void export_policy(const Policy& policy, const std::string& path) { write_text_file(path, export_policy_json(policy)); }

Policy import_policy(const std::string& path) {
  try {
    return import_policy_json(read_text_file(path));
  } catch (const DataError& e) {
    throw DataError(path + ": " + e.what());
  }
}

std::string bound_history_csv(const Policy& p) {
  std::ostringstream os;
  os << "iteration,upper_bound,forward_value,slack_mwh\n";
  for (const auto& h : p.history)
    os << h.iteration << ',' << format_double(h.upper_bound) << ',' << format_double(h.forward_value) << ','
       << format_double(h.slack_mwh) << "\n";
  return os.str();
}

}  // namespace cobid
