// SPDX-License-Identifier: Apache-2.0
#include "cobid/config.hpp"

#include <cctype>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "cobid/csv_io.hpp"
#include "cobid/errors.hpp"
#include "cobid/hash.hpp"
#include "cobid/policy_io.hpp"

namespace cobid {

namespace {

std::string trim(std::string_view s) {
  size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return std::string(s.substr(a, b - a));
}

// Drops a trailing comment that is not inside a string.
std::string strip_comment(const std::string& line) {
  bool in_str = false;
  for (size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"') in_str = !in_str;
    if (line[i] == '#' && !in_str) return line.substr(0, i);
  }
  return line;
}

std::string parse_string(const std::string& v, const std::string& where) {
  if (v.size() < 2 || v.front() != '"' || v.back() != '"') throw ConfigError(where + ": expected a quoted string");
  std::string out;
  for (size_t i = 1; i + 1 < v.size(); ++i) {
    if (v[i] == '\\' && i + 2 < v.size()) {
      char c = v[++i];
      out += c == 'n' ? '\n' : c == 't' ? '\t' : c;
    } else if (v[i] == '"') {
      throw ConfigError(where + ": stray quote in string");
    } else {
      out += v[i];
    }
  }
  return out;
}

ConfigValue parse_value(const std::string& v, const std::string& where) {
  if (v.empty()) throw ConfigError(where + ": missing value");
  if (v == "true") return true;
  if (v == "false") return false;
  if (v.front() == '"') return parse_string(v, where);
  if (v.front() == '[') {
    if (v.back() != ']') throw ConfigError(where + ": unterminated array");
    std::vector<std::string> items;
    std::string inner = trim(std::string_view(v).substr(1, v.size() - 2));
    if (inner.empty()) return items;
    std::stringstream ss(inner);
    std::string item;
    while (std::getline(ss, item, ',')) {
      item = trim(item);
      if (item.empty()) continue;  // trailing comma
      items.push_back(item.front() == '"' ? parse_string(item, where) : item);
    }
    return items;
  }
  std::string num;
  for (char c : v)
    if (c != '_') num += c;
  double d = 0.0;
  auto [p, ec] = std::from_chars(num.data(), num.data() + num.size(), d);
  if (ec != std::errc() || p != num.data() + num.size()) throw ConfigError(where + ": cannot parse value '" + v + "'");
  return d;
}

}  // namespace

ConfigTable parse_config_text(const std::string& text, const std::string& source) {
  ConfigTable table;
  std::string section;
  std::stringstream ss(text);
  std::string raw;
  int lineno = 0;
  while (std::getline(ss, raw)) {
    ++lineno;
    const std::string where = source + ":" + std::to_string(lineno);
    std::string line = trim(strip_comment(raw));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where + ": malformed section header");
      section = trim(std::string_view(line).substr(1, line.size() - 2));
      if (section.empty()) throw ConfigError(where + ": empty section name");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where + ": expected key = value");
    std::string key = trim(std::string_view(line).substr(0, eq));
    if (key.empty()) throw ConfigError(where + ": empty key");
    std::string full = section.empty() ? key : section + "." + key;
    if (table.count(full)) throw ConfigError(where + ": duplicate key " + full);
    table[full] = parse_value(trim(std::string_view(line).substr(eq + 1)), where + " (" + full + ")");
  }
  return table;
}

namespace {

double as_number(const ConfigValue& v, const std::string& key) {
  if (auto* d = std::get_if<double>(&v)) return *d;
  throw ConfigError(key + ": expected a number");
}

int as_int(const ConfigValue& v, const std::string& key) {
  double d = as_number(v, key);
  if (d != std::floor(d) || std::abs(d) > 2e9) throw ConfigError(key + ": expected an integer");
  return static_cast<int>(d);
}

std::uint64_t as_seed(const ConfigValue& v, const std::string& key) {
  double d = as_number(v, key);
  if (d < 0 || d != std::floor(d) || d > 9.0e15) throw ConfigError(key + ": expected a non-negative integer seed");
  return static_cast<std::uint64_t>(d);
}

bool as_bool(const ConfigValue& v, const std::string& key) {
  if (auto* b = std::get_if<bool>(&v)) return *b;
  throw ConfigError(key + ": expected true or false");
}

std::string as_string(const ConfigValue& v, const std::string& key) {
  if (auto* s = std::get_if<std::string>(&v)) return *s;
  throw ConfigError(key + ": expected a string");
}

MarketSet as_markets(const ConfigValue& v, const std::string& key) {
  if (auto* s = std::get_if<std::string>(&v)) return MarketSet::parse(*s);
  if (auto* a = std::get_if<std::vector<std::string>>(&v)) {
    std::string joined;
    for (const auto& m : *a) joined += (joined.empty() ? "" : ",") + m;
    return MarketSet::parse(joined);
  }
  throw ConfigError(key + ": expected a market list");
}

}  // namespace

RunConfig apply_config(const ConfigTable& table, RunConfig c) {
  for (const auto& [key, v] : table) {
    // clang-format off
    if (key == "paths.prices") c.prices = as_string(v, key);
    else if (key == "paths.fundamentals") c.fundamentals = as_string(v, key);
    else if (key == "paths.forecast") c.forecast = as_string(v, key);
    else if (key == "paths.output_dir") c.output_dir = as_string(v, key);
    else if (key == "horizon.days") c.days = as_int(v, key);
    else if (key == "battery.power_mw") c.battery.rated_power_mw = as_number(v, key);
    else if (key == "battery.capacity_mwh") c.battery.capacity_mwh = as_number(v, key);
    else if (key == "battery.soc_start_mwh") c.battery.soc_start_mwh = as_number(v, key);
    else if (key == "battery.penalty_eur_mwh" || key == "penalty_eur_mwh") c.battery.penalty_eur_per_mwh = as_number(v, key);
    else if (key == "clustering.k_da") c.k_da = as_int(v, key);
    else if (key == "clustering.k_fcr") c.k_fcr = as_int(v, key);
    else if (key == "clustering.window_days") c.window_days = as_int(v, key);
    else if (key == "clustering.seed") c.cluster_seed = as_seed(v, key);
    else if (key == "clustering.restarts") c.restarts = as_int(v, key);
    else if (key == "clustering.rl_quantile") c.rl_quantile = as_number(v, key);
    else if (key == "clustering.elbow_k_max") c.elbow_k_max = as_int(v, key);
    else if (key == "clustering.id_probabilities") {
      auto* a = std::get_if<std::vector<std::string>>(&v);
      if (!a || a->size() != 3) throw ConfigError(key + ": expected three probabilities");
      for (size_t i = 0; i < 3; ++i) c.id_probabilities[i] = as_number(parse_value((*a)[i], key), key);
    }
    else if (key == "training.max_iterations") c.training.max_iterations = as_int(v, key);
    else if (key == "training.initial_iterations") c.training.initial_iterations = as_int(v, key);
    else if (key == "training.stall_window") c.training.stall_window = as_int(v, key);
    else if (key == "training.stall_improvement") c.training.stall_improvement = as_number(v, key);
    else if (key == "training.seed") c.training.seed = as_seed(v, key);
    else if (key == "training.cut_cap") c.training.cut_cap = as_int(v, key);
    else if (key == "training.prune_after") c.training.prune_after = as_int(v, key);
    else if (key == "markets.enabled") c.model.markets = as_markets(v, key);
    else if (key == "markets.fcr_price_scale") c.model.fcr_price_scale = as_number(v, key);
    else if (key == "markets.id_constraints") c.model.id_constraints = as_bool(v, key);
    else if (key == "markets.terminal_soc") c.model.terminal_soc = as_bool(v, key);
    else if (key == "simulate.runs") c.simulate.runs = as_int(v, key);
    else if (key == "simulate.seed") c.simulate.seed = as_seed(v, key);
    else if (key == "simulate.first_day") c.simulate.window_first_day = as_int(v, key);
    else if (key == "simulate.last_day") c.simulate.window_last_day = as_int(v, key);
    else if (key == "synth.days") c.synth.days = as_int(v, key);
    else if (key == "synth.forecast_days") c.synth.forecast_days = as_int(v, key);
    else if (key == "synth.seed") c.synth.seed = as_seed(v, key);
    else if (key == "synth.da_noise") c.synth.da_noise = as_number(v, key);
    else if (key == "synth.da_ar") c.synth.da_ar = as_number(v, key);
    else if (key == "synth.fcr_noise") c.synth.fcr_noise = as_number(v, key);
    else if (key == "synth.id_spread_scale") c.synth.id_spread_scale = as_number(v, key);
    else if (key == "threads") c.threads = as_int(v, key);
    else throw ConfigError("unknown config key '" + key + "'");
    // clang-format on
  }
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return apply_config(parse_config_text(ss.str(), path));
}

void RunConfig::validate() const {
  if (days < 2) throw ConfigError("horizon.days must be >= 2");
  battery.validate();
  if (k_da < 1) throw ConfigError("clustering.k_da must be >= 1");
  if (k_fcr < 1) throw ConfigError("clustering.k_fcr must be >= 1");
  if (window_days < 1) throw ConfigError("clustering.window_days must be >= 1");
  if (restarts < 1) throw ConfigError("clustering.restarts must be >= 1");
  if (!(rl_quantile > 0 && rl_quantile < 0.5)) throw ConfigError("clustering.rl_quantile must lie in (0, 0.5)");
  double psum = 0.0;
  for (double p : id_probabilities) {
    if (!(p >= 0)) throw ConfigError("clustering.id_probabilities must be >= 0");
    psum += p;
  }
  if (std::abs(psum - 1.0) > 1e-9) throw ConfigError("clustering.id_probabilities must sum to 1");
  if (elbow_k_max < 1) throw ConfigError("clustering.elbow_k_max must be >= 1");
  training.validate();
  if (model.markets.empty()) throw ConfigError("markets.enabled must name at least one market");
  if (!(model.fcr_price_scale >= 0)) throw ConfigError("markets.fcr_price_scale must be >= 0");
  if (simulate.runs < 0) throw ConfigError("simulate.runs must be >= 0");
  if (simulate.window_first_day < 1 || simulate.window_first_day > days)
    throw ConfigError("simulate.first_day must lie in 1..horizon.days");
  if (simulate.window_last_day != 0 &&
      (simulate.window_last_day < simulate.window_first_day || simulate.window_last_day > days))
    throw ConfigError("simulate.last_day must be 0 or lie in first_day..horizon.days");
  synth.validate();
  if (threads < 0) throw ConfigError("threads must be >= 0");
}

std::string canonical_config(const RunConfig& c) {
  std::ostringstream os;
  auto kv = [&](const char* k, const std::string& v) { os << k << " = " << v << "\n"; };
  auto num = [](double d) { return format_double(d); };
  auto str = [](const std::string& s) { return "\"" + s + "\""; };
  auto b = [](bool v) { return std::string(v ? "true" : "false"); };
  os << "[paths]\n";
  kv("prices", str(c.prices));
  kv("fundamentals", str(c.fundamentals));
  kv("forecast", str(c.forecast));
  kv("output_dir", str(c.output_dir));
  os << "\n[horizon]\n";
  kv("days", std::to_string(c.days));
  os << "\n[battery]\n";
  kv("power_mw", num(c.battery.rated_power_mw));
  kv("capacity_mwh", num(c.battery.capacity_mwh));
  kv("soc_start_mwh", num(c.battery.soc_start_mwh));
  kv("penalty_eur_mwh", num(c.battery.penalty_eur_per_mwh));
  os << "\n[clustering]\n";
  kv("k_da", std::to_string(c.k_da));
  kv("k_fcr", std::to_string(c.k_fcr));
  kv("window_days", std::to_string(c.window_days));
  kv("seed", std::to_string(c.cluster_seed));
  kv("restarts", std::to_string(c.restarts));
  kv("rl_quantile", num(c.rl_quantile));
  kv("id_probabilities", "[" + num(c.id_probabilities[0]) + ", " + num(c.id_probabilities[1]) + ", " +
                             num(c.id_probabilities[2]) + "]");
  kv("elbow_k_max", std::to_string(c.elbow_k_max));
  os << "\n[training]\n";
  kv("max_iterations", std::to_string(c.training.max_iterations));
  kv("initial_iterations", std::to_string(c.training.initial_iterations));
  kv("stall_window", std::to_string(c.training.stall_window));
  kv("stall_improvement", num(c.training.stall_improvement));
  kv("seed", std::to_string(c.training.seed));
  kv("cut_cap", std::to_string(c.training.cut_cap));
  kv("prune_after", std::to_string(c.training.prune_after));
  os << "\n[markets]\n";
  std::string m;
  for (Market mk : kAllMarkets)
    if (c.model.markets.contains(mk)) m += std::string(m.empty() ? "" : ", ") + "\"" + std::string(to_string(mk)) + "\"";
  kv("enabled", "[" + m + "]");
  kv("fcr_price_scale", num(c.model.fcr_price_scale));
  kv("id_constraints", b(c.model.id_constraints));
  kv("terminal_soc", b(c.model.terminal_soc));
  os << "\n[simulate]\n";
  kv("runs", std::to_string(c.simulate.runs));
  kv("seed", std::to_string(c.simulate.seed));
  kv("first_day", std::to_string(c.simulate.window_first_day));
  kv("last_day", std::to_string(c.simulate.window_last_day));
  os << "\n[synth]\n";
  kv("days", std::to_string(c.synth.days));
  kv("forecast_days", std::to_string(c.synth.forecast_days));
  kv("seed", std::to_string(c.synth.seed));
  kv("da_noise", num(c.synth.da_noise));
  kv("da_ar", num(c.synth.da_ar));
  kv("fcr_noise", num(c.synth.fcr_noise));
  kv("id_spread_scale", num(c.synth.id_spread_scale));
  return os.str();
}

namespace {

std::string file_digest(const std::string& path) {
  std::error_code ec;
  if (!std::filesystem::exists(path, ec)) return "missing";
  return hex64(fnv1a64(read_text_file(path)));
}

std::string link(const std::string& prev, const std::string& text) { return hex64(fnv1a64(prev + "\n" + text)); }

}  // namespace

ConfigHashes config_hashes(const RunConfig& c) {
  ConfigHashes h;
  h.decompose = link("cobid-v1", "prices " + file_digest(c.prices) + "\nfundamentals " + file_digest(c.fundamentals) +
                                     "\nrl_quantile " + format_double(c.rl_quantile));
  std::ostringstream cl;
  cl << c.k_da << ' ' << c.k_fcr << ' ' << c.window_days << ' ' << c.cluster_seed << ' ' << c.restarts << ' '
     << format_double(c.id_probabilities[0]) << ' ' << format_double(c.id_probabilities[1]) << ' '
     << format_double(c.id_probabilities[2]);
  h.cluster = link(h.decompose, cl.str());
  h.chain = link(h.cluster, "forecast " + file_digest(c.forecast) + "\ndays " + std::to_string(c.days));
  std::ostringstream tr;
  tr << format_double(c.battery.rated_power_mw) << ' ' << format_double(c.battery.capacity_mwh) << ' '
     << format_double(c.battery.soc_start_mwh) << ' ' << format_double(c.battery.penalty_eur_per_mwh) << ' '
     << c.model.markets.key() << ' ' << format_double(c.model.fcr_price_scale) << ' ' << c.model.id_constraints << ' '
     << c.model.terminal_soc << ' ' << c.training.max_iterations << ' ' << c.training.initial_iterations << ' '
     << c.training.stall_window << ' ' << format_double(c.training.stall_improvement) << ' ' << c.training.seed << ' '
     << c.training.cut_cap << ' ' << c.training.prune_after;
  h.train = link(h.chain, tr.str());
  std::ostringstream si;
  si << c.simulate.runs << ' ' << c.simulate.seed << ' ' << c.simulate.window_first_day << ' '
     << c.simulate.window_last_day;
  h.simulate = link(h.train, si.str());
  return h;
}

}  // namespace cobid
