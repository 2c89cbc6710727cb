// SPDX-License-Identifier: Apache-2.0
#include "cobid/csv_io.hpp"

#include <charconv>
#include <cstdio>
#include <cmath>
#include <fstream>
#include <sstream>

#include "cobid/errors.hpp"

namespace cobid {

namespace {

// Howard Hinnant's civil-calendar conversions.
std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const auto yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

void civil_from_days(std::int64_t z, std::int64_t& y, unsigned& m, unsigned& d) {
  z += 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const auto doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  y = static_cast<std::int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  d = doy - (153 * mp + 2) / 5 + 1;
  m = mp < 10 ? mp + 3 : mp - 9;
  y += m <= 2;
}

int digits(std::string_view s, size_t pos, size_t n, std::string_view whole) {
  if (pos + n > s.size()) throw DataError("malformed timestamp '" + std::string(whole) + "'");
  int v = 0;
  for (size_t i = pos; i < pos + n; ++i) {
    if (s[i] < '0' || s[i] > '9') throw DataError("malformed timestamp '" + std::string(whole) + "'");
    v = v * 10 + (s[i] - '0');
  }
  return v;
}

std::string trim(std::string_view s) {
  size_t a = 0, b = s.size();
  while (a < b && (s[a] == ' ' || s[a] == '\t' || s[a] == '\r' || s[a] == '"')) ++a;
  while (b > a && (s[b - 1] == ' ' || s[b - 1] == '\t' || s[b - 1] == '\r' || s[b - 1] == '"')) --b;
  return std::string(s.substr(a, b - a));
}

double parse_number(const std::string& s, const std::string& path, size_t line, std::string_view col) {
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size() || !std::isfinite(v))
    throw DataError(path + ":" + std::to_string(line) + ": column " + std::string(col) +
                    ": not a number '" + s + "'");
  return v;
}

}  // namespace

std::int64_t parse_timestamp(std::string_view text) {
  std::string s = trim(text);
  if (s.size() < 16) throw DataError("malformed timestamp '" + s + "'");
  if (s[4] != '-' || s[7] != '-' || (s[10] != 'T' && s[10] != ' ') || s[13] != ':')
    throw DataError("malformed timestamp '" + s + "'");
  int y = digits(s, 0, 4, s), mo = digits(s, 5, 2, s), d = digits(s, 8, 2, s);
  int h = digits(s, 11, 2, s), mi = digits(s, 14, 2, s), sec = 0;
  size_t pos = 16;
  if (pos < s.size() && s[pos] == ':') {
    sec = digits(s, pos + 1, 2, s);
    pos += 3;
  }
  if (pos < s.size() && s[pos] == 'Z') ++pos;
  else if (pos + 6 == s.size() && (s[pos] == '+' || s[pos] == '-')) pos += 6;  // "+00:00" accepted as UTC
  if (pos != s.size()) throw DataError("malformed timestamp '" + s + "'");
  if (mo < 1 || mo > 12 || d < 1 || d > 31 || h > 23 || mi > 59 || sec > 59)
    throw DataError("timestamp out of range '" + s + "'");
  return days_from_civil(y, static_cast<unsigned>(mo), static_cast<unsigned>(d)) * 86400 + h * 3600 +
         mi * 60 + sec;
}

std::string format_timestamp(std::int64_t t) {
  std::int64_t days = t / 86400, rem = t % 86400;
  if (rem < 0) {
    rem += 86400;
    --days;
  }
  std::int64_t y;
  unsigned m, d;
  civil_from_days(days, y, m, d);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%04lld-%02u-%02uT%02lld:%02lld:%02lldZ", static_cast<long long>(y), m, d,
                static_cast<long long>(rem / 3600), static_cast<long long>(rem % 3600 / 60),
                static_cast<long long>(rem % 60));
  return buf;
}

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

size_t CsvTable::column(std::string_view name, std::string_view source) const {
  for (size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return i;
  throw DataError(std::string(source) + ": missing column '" + std::string(name) + "'");
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  CsvTable t;
  std::string line;
  size_t lineno = 0;
  auto split = [](const std::string& l) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ss(l);
    while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
    if (!l.empty() && l.back() == ',') out.emplace_back();
    return out;
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto cells = split(line);
    if (t.header.empty()) {
      t.header = cells;
      continue;
    }
    if (cells.size() != t.header.size())
      throw DataError(path + ":" + std::to_string(lineno) + ": expected " + std::to_string(t.header.size()) +
                      " fields, got " + std::to_string(cells.size()));
    t.rows.push_back(std::move(cells));
  }
  if (t.header.empty()) throw DataError(path + ": missing header row");
  return t;
}

namespace {

SeriesFrame read_columns(const std::string& path, const std::vector<std::string>& names,
                         const std::vector<std::vector<double> SeriesFrame::*>& targets) {
  CsvTable t = read_csv(path);
  SeriesFrame f;
  f.resolution_hours = 1;
  size_t ts = t.column("timestamp", path);
  std::vector<size_t> idx;
  for (const auto& n : names) idx.push_back(t.column(n, path));
  for (size_t r = 0; r < t.rows.size(); ++r) {
    f.timestamps.push_back(parse_timestamp(t.rows[r][ts]));
    for (size_t c = 0; c < names.size(); ++c)
      (f.*targets[c]).push_back(parse_number(t.rows[r][idx[c]], path, r + 2, names[c]));
  }
  if (f.size() >= 2) {
    std::int64_t step = f.timestamps[1] - f.timestamps[0];
    if (step == 4 * 3600) f.resolution_hours = 4;
  }
  try {
    f.validate();
  } catch (const DataError& e) {
    throw DataError(path + ": " + e.what());
  }
  return f;
}

}  // namespace

SeriesFrame read_prices(const std::string& path) {
  return read_columns(path, {"da_eur_mwh", "id_eur_mwh", "fcr_eur_mw"},
                      {&SeriesFrame::da_price, &SeriesFrame::id_price, &SeriesFrame::fcr_price});
}

SeriesFrame read_fundamentals(const std::string& path) {
  return read_columns(path, {"residual_load_mw", "ttf_eur_mwh", "co2_eur_t"},
                      {&SeriesFrame::residual_load, &SeriesFrame::ttf_gas, &SeriesFrame::co2});
}

SeriesFrame merge_frames(const SeriesFrame& prices, const SeriesFrame& fundamentals) {
  if (prices.timestamps != fundamentals.timestamps)
    throw DataError("price and fundamentals timestamps differ (" + std::to_string(prices.size()) + " vs " +
                    std::to_string(fundamentals.size()) + " rows)");
  SeriesFrame f = prices;
  f.residual_load = fundamentals.residual_load;
  f.ttf_gas = fundamentals.ttf_gas;
  f.co2 = fundamentals.co2;
  return f;
}

namespace {

void write_columns(const std::string& path, const SeriesFrame& f, const std::vector<std::string>& names,
                   const std::vector<const std::vector<double>*>& cols) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  out << "timestamp";
  for (const auto& n : names) out << ',' << n;
  out << '\n';
  for (size_t r = 0; r < f.size(); ++r) {
    out << format_timestamp(f.timestamps[r]);
    for (const auto* c : cols) out << ',' << format_double(c->at(r));
    out << '\n';
  }
  if (!out) throw DataError("write failed: " + path);
}

}  // namespace

void write_prices(const std::string& path, const SeriesFrame& f) {
  write_columns(path, f, {"da_eur_mwh", "id_eur_mwh", "fcr_eur_mw"}, {&f.da_price, &f.id_price, &f.fcr_price});
}

void write_fundamentals(const std::string& path, const SeriesFrame& f) {
  write_columns(path, f, {"residual_load_mw", "ttf_eur_mwh", "co2_eur_t"},
                {&f.residual_load, &f.ttf_gas, &f.co2});
}

}  // namespace cobid
