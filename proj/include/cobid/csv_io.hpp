// SPDX-License-Identifier: Apache-2.0
//
// CSV ingestion and export of price and fundamentals series.
#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "cobid/econometrics.hpp"

namespace cobid {

/// Parses "YYYY-MM-DDTHH:MM[:SS][Z]" (a space may replace 'T') as UTC seconds.
std::int64_t parse_timestamp(std::string_view text);
/// Formats as "YYYY-MM-DDTHH:MM:SSZ".
std::string format_timestamp(std::int64_t seconds);

/// Minimal comma-separated table: mandatory header, numeric body except column 0.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Index of a named column; throws DataError naming `source` if absent.
  [[nodiscard]] size_t column(std::string_view name, std::string_view source) const;
};

CsvTable read_csv(const std::string& path);

/// prices.csv: timestamp,da_eur_mwh,id_eur_mwh,fcr_eur_mw (hourly).
SeriesFrame read_prices(const std::string& path);
/// fundamentals.csv / forecast.csv: timestamp,residual_load_mw,ttf_eur_mwh,co2_eur_t.
SeriesFrame read_fundamentals(const std::string& path);
/// Joins price and fundamentals columns on identical timestamps.
SeriesFrame merge_frames(const SeriesFrame& prices, const SeriesFrame& fundamentals);

void write_prices(const std::string& path, const SeriesFrame& frame);
void write_fundamentals(const std::string& path, const SeriesFrame& frame);

/// Shortest round-trip decimal representation.
std::string format_double(double v);

}  // namespace cobid
