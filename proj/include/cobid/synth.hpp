// SPDX-License-Identifier: Apache-2.0
//
// Synthetic hourly price and fundamentals series with the qualitative
// features of the real data: autocorrelated DA residuals, block-patterned
// log-normal FCR prices and heavy-tailed ID spreads.
#pragma once

#include <array>
#include <cstdint>
#include <string>

#include "cobid/econometrics.hpp"

namespace cobid {

struct SynthSpec {
  int days = 363;
  int forecast_days = 7;
  std::int64_t start = 1640995200;  // 2022-01-01T00:00:00Z
  std::uint64_t seed = 2022;

  // DA = intercept + b_ttf*ttf + b_co2*co2 + b_rl*residual_load + AR(1) noise
  double da_intercept = -40.0;
  double da_ttf = 1.6;
  double da_co2 = 0.9;
  double da_residual_load = 0.004;  // EUR/MWh per MW
  double da_ar = 0.9;
  double da_noise = 25.0;  // innovation std

  // ln FCR = base + block_effect[b] + scarcity bumps + AR(1) noise
  double fcr_log_base = 3.0;
  std::array<double, 6> fcr_block_effect{0.0, 0.15, 0.25, -0.1, -0.2, 0.05};
  double fcr_scarcity_high = 0.3;  // residual load above its 90 % quantile
  double fcr_scarcity_low = 0.2;   // residual load below its 10 % quantile
  double fcr_ar = 0.7;
  double fcr_noise = 0.25;

  // ID = DA + spread, spread ~ scale * Student-t(3) with an extra upward jump
  double id_spread_scale = 8.0;
  double id_jump_probability = 0.03;
  double id_jump_size = 60.0;

  // Fundamentals
  double rl_mean = 40000.0;
  double rl_daily_amplitude = 8000.0;
  double rl_seasonal_amplitude = 6000.0;
  double rl_noise = 3000.0;
  double ttf_mean = 100.0;
  double ttf_noise = 2.0;
  double co2_mean = 80.0;
  double co2_noise = 0.8;

  /// Throws ConfigError.
  void validate() const;
};

struct SynthData {
  SeriesFrame prices;        // hourly, history
  SeriesFrame fundamentals;  // hourly, history
  SeriesFrame forecast;      // hourly fundamentals for the days after the history
};

SynthData generate(const SynthSpec& spec);

/// Writes prices.csv, fundamentals.csv and forecast.csv into `dir`.
void write_synth(const SynthData& data, const std::string& dir);

}  // namespace cobid
