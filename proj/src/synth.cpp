// SPDX-License-Identifier: Apache-2.0
#include "cobid/synth.hpp"

#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>

#include "cobid/csv_io.hpp"
#include "cobid/errors.hpp"
#include "cobid/kmeans.hpp"

namespace cobid {

void SynthSpec::validate() const {
  if (days < 4) throw ConfigError("synth.days must be >= 4");
  if (forecast_days < 0) throw ConfigError("synth.forecast_days must be >= 0");
  if (start % (4 * 3600) != 0) throw ConfigError("synth.start must be aligned to a four-hour boundary");
  for (double v : {da_noise, fcr_noise, id_spread_scale, rl_noise, ttf_noise, co2_noise})
    if (!(v >= 0.0)) throw ConfigError("synth noise scales must be >= 0");
  if (!(std::abs(da_ar) < 1.0) || !(std::abs(fcr_ar) < 1.0)) throw ConfigError("synth AR coefficients must lie in (-1, 1)");
  if (!(id_jump_probability >= 0.0 && id_jump_probability <= 1.0))
    throw ConfigError("synth.id_jump_probability must lie in [0, 1]");
}

namespace {

// Normal and Student-t draws built from raw engine output so the stream is
// identical across standard libraries.
struct Draws {
  std::mt19937_64 rng;
  explicit Draws(std::uint64_t seed) : rng(seed) {}
  double uniform() { return unit_double(rng()); }
  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }
  double student_t3() {
    const double z = normal();
    double chi = 0.0;
    for (int i = 0; i < 3; ++i) {
      const double n = normal();
      chi += n * n;
    }
    return z / std::sqrt(chi / 3.0);
  }
};

struct Fundamentals {
  std::vector<double> rl, ttf, co2;  // hourly
};

Fundamentals fundamentals_path(const SynthSpec& s, int days, int day_offset, Draws& d) {
  Fundamentals f;
  const int hours = days * 24;
  double ttf = s.ttf_mean, co2 = s.co2_mean, rl_dev = 0.0;
  for (int h = 0; h < hours; ++h) {
    const double day = day_offset + h / 24.0;
    if (h % 24 == 0) {
      ttf = s.ttf_mean + 0.97 * (ttf - s.ttf_mean) + s.ttf_noise * d.normal();
      co2 = s.co2_mean + 0.98 * (co2 - s.co2_mean) + s.co2_noise * d.normal();
    }
    rl_dev = 0.8 * rl_dev + s.rl_noise * d.normal();
    const double daily = -std::cos(2.0 * std::numbers::pi * ((h % 24) - 1.0) / 24.0);
    const double season = std::cos(2.0 * std::numbers::pi * day / 365.0);
    f.rl.push_back(s.rl_mean + s.rl_daily_amplitude * daily + s.rl_seasonal_amplitude * season + rl_dev);
    f.ttf.push_back(ttf);
    f.co2.push_back(co2);
  }
  return f;
}

}  // namespace

SynthData generate(const SynthSpec& s) {
  s.validate();
  Draws fund_draws(mix_seed(s.seed, 1));
  Draws price_draws(mix_seed(s.seed, 2));
  const Fundamentals hist = fundamentals_path(s, s.days, 0, fund_draws);
  const Fundamentals fc = fundamentals_path(s, s.forecast_days, s.days, fund_draws);
  const int hours = s.days * 24;

  SynthData out;
  auto init = [&](SeriesFrame& f, int n, std::int64_t t0) {
    f.resolution_hours = 1;
    for (int h = 0; h < n; ++h) f.timestamps.push_back(t0 + 3600LL * h);
  };
  init(out.prices, hours, s.start);
  init(out.fundamentals, hours, s.start);
  init(out.forecast, s.forecast_days * 24, s.start + 3600LL * hours);
  out.fundamentals.residual_load = hist.rl;
  out.fundamentals.ttf_gas = hist.ttf;
  out.fundamentals.co2 = hist.co2;
  out.forecast.residual_load = fc.rl;
  out.forecast.ttf_gas = fc.ttf;
  out.forecast.co2 = fc.co2;

  // Block means of residual load drive the FCR scarcity bumps.
  const int blocks = hours / 4;
  std::vector<double> rl_block(static_cast<size_t>(blocks));
  for (int b = 0; b < blocks; ++b) {
    double sum = 0.0;
    for (int h = 0; h < 4; ++h) sum += hist.rl[static_cast<size_t>(4 * b + h)];
    rl_block[static_cast<size_t>(b)] = sum / 4.0;
  }
  const double lo = quantile(rl_block, 0.10), hi = quantile(rl_block, 0.90);

  double da_noise = 0.0, fcr_noise = 0.0;
  for (int b = 0; b < blocks; ++b) {
    da_noise = s.da_ar * da_noise + s.da_noise * price_draws.normal();
    fcr_noise = s.fcr_ar * fcr_noise + s.fcr_noise * price_draws.normal();
    double spread = s.id_spread_scale * price_draws.student_t3();
    if (price_draws.uniform() < s.id_jump_probability) spread += s.id_jump_size;
    const auto bu = static_cast<size_t>(b);
    const int block = b % 6;
    double log_fcr = s.fcr_log_base + s.fcr_block_effect[static_cast<size_t>(block)] + fcr_noise;
    if (rl_block[bu] >= hi) log_fcr += s.fcr_scarcity_high;
    if (rl_block[bu] <= lo) log_fcr += s.fcr_scarcity_low;
    const double fcr = std::exp(log_fcr);
    for (int h = 0; h < 4; ++h) {
      const auto i = static_cast<size_t>(4 * b + h);
      const double da = s.da_intercept + s.da_ttf * hist.ttf[i] + s.da_co2 * hist.co2[i] +
                        s.da_residual_load * hist.rl[i] + da_noise;
      out.prices.da_price.push_back(da);
      out.prices.id_price.push_back(da + spread);
      out.prices.fcr_price.push_back(fcr);
    }
  }
  return out;
}

void write_synth(const SynthData& data, const std::string& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError("cannot create directory " + dir + ": " + ec.message());
  write_prices((fs::path(dir) / "prices.csv").string(), data.prices);
  write_fundamentals((fs::path(dir) / "fundamentals.csv").string(), data.fundamentals);
  write_fundamentals((fs::path(dir) / "forecast.csv").string(), data.forecast);
}

}  // namespace cobid
