// SPDX-License-Identifier: Apache-2.0
//
// Fundamentals-based price decomposition: OLS fits for DA and log-FCR prices,
// residual-load quantile flags, and DA-conditional ID spread distributions.
#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace cobid {

/// Column-oriented time series. Empty columns are absent.
struct SeriesFrame {
  std::vector<std::int64_t> timestamps;  // UTC seconds since epoch
  int resolution_hours = 1;              // 1 or 4
  std::vector<double> da_price;          // EUR/MWh
  std::vector<double> id_price;          // EUR/MWh
  std::vector<double> fcr_price;         // EUR/MW per block
  std::vector<double> residual_load;     // MW
  std::vector<double> ttf_gas;           // EUR/MWh
  std::vector<double> co2;               // EUR/t

  [[nodiscard]] size_t size() const { return timestamps.size(); }
  /// Zero-based day index relative to the first timestamp's day.
  [[nodiscard]] int day_of(size_t row) const;
  /// Block 1..6 from the hour of day.
  [[nodiscard]] int block_of(size_t row) const;
  [[nodiscard]] int days() const;

  /// Throws DataError on ragged columns, non-increasing or gapped timestamps.
  void validate() const;
};

/// Averages each group of four hourly rows into one four-hour block.
SeriesFrame downsample_to_blocks(const SeriesFrame& hourly);

struct OlsFit {
  std::vector<std::string> names;    // regressor names (without intercept)
  std::vector<double> coefficients;  // per regressor
  double intercept = 0.0;
  std::vector<double> standard_errors;  // per regressor
  double intercept_se = 0.0;
  std::vector<double> fitted;
  std::vector<double> residuals;
  double r2 = 0.0;
  double adjusted_r2 = 0.0;
  double durbin_watson = 0.0;

  [[nodiscard]] double predict(const std::vector<double>& regressors) const;
};

/// Least squares with intercept. `design` holds regressors only (rows = obs).
/// Throws DataError if rows < cols + 1 or the design (with intercept) is rank deficient.
OlsFit fit_ols(const Eigen::MatrixXd& design, const Eigen::VectorXd& response,
               std::vector<std::string> names = {});

double durbin_watson(const std::vector<double>& residuals);

struct Decomposition {
  std::vector<double> deterministic;
  std::vector<double> stochastic;
  OlsFit fit;
};

/// DA = f(ttf, co2, residual load) + residual. Requires a four-hour frame.
Decomposition decompose_da(const SeriesFrame& frame);
/// Regressor row for the DA model from fundamentals.
std::vector<double> da_regressors(double ttf, double co2, double residual_load);

/// Empirical quantile with linear interpolation between order statistics.
double quantile(std::vector<double> values, double q);

struct QuantileFlags {
  std::vector<int> low;
  std::vector<int> high;
  double low_threshold = 0.0;
  double high_threshold = 0.0;
};

QuantileFlags residual_load_quantile_flags(const std::vector<double>& residual_load, double q = 0.10);
/// Applies fixed thresholds (e.g. historical ones) to new residual-load values.
QuantileFlags apply_quantile_thresholds(const std::vector<double>& residual_load, double low_threshold,
                                        double high_threshold);

/// ln(FCR) = block dummies (2..6) + low_flag + high_flag + intercept.
/// `deterministic` and `stochastic` are in log space.
Decomposition fit_fcr(const SeriesFrame& frame, const QuantileFlags& flags);
std::vector<double> fcr_regressors(int block, int low_flag, int high_flag);

struct SpreadLevels {
  std::array<double, 3> levels{};  // P15, mean, P85
  std::array<double, 3> probabilities{0.15, 0.70, 0.15};
  size_t samples = 0;
  bool pooled_fallback = false;
};

struct SpreadDistribution {
  std::vector<SpreadLevels> clusters;               // per DA cluster
  std::vector<std::vector<double>> cluster_samples;  // raw spreads per cluster
  std::vector<std::string> warnings;
};

/// Spread of ID prices over the cluster-reconstructed DA price.
/// `da_labels` holds one DA cluster label per day of the four-hour frame;
/// `reconstructed_da` one reconstructed DA price per row.
SpreadDistribution id_spreads(const SeriesFrame& frame, const std::vector<int>& da_labels,
                              const std::vector<double>& reconstructed_da, int clusters,
                              std::array<double, 3> probabilities = {0.15, 0.70, 0.15});

struct JarqueBera {
  double statistic = 0.0;
  double p_value = 1.0;
  double skewness = 0.0;
  double excess_kurtosis = 0.0;
};

JarqueBera jarque_bera(const std::vector<double>& sample);

}  // namespace cobid
