// SPDX-License-Identifier: Apache-2.0
#include "cobid/econometrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cobid/csv_io.hpp"
#include "cobid/errors.hpp"

namespace cobid {

namespace {

constexpr std::int64_t kDay = 86400;

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

}  // namespace

int SeriesFrame::day_of(size_t row) const {
  return static_cast<int>(floor_div(timestamps.at(row), kDay) - floor_div(timestamps.front(), kDay));
}

int SeriesFrame::block_of(size_t row) const {
  std::int64_t secs = timestamps.at(row) - floor_div(timestamps.at(row), kDay) * kDay;
  return static_cast<int>(secs / 3600 / 4) + 1;
}

int SeriesFrame::days() const {
  if (timestamps.empty()) return 0;
  return day_of(size() - 1) + 1;
}

void SeriesFrame::validate() const {
  const size_t n = size();
  auto check = [&](const std::vector<double>& col, const char* name) {
    if (!col.empty() && col.size() != n)
      throw DataError(std::string("column ") + name + " has " + std::to_string(col.size()) +
                      " rows, expected " + std::to_string(n));
  };
  check(da_price, "da_price");
  check(id_price, "id_price");
  check(fcr_price, "fcr_price");
  check(residual_load, "residual_load");
  check(ttf_gas, "ttf_gas");
  check(co2, "co2");
  if (resolution_hours != 1 && resolution_hours != 4)
    throw DataError("resolution must be 1 or 4 hours");
  const std::int64_t step = 3600LL * resolution_hours;
  for (size_t i = 1; i < n; ++i) {
    if (timestamps[i] <= timestamps[i - 1])
      throw DataError("timestamps not strictly increasing at " + format_timestamp(timestamps[i]));
    if (timestamps[i] - timestamps[i - 1] != step)
      throw DataError("gap in time series before " + format_timestamp(timestamps[i]));
  }
}

SeriesFrame downsample_to_blocks(const SeriesFrame& hourly) {
  hourly.validate();
  if (hourly.resolution_hours != 1) throw DataError("downsample_to_blocks expects hourly data");
  if (hourly.size() % 4 != 0)
    throw DataError("hourly series length " + std::to_string(hourly.size()) + " is not divisible by 4");
  if (!hourly.timestamps.empty() && (hourly.timestamps.front() % (4 * 3600)) != 0)
    throw DataError("hourly series must start at a block boundary (00, 04, 08, ... h)");
  SeriesFrame out;
  out.resolution_hours = 4;
  const size_t blocks = hourly.size() / 4;
  for (size_t b = 0; b < blocks; ++b) out.timestamps.push_back(hourly.timestamps[4 * b]);
  auto mean4 = [&](const std::vector<double>& col) {
    std::vector<double> res;
    if (col.empty()) return res;
    res.reserve(blocks);
    for (size_t b = 0; b < blocks; ++b)
      res.push_back((col[4 * b] + col[4 * b + 1] + col[4 * b + 2] + col[4 * b + 3]) / 4.0);
    return res;
  };
  out.da_price = mean4(hourly.da_price);
  out.id_price = mean4(hourly.id_price);
  out.fcr_price = mean4(hourly.fcr_price);  // constant within a block
  out.residual_load = mean4(hourly.residual_load);
  out.ttf_gas = mean4(hourly.ttf_gas);
  out.co2 = mean4(hourly.co2);
  return out;
}

double OlsFit::predict(const std::vector<double>& regressors) const {
  double v = intercept;
  for (size_t j = 0; j < coefficients.size(); ++j) v += coefficients[j] * regressors.at(j);
  return v;
}

double durbin_watson(const std::vector<double>& e) {
  double num = 0.0, den = 0.0;
  for (size_t i = 0; i < e.size(); ++i) {
    den += e[i] * e[i];
    if (i > 0) num += (e[i] - e[i - 1]) * (e[i] - e[i - 1]);
  }
  if (den == 0.0) return 2.0;
  return num / den;
}

OlsFit fit_ols(const Eigen::MatrixXd& design, const Eigen::VectorXd& response,
               std::vector<std::string> names) {
  const Eigen::Index n = design.rows();
  const Eigen::Index k = design.cols();
  if (response.size() != n) throw DataError("OLS response length does not match design rows");
  if (n < k + 1)
    throw DataError("OLS needs at least " + std::to_string(k + 1) + " observations, got " +
                    std::to_string(n));
  if (names.empty())
    for (Eigen::Index j = 0; j < k; ++j) names.push_back("x" + std::to_string(j + 1));

  Eigen::MatrixXd X(n, k + 1);
  X.col(0).setOnes();
  X.rightCols(k) = design;

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
  qr.setThreshold(1e-10);
  if (qr.rank() < k + 1) {
    std::string cols;
    const auto& perm = qr.colsPermutation().indices();
    for (Eigen::Index p = qr.rank(); p < k + 1; ++p) {
      Eigen::Index c = perm(p);
      if (!cols.empty()) cols += ", ";
      cols += c == 0 ? std::string("intercept") : names[static_cast<size_t>(c - 1)];
    }
    throw DataError("OLS design is rank deficient (rank " + std::to_string(qr.rank()) + " of " +
                    std::to_string(k + 1) + "); collinear columns: " + cols);
  }
  Eigen::VectorXd beta = qr.solve(response);
  Eigen::VectorXd fitted = X * beta;
  Eigen::VectorXd resid = response - fitted;

  OlsFit fit;
  fit.names = std::move(names);
  fit.intercept = beta(0);
  for (Eigen::Index j = 0; j < k; ++j) fit.coefficients.push_back(beta(j + 1));
  fit.fitted.assign(fitted.data(), fitted.data() + n);
  fit.residuals.resize(static_cast<size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) fit.residuals[static_cast<size_t>(i)] = response(i) - fitted(i);

  const double rss = resid.squaredNorm();
  const double mean = response.mean();
  const double tss = (response.array() - mean).matrix().squaredNorm();
  if (tss > 0) fit.r2 = 1.0 - rss / tss;
  else fit.r2 = rss <= 1e-20 ? 1.0 : 0.0;
  const double dof = static_cast<double>(n - k - 1);
  fit.adjusted_r2 = dof > 0 ? 1.0 - (1.0 - fit.r2) * static_cast<double>(n - 1) / dof : fit.r2;
  fit.durbin_watson = durbin_watson(fit.residuals);

  const double sigma2 = dof > 0 ? rss / dof : 0.0;
  Eigen::MatrixXd xtx_inv =
      (X.transpose() * X).ldlt().solve(Eigen::MatrixXd::Identity(k + 1, k + 1));
  fit.intercept_se = std::sqrt(std::max(0.0, sigma2 * xtx_inv(0, 0)));
  for (Eigen::Index j = 0; j < k; ++j)
    fit.standard_errors.push_back(std::sqrt(std::max(0.0, sigma2 * xtx_inv(j + 1, j + 1))));
  return fit;
}

std::vector<double> da_regressors(double ttf, double co2, double residual_load) {
  return {ttf, co2, residual_load};
}

Decomposition decompose_da(const SeriesFrame& frame) {
  frame.validate();
  if (frame.resolution_hours != 4) throw DataError("decompose_da expects four-hour blocks");
  if (frame.da_price.empty()) throw DataError("missing column da_price");
  if (frame.ttf_gas.empty()) throw DataError("missing regressor column ttf_gas");
  if (frame.co2.empty()) throw DataError("missing regressor column co2");
  if (frame.residual_load.empty()) throw DataError("missing regressor column residual_load");
  const auto n = static_cast<Eigen::Index>(frame.size());
  Eigen::MatrixXd X(n, 3);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    auto r = static_cast<size_t>(i);
    X(i, 0) = frame.ttf_gas[r];
    X(i, 1) = frame.co2[r];
    X(i, 2) = frame.residual_load[r];
    y(i) = frame.da_price[r];
  }
  Decomposition d;
  d.fit = fit_ols(X, y, {"ttf_gas", "co2", "residual_load"});
  d.deterministic = d.fit.fitted;
  d.stochastic.resize(frame.size());
  for (size_t i = 0; i < frame.size(); ++i) d.stochastic[i] = frame.da_price[i] - d.deterministic[i];
  return d;
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw DataError("quantile of an empty sample");
  std::sort(values.begin(), values.end());
  const double h = static_cast<double>(values.size() - 1) * q;
  const auto lo = static_cast<size_t>(std::floor(h));
  if (lo + 1 >= values.size()) return values.back();
  return values[lo] + (h - static_cast<double>(lo)) * (values[lo + 1] - values[lo]);
}

QuantileFlags apply_quantile_thresholds(const std::vector<double>& rl, double low, double high) {
  QuantileFlags f;
  f.low_threshold = low;
  f.high_threshold = high;
  f.low.reserve(rl.size());
  f.high.reserve(rl.size());
  for (double v : rl) {
    f.low.push_back(v <= low ? 1 : 0);
    f.high.push_back(v >= high ? 1 : 0);
  }
  return f;
}

QuantileFlags residual_load_quantile_flags(const std::vector<double>& rl, double q) {
  if (rl.empty()) throw DataError("residual load series is empty");
  if (!(q > 0.0 && q < 0.5)) throw ConfigError("quantile level must lie in (0, 0.5)");
  return apply_quantile_thresholds(rl, quantile(rl, q), quantile(rl, 1.0 - q));
}

std::vector<double> fcr_regressors(int block, int low_flag, int high_flag) {
  std::vector<double> r(7, 0.0);
  if (block >= 2 && block <= 6) r[static_cast<size_t>(block - 2)] = 1.0;
  r[5] = low_flag;
  r[6] = high_flag;
  return r;
}

Decomposition fit_fcr(const SeriesFrame& frame, const QuantileFlags& flags) {
  frame.validate();
  if (frame.resolution_hours != 4) throw DataError("fit_fcr expects four-hour blocks");
  if (frame.fcr_price.empty()) throw DataError("missing column fcr_price");
  if (flags.low.size() != frame.size() || flags.high.size() != frame.size())
    throw DataError("quantile flags do not match frame length");
  std::string bad;
  int nbad = 0;
  for (size_t i = 0; i < frame.size(); ++i)
    if (!(frame.fcr_price[i] > 0.0)) {
      if (nbad < 10) bad += (bad.empty() ? "" : ", ") + format_timestamp(frame.timestamps[i]);
      ++nbad;
    }
  if (nbad > 0)
    throw DataError("FCR log model needs positive prices; " + std::to_string(nbad) +
                    " nonpositive value(s) at " + bad + (nbad > 10 ? ", ..." : ""));

  const auto n = static_cast<Eigen::Index>(frame.size());
  Eigen::MatrixXd X(n, 7);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    auto r = static_cast<size_t>(i);
    auto reg = fcr_regressors(frame.block_of(r), flags.low[r], flags.high[r]);
    for (Eigen::Index j = 0; j < 7; ++j) X(i, j) = reg[static_cast<size_t>(j)];
    y(i) = std::log(frame.fcr_price[r]);
  }
  Decomposition d;
  d.fit = fit_ols(X, y, {"block2", "block3", "block4", "block5", "block6", "rl_low", "rl_high"});
  d.deterministic = d.fit.fitted;
  d.stochastic = d.fit.residuals;
  return d;
}

SpreadDistribution id_spreads(const SeriesFrame& frame, const std::vector<int>& da_labels,
                              const std::vector<double>& reconstructed_da, int clusters,
                              std::array<double, 3> probabilities) {
  if (frame.id_price.empty()) throw DataError("missing column id_price");
  if (reconstructed_da.size() != frame.size())
    throw DataError("reconstructed DA series does not match frame length");
  if (static_cast<int>(da_labels.size()) < frame.days())
    throw DataError("DA cluster labels cover " + std::to_string(da_labels.size()) + " days, frame has " +
                    std::to_string(frame.days()));
  double psum = probabilities[0] + probabilities[1] + probabilities[2];
  if (std::abs(psum - 1.0) > 1e-12) throw ConfigError("ID level probabilities must sum to 1");

  SpreadDistribution dist;
  dist.cluster_samples.assign(static_cast<size_t>(clusters), {});
  std::vector<double> pooled;
  pooled.reserve(frame.size());
  for (size_t r = 0; r < frame.size(); ++r) {
    int label = da_labels[static_cast<size_t>(frame.day_of(r))];
    if (label < 0 || label >= clusters) throw DataError("DA cluster label out of range");
    double s = frame.id_price[r] - reconstructed_da[r];
    dist.cluster_samples[static_cast<size_t>(label)].push_back(s);
    pooled.push_back(s);
  }
  auto summarize = [&](const std::vector<double>& s) {
    SpreadLevels lv;
    lv.samples = s.size();
    lv.probabilities = probabilities;
    double mean = std::accumulate(s.begin(), s.end(), 0.0) / static_cast<double>(s.size());
    lv.levels = {quantile(s, 0.15), mean, quantile(s, 0.85)};
    return lv;
  };
  for (int c = 0; c < clusters; ++c) {
    const auto& s = dist.cluster_samples[static_cast<size_t>(c)];
    if (s.size() < 10) {
      dist.warnings.push_back("DA cluster " + std::to_string(c) + " has " + std::to_string(s.size()) +
                              " spread samples (< 10); using pooled distribution");
      SpreadLevels lv = summarize(pooled);
      lv.samples = s.size();
      lv.pooled_fallback = true;
      dist.clusters.push_back(lv);
    } else {
      dist.clusters.push_back(summarize(s));
    }
  }
  return dist;
}

JarqueBera jarque_bera(const std::vector<double>& x) {
  JarqueBera jb;
  const double n = static_cast<double>(x.size());
  if (x.size() < 3) return jb;
  double mean = std::accumulate(x.begin(), x.end(), 0.0) / n;
  double m2 = 0, m3 = 0, m4 = 0;
  for (double v : x) {
    double d = v - mean;
    m2 += d * d;
    m3 += d * d * d;
    m4 += d * d * d * d;
  }
  m2 /= n;
  m3 /= n;
  m4 /= n;
  if (m2 <= 0) return jb;
  jb.skewness = m3 / std::pow(m2, 1.5);
  jb.excess_kurtosis = m4 / (m2 * m2) - 3.0;
  jb.statistic = n / 6.0 * (jb.skewness * jb.skewness + jb.excess_kurtosis * jb.excess_kurtosis / 4.0);
  jb.p_value = std::exp(-jb.statistic / 2.0);  // chi-square, 2 dof
  return jb;
}

}  // namespace cobid
