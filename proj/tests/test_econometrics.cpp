// SPDX-License-Identifier: Apache-2.0
#include "doctest.h"

#include <cmath>
#include <random>

#include "cobid/errors.hpp"
#include "cobid/econometrics.hpp"

using namespace cobid;

namespace {

SeriesFrame block_frame(int days, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z(0.0, 1.0);
  SeriesFrame f;
  f.resolution_hours = 4;
  for (int i = 0; i < days * 6; ++i) {
    f.timestamps.push_back(1640995200 + static_cast<std::int64_t>(i) * 4 * 3600);
    double ttf = 100 + 3 * z(rng), co2 = 80 + z(rng), rl = 40000 + 5000 * z(rng);
    f.ttf_gas.push_back(ttf);
    f.co2.push_back(co2);
    f.residual_load.push_back(rl);
    f.da_price.push_back(-40 + 1.5 * ttf + 0.8 * co2 + 0.004 * rl + 10 * z(rng));
    f.fcr_price.push_back(std::exp(3.0 + 0.2 * z(rng)));
    f.id_price.push_back(f.da_price.back() + 5 * z(rng));
  }
  return f;
}

}  // namespace

TEST_CASE("OLS matches the normal equations on random designs") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> z(0.0, 1.0);
  for (int trial = 0; trial < 25; ++trial) {
    Eigen::MatrixXd D(50, 3);
    Eigen::VectorXd y(50);
    for (int i = 0; i < 50; ++i) {
      for (int j = 0; j < 3; ++j) D(i, j) = z(rng) * (j + 1);
      y(i) = 2.0 - D(i, 0) + 0.5 * D(i, 1) + 3.0 * D(i, 2) + z(rng);
    }
    auto fit = fit_ols(D, y);

    Eigen::MatrixXd X(50, 4);
    X.col(0).setOnes();
    X.rightCols(3) = D;
    Eigen::MatrixXd xtx = X.transpose() * X;
    Eigen::VectorXd beta = xtx.inverse() * (X.transpose() * y);
    CHECK(std::abs(fit.intercept - beta(0)) <= 1e-8);
    for (int j = 0; j < 3; ++j) CHECK(std::abs(fit.coefficients[static_cast<size_t>(j)] - beta(j + 1)) <= 1e-8);

    Eigen::VectorXd e = y - X * beta;
    double rss = e.squaredNorm();
    double tss = (y.array() - y.mean()).matrix().squaredNorm();
    CHECK(fit.r2 == doctest::Approx(1 - rss / tss).epsilon(1e-10));
    CHECK(fit.adjusted_r2 == doctest::Approx(1 - (rss / 46) / (tss / 49)).epsilon(1e-10));
    double num = 0;
    for (int i = 1; i < 50; ++i) num += (e(i) - e(i - 1)) * (e(i) - e(i - 1));
    CHECK(fit.durbin_watson == doctest::Approx(num / rss).epsilon(1e-10));
    Eigen::MatrixXd cov = rss / 46 * xtx.inverse();
    CHECK(fit.intercept_se == doctest::Approx(std::sqrt(cov(0, 0))).epsilon(1e-8));
    CHECK(fit.standard_errors[2] == doctest::Approx(std::sqrt(cov(3, 3))).epsilon(1e-8));
  }
}

TEST_CASE("OLS rejects collinear and short designs") {
  Eigen::MatrixXd D(10, 2);
  Eigen::VectorXd y(10);
  for (int i = 0; i < 10; ++i) {
    D(i, 0) = i;
    D(i, 1) = 2 * i;
    y(i) = i;
  }
  CHECK_THROWS_AS(fit_ols(D, y, {"a", "b"}), DataError);
  CHECK_THROWS_AS(fit_ols(D.topRows(2), y.head(2)), DataError);
}

TEST_CASE("decomposition reconstructs the price series") {
  auto f = block_frame(40, 3);
  auto d = decompose_da(f);
  REQUIRE(d.deterministic.size() == f.size());
  for (size_t i = 0; i < f.size(); ++i)
    CHECK(std::abs(d.deterministic[i] + d.stochastic[i] - f.da_price[i]) <= 4 * std::numeric_limits<double>::epsilon() * std::abs(f.da_price[i]));
  CHECK(d.fit.r2 > 0.3);

  auto flags = residual_load_quantile_flags(f.residual_load, 0.1);
  auto g = fit_fcr(f, flags);
  for (size_t i = 0; i < f.size(); ++i)
    CHECK(std::abs(std::exp(g.deterministic[i] + g.stochastic[i]) - f.fcr_price[i]) <= 1e-12 * f.fcr_price[i]);
}

TEST_CASE("quantiles and flags follow order statistics") {
  // sorted: 1 2 3 4 5 6 7 8 9 10 11
  std::vector<double> v{7, 3, 11, 1, 9, 5, 2, 10, 4, 8, 6};
  CHECK(quantile(v, 0.1) == doctest::Approx(2.0));
  CHECK(quantile(v, 0.9) == doctest::Approx(10.0));
  CHECK(quantile(v, 0.5) == doctest::Approx(6.0));
  CHECK(quantile({3, 1, 2, 4}, 0.1) == doctest::Approx(1.3));
  CHECK(quantile({3, 1, 2, 4}, 1.0) == doctest::Approx(4.0));

  auto fl = residual_load_quantile_flags(v, 0.1);
  CHECK(fl.low_threshold == doctest::Approx(2.0));
  CHECK(fl.high_threshold == doctest::Approx(10.0));
  std::vector<int> low{0, 0, 0, 1, 0, 0, 1, 0, 0, 0, 0};
  std::vector<int> high{0, 0, 1, 0, 0, 0, 0, 1, 0, 0, 0};
  CHECK(fl.low == low);
  CHECK(fl.high == high);
  CHECK_THROWS_AS(residual_load_quantile_flags(v, 0.6), ConfigError);
  CHECK_THROWS_AS(quantile({}, 0.5), DataError);

  auto r = fcr_regressors(1, 1, 0);
  CHECK(r == std::vector<double>{0, 0, 0, 0, 0, 1, 0});
  CHECK(fcr_regressors(6, 0, 1) == std::vector<double>{0, 0, 0, 0, 1, 0, 1});
}

TEST_CASE("ID spread levels per DA cluster") {
  auto f = block_frame(20, 9);
  std::vector<int> labels(20);
  for (int d = 0; d < 20; ++d) labels[static_cast<size_t>(d)] = d < 15 ? 0 : 1;
  std::vector<double> recon(f.size(), 0.0);
  for (size_t i = 0; i < f.size(); ++i) recon[i] = f.da_price[i];
  auto dist = id_spreads(f, labels, recon, 3);
  REQUIRE(dist.clusters.size() == 3);
  const auto& s0 = dist.cluster_samples[0];
  CHECK(s0.size() == 90);
  CHECK(dist.clusters[0].levels[0] == doctest::Approx(quantile(s0, 0.15)));
  CHECK(dist.clusters[0].levels[2] == doctest::Approx(quantile(s0, 0.85)));
  CHECK_FALSE(dist.clusters[1].pooled_fallback);
  CHECK(dist.clusters[2].pooled_fallback);  // empty cluster
  CHECK(dist.warnings.size() == 1);
  CHECK_THROWS_AS(id_spreads(f, labels, recon, 3, {0.2, 0.2, 0.2}), ConfigError);
}

TEST_CASE("Jarque-Bera statistic by hand") {
  std::vector<double> x{1, 2, 3, 4, 10};
  // mean 4; deviations -3 -2 -1 0 6
  const double m2 = 50.0 / 5, m3 = (-27 - 8 - 1 + 216) / 5.0, m4 = (81 + 16 + 1 + 1296) / 5.0;
  const double s = m3 / std::pow(m2, 1.5), k = m4 / (m2 * m2) - 3;
  auto jb = jarque_bera(x);
  CHECK(jb.skewness == doctest::Approx(s));
  CHECK(jb.excess_kurtosis == doctest::Approx(k));
  CHECK(jb.statistic == doctest::Approx(5.0 / 6.0 * (s * s + k * k / 4)));
}

TEST_CASE("hourly frames downsample to blocks") {
  SeriesFrame h;
  for (int i = 0; i < 48; ++i) {
    h.timestamps.push_back(1640995200 + i * 3600);
    h.da_price.push_back(i);
  }
  auto b = downsample_to_blocks(h);
  REQUIRE(b.size() == 12);
  CHECK(b.da_price[0] == doctest::Approx(1.5));
  CHECK(b.da_price[11] == doctest::Approx(45.5));
  CHECK(b.days() == 2);
  CHECK(b.block_of(7) == 2);

  h.timestamps[5] += 1;
  CHECK_THROWS_AS(h.validate(), DataError);
}
