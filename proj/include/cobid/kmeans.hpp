// SPDX-License-Identifier: Apache-2.0
//
// Euclidean k-means (k-means++ seeding, Lloyd iterations, best of restarts)
// and the windowing / elbow helpers used to build the price lattice.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace cobid {

using Point = std::vector<double>;

struct ClusterModel {
  int k = 0;
  std::vector<Point> centroids;
  double inertia = 0.0;
  std::vector<int> assignments;

  /// Nearest centroid (lowest index on ties).
  [[nodiscard]] int nearest(const Point& p) const;
};

struct KMeansOptions {
  int restarts = 10;
  int max_iterations = 300;
  bool parallel = true;  // restarts run under OpenMP; result identical to serial
};

/// Throws ConfigError if k < 1, k > #observations or restarts < 1.
ClusterModel kmeans(const std::vector<Point>& obs, int k, std::uint64_t seed, KMeansOptions opts = {});
/// Serial reference of kmeans().
ClusterModel kmeans_serial(const std::vector<Point>& obs, int k, std::uint64_t seed, KMeansOptions opts = {});
/// Lloyd iterations from the given initial centroids.
ClusterModel lloyd(const std::vector<Point>& obs, std::vector<Point> centroids, int max_iterations = 300);

double squared_distance(const Point& a, const Point& b);
double inertia_of(const std::vector<Point>& obs, const std::vector<Point>& centroids,
                  const std::vector<int>& assignments);

/// Splits a four-hour series (6 values per day) into non-overlapping windows of
/// `window_days` days. A trailing partial window is dropped and reported.
std::vector<Point> window_observations(const std::vector<double>& series, int window_days,
                                       std::vector<std::string>* warnings = nullptr);

struct ElbowPoint {
  int k;
  double inertia;
};

/// Inertia for k = k_min..k_max. Each k is also refined from the previous
/// solution plus its farthest point, which keeps the curve non-increasing.
std::vector<ElbowPoint> elbow_scan(const std::vector<Point>& obs, int k_min, int k_max, std::uint64_t seed,
                                   KMeansOptions opts = {});
void write_elbow_csv(const std::string& path, const std::vector<ElbowPoint>& points);

/// Deterministic uniform double in [0, 1) from a 64-bit engine output.
inline double unit_double(std::uint64_t bits) { return static_cast<double>(bits >> 11) * 0x1.0p-53; }

/// splitmix64 step; used to derive independent seeds.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace cobid
