// SPDX-License-Identifier: Apache-2.0
#include "cobid/kmeans.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <random>

#include "cobid/csv_io.hpp"
#include "cobid/errors.hpp"

namespace cobid {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

double squared_distance(const Point& a, const Point& b) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

int ClusterModel::nearest(const Point& p) const {
  int best = 0;
  double bd = std::numeric_limits<double>::infinity();
  for (int c = 0; c < k; ++c) {
    double d = squared_distance(p, centroids[static_cast<size_t>(c)]);
    if (d < bd) {
      bd = d;
      best = c;
    }
  }
  return best;
}

double inertia_of(const std::vector<Point>& obs, const std::vector<Point>& centroids,
                  const std::vector<int>& assignments) {
  double s = 0.0;
  for (size_t i = 0; i < obs.size(); ++i)
    s += squared_distance(obs[i], centroids[static_cast<size_t>(assignments[i])]);
  return s;
}

namespace {

void validate_inputs(const std::vector<Point>& obs, int k, int restarts) {
  if (obs.empty()) throw ConfigError("k-means needs at least one observation");
  if (k < 1 || static_cast<size_t>(k) > obs.size())
    throw ConfigError("k-means: k=" + std::to_string(k) + " outside [1, " + std::to_string(obs.size()) + "]");
  if (restarts < 1) throw ConfigError("k-means: restarts must be >= 1");
  for (const auto& p : obs)
    if (p.size() != obs.front().size()) throw DataError("k-means: observations have differing dimensions");
}

std::vector<Point> plus_plus(const std::vector<Point>& obs, int k, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<Point> c;
  c.push_back(obs[static_cast<size_t>(rng() % obs.size())]);
  std::vector<double> d2(obs.size(), std::numeric_limits<double>::infinity());
  while (static_cast<int>(c.size()) < k) {
    double total = 0.0;
    for (size_t i = 0; i < obs.size(); ++i) {
      d2[i] = std::min(d2[i], squared_distance(obs[i], c.back()));
      total += d2[i];
    }
    size_t pick = 0;
    if (total <= 0.0) {
      pick = static_cast<size_t>(rng() % obs.size());
    } else {
      double u = unit_double(rng()) * total, acc = 0.0;
      pick = obs.size() - 1;
      for (size_t i = 0; i < obs.size(); ++i) {
        acc += d2[i];
        if (u < acc && d2[i] > 0) {
          pick = i;
          break;
        }
      }
    }
    c.push_back(obs[pick]);
  }
  return c;
}

std::vector<int> assign(const std::vector<Point>& obs, const std::vector<Point>& centroids) {
  ClusterModel tmp;
  tmp.k = static_cast<int>(centroids.size());
  tmp.centroids = centroids;
  std::vector<int> a(obs.size());
  for (size_t i = 0; i < obs.size(); ++i) a[i] = tmp.nearest(obs[i]);
  return a;
}

}  // namespace

ClusterModel lloyd(const std::vector<Point>& obs, std::vector<Point> centroids, int max_iterations) {
  const int k = static_cast<int>(centroids.size());
  const size_t dim = obs.front().size();
  std::vector<int> a = assign(obs, centroids);
  for (int it = 0; it < max_iterations; ++it) {
    std::vector<Point> sum(static_cast<size_t>(k), Point(dim, 0.0));
    std::vector<int> count(static_cast<size_t>(k), 0);
    for (size_t i = 0; i < obs.size(); ++i) {
      auto c = static_cast<size_t>(a[i]);
      ++count[c];
      for (size_t j = 0; j < dim; ++j) sum[c][j] += obs[i][j];
    }
    for (int c = 0; c < k; ++c) {
      auto cc = static_cast<size_t>(c);
      if (count[cc] > 0) {
        for (size_t j = 0; j < dim; ++j) centroids[cc][j] = sum[cc][j] / count[cc];
        continue;
      }
      // Empty cluster: move it to the point farthest from its own centroid.
      size_t far = 0;
      double fd = -1.0;
      for (size_t i = 0; i < obs.size(); ++i) {
        double d = squared_distance(obs[i], centroids[static_cast<size_t>(a[i])]);
        if (d > fd) {
          fd = d;
          far = i;
        }
      }
      centroids[cc] = obs[far];
      a[far] = c;
    }
    std::vector<int> next = assign(obs, centroids);
    if (next == a) break;
    a = std::move(next);
  }
  ClusterModel m;
  m.k = k;
  m.centroids = std::move(centroids);
  m.assignments = assign(obs, m.centroids);
  m.inertia = inertia_of(obs, m.centroids, m.assignments);
  return m;
}

namespace {

ClusterModel run_restarts(const std::vector<Point>& obs, int k, std::uint64_t seed, KMeansOptions opts,
                          bool parallel) {
  validate_inputs(obs, k, opts.restarts);
  std::vector<ClusterModel> results(static_cast<size_t>(opts.restarts));
#pragma omp parallel for schedule(dynamic) if (parallel)
  for (int r = 0; r < opts.restarts; ++r)
    results[static_cast<size_t>(r)] =
        lloyd(obs, plus_plus(obs, k, mix_seed(seed, static_cast<std::uint64_t>(r))), opts.max_iterations);
  size_t best = 0;
  for (size_t r = 1; r < results.size(); ++r)
    if (results[r].inertia < results[best].inertia) best = r;
  return std::move(results[best]);
}

}  // namespace

ClusterModel kmeans(const std::vector<Point>& obs, int k, std::uint64_t seed, KMeansOptions opts) {
  return run_restarts(obs, k, seed, opts, opts.parallel);
}

ClusterModel kmeans_serial(const std::vector<Point>& obs, int k, std::uint64_t seed, KMeansOptions opts) {
  return run_restarts(obs, k, seed, opts, false);
}

std::vector<Point> window_observations(const std::vector<double>& series, int window_days,
                                       std::vector<std::string>* warnings) {
  if (window_days < 1) throw ConfigError("window_days must be >= 1");
  if (series.size() % 6 != 0)
    throw DataError("four-hour series length " + std::to_string(series.size()) + " is not a whole number of days");
  const size_t days = series.size() / 6;
  const size_t w = static_cast<size_t>(window_days);
  std::vector<Point> out;
  for (size_t start = 0; start + w <= days; start += w)
    out.emplace_back(series.begin() + static_cast<std::ptrdiff_t>(start * 6),
                     series.begin() + static_cast<std::ptrdiff_t>((start + w) * 6));
  if (days % w != 0 && warnings)
    warnings->push_back("dropped " + std::to_string(days % w) + " trailing day(s) that do not fill a " +
                        std::to_string(window_days) + "-day window");
  return out;
}

std::vector<ElbowPoint> elbow_scan(const std::vector<Point>& obs, int k_min, int k_max, std::uint64_t seed,
                                   KMeansOptions opts) {
  if (k_min < 1 || k_max < k_min || static_cast<size_t>(k_max) > obs.size())
    throw ConfigError("elbow scan range [" + std::to_string(k_min) + ", " + std::to_string(k_max) +
                      "] invalid for " + std::to_string(obs.size()) + " observations");
  std::vector<ElbowPoint> out;
  ClusterModel prev;
  for (int k = k_min; k <= k_max; ++k) {
    ClusterModel m = kmeans(obs, k, mix_seed(seed, static_cast<std::uint64_t>(1000 + k)), opts);
    if (k > k_min) {
      std::vector<Point> init = prev.centroids;
      size_t far = 0;
      double fd = -1.0;
      for (size_t i = 0; i < obs.size(); ++i) {
        double d = squared_distance(obs[i], prev.centroids[static_cast<size_t>(prev.assignments[i])]);
        if (d > fd) {
          fd = d;
          far = i;
        }
      }
      init.push_back(obs[far]);
      ClusterModel nested = lloyd(obs, init, opts.max_iterations);
      if (nested.inertia < m.inertia) m = std::move(nested);
    }
    out.push_back({k, m.inertia});
    prev = std::move(m);
  }
  return out;
}

void write_elbow_csv(const std::string& path, const std::vector<ElbowPoint>& points) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  out << "k,inertia\n";
  for (const auto& p : points) out << p.k << ',' << format_double(p.inertia) << '\n';
}

}  // namespace cobid
