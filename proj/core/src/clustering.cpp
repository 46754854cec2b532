#include "oodmol/clustering.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "oodmol/error.hpp"
#include "oodmol/rng.hpp"

namespace oodmol {

double squared_distance(const Point& a, const Point& b) {
  double s = 0.0;
  for (std::size_t d = 0; d < a.size(); ++d) {
    const double diff = a[d] - b[d];
    s += diff * diff;
  }
  return s;
}

namespace {

int nearest(const Point& p, const std::vector<Point>& centroids, double* dist = nullptr) {
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < centroids.size(); ++c) {
    const double d = squared_distance(p, centroids[c]);
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(c);
    }
  }
  if (dist) *dist = best_d;
  return best;
}

}  // namespace

KMeansResult kmeanspp(const std::vector<Point>& points, int k, std::uint64_t seed, int max_iterations) {
  const int n = static_cast<int>(points.size());
  if (k < 1 || k > n) {
    throw Error(ErrorKind::KTooLarge, "k=" + std::to_string(k) + " for " + std::to_string(n) + " points");
  }
  const std::size_t dims = points.front().size();
  for (const Point& p : points) {
    if (p.size() != dims) throw Error(ErrorKind::DimensionMismatch, "ragged point set");
  }

  Rng rng(seed);
  KMeansResult result;
  result.centroids.push_back(points[rng.uniform_index(n)]);
  std::vector<double> d2(n);
  while (static_cast<int>(result.centroids.size()) < k) {
    for (int i = 0; i < n; ++i) nearest(points[i], result.centroids, &d2[i]);
    result.centroids.push_back(points[rng.weighted_index(d2)]);
  }

  result.assignment.assign(n, -1);
  for (int iter = 0; iter < max_iterations; ++iter) {
    bool changed = false;
    for (int i = 0; i < n; ++i) {
      const int c = nearest(points[i], result.centroids);
      if (c != result.assignment[i]) {
        result.assignment[i] = c;
        changed = true;
      }
    }
    result.iterations = iter + 1;
    if (!changed) break;

    std::vector<Point> sums(k, Point(dims, 0.0));
    std::vector<int> counts(k, 0);
    for (int i = 0; i < n; ++i) {
      ++counts[result.assignment[i]];
      for (std::size_t d = 0; d < dims; ++d) sums[result.assignment[i]][d] += points[i][d];
    }
    for (int c = 0; c < k; ++c) {
      if (counts[c] == 0) continue;
      for (std::size_t d = 0; d < dims; ++d) sums[c][d] /= counts[c];
      result.centroids[c] = sums[c];
    }
    for (int c = 0; c < k; ++c) {
      if (counts[c] != 0) continue;
      int far = -1;
      double far_d = -1.0;
      for (int i = 0; i < n; ++i) {
        if (counts[result.assignment[i]] <= 1) continue;
        const double d = squared_distance(points[i], result.centroids[result.assignment[i]]);
        if (d > far_d) {
          far_d = d;
          far = i;
        }
      }
      if (far < 0) continue;
      --counts[result.assignment[far]];
      result.assignment[far] = c;
      counts[c] = 1;
      result.centroids[c] = points[far];
      changed = true;
    }
  }

  result.inertia = 0.0;
  for (int i = 0; i < n; ++i) {
    result.inertia += squared_distance(points[i], result.centroids[result.assignment[i]]);
  }
  return result;
}

std::array<int, kLevelCount> allocate_quotas(const std::array<int, kLevelCount>& level_sizes,
                                             int k_total, double alpha_comp) {
  int non_empty = 0;
  double weight_sum = 0.0;
  std::array<double, kLevelCount> weight{};
  for (int l = 0; l < kLevelCount; ++l) {
    if (level_sizes[l] < 0) throw Error(ErrorKind::InfeasibleQuota, "negative level size");
    if (level_sizes[l] > 0) ++non_empty;
    weight[l] = level_sizes[l] * (l >= 3 ? 1.0 + alpha_comp : 1.0);
    weight_sum += weight[l];
  }
  if (non_empty == 0 || k_total < non_empty) {
    throw Error(ErrorKind::InfeasibleQuota, "K_total=" + std::to_string(k_total) + " with " +
                                                std::to_string(non_empty) + " non-empty levels");
  }
  std::array<double, kLevelCount> raw{};
  std::array<int, kLevelCount> quota{};
  int assigned = 0;
  for (int l = 0; l < kLevelCount; ++l) {
    raw[l] = k_total * weight[l] / weight_sum;
    quota[l] = static_cast<int>(std::floor(raw[l]));
    if (level_sizes[l] > 0 && quota[l] < 1) quota[l] = 1;
    assigned += quota[l];
  }
  while (assigned < k_total) {
    int best = -1;
    for (int l = 0; l < kLevelCount; ++l) {
      if (level_sizes[l] == 0) continue;
      if (best < 0 || raw[l] - quota[l] > raw[best] - quota[best]) best = l;
    }
    ++quota[best];
    ++assigned;
  }
  while (assigned > k_total) {
    // Take back from the most over-allocated level; higher index loses ties.
    int worst = -1;
    for (int l = 0; l < kLevelCount; ++l) {
      if (quota[l] <= 1) continue;
      if (worst < 0 || raw[l] - quota[l] <= raw[worst] - quota[worst]) worst = l;
    }
    --quota[worst];
    --assigned;
  }
  return quota;
}

}  // namespace oodmol
