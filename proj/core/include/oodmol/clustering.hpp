#pragma once

#include <array>
#include <cstdint>
#include <vector>

namespace oodmol {

using Point = std::vector<double>;

struct KMeansResult {
  std::vector<int> assignment;
  std::vector<Point> centroids;
  double inertia = 0.0;
  int iterations = 0;
};

/// K-Means++ seeding followed by Lloyd iterations until the assignment stops
/// changing or `max_iterations` is hit. Empty clusters take the point farthest
/// from its centroid. Throws KTooLarge unless 1 <= k <= points.size().
KMeansResult kmeanspp(const std::vector<Point>& points, int k, std::uint64_t seed,
                      int max_iterations = 100);

double squared_distance(const Point& a, const Point& b);

inline constexpr int kLevelCount = 5;

/// Cluster quotas per level: proportional to size, polycyclic levels (3, 4)
/// boosted by (1 + alpha_comp), at least one per non-empty level, largest
/// remainder rounding to sum exactly to k_total (lower level wins ties).
std::array<int, kLevelCount> allocate_quotas(const std::array<int, kLevelCount>& level_sizes,
                                             int k_total, double alpha_comp);

}  // namespace oodmol
