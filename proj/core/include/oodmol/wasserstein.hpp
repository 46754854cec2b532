#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

namespace oodmol {

/// Exact 1-Wasserstein distance between two empirical distributions on the
/// line (uniform weights). Inputs need not be sorted. Throws EmptyInput.
double wasserstein1_1d(std::vector<double> xs, std::vector<double> ys);

/// Mean of wasserstein1_1d over `n_projections` seeded random unit directions.
/// Throws DimensionMismatch / EmptyInput.
double sliced_w1(const std::vector<std::vector<double>>& xs, const std::vector<std::vector<double>>& ys,
                 int n_projections, std::uint64_t seed);

/// Smallest r whose top-r covariance eigenvalues hold at least `energy` of the
/// trace (population covariance). 0 for zero covariance.
int collapse_rank(const Eigen::MatrixXd& features, double energy = 0.99);

}  // namespace oodmol
