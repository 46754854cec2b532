#include "oodmol/wasserstein.hpp"

#include <algorithm>
#include <cmath>

#include "oodmol/error.hpp"
#include "oodmol/rng.hpp"

namespace oodmol {

double wasserstein1_1d(std::vector<double> xs, std::vector<double> ys) {
  if (xs.empty() || ys.empty()) throw Error(ErrorKind::EmptyInput, "wasserstein1_1d needs samples");
  std::sort(xs.begin(), xs.end());
  std::sort(ys.begin(), ys.end());
  if (xs.size() == ys.size()) {
    double total = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) total += std::abs(xs[i] - ys[i]);
    return total / static_cast<double>(xs.size());
  }
  // Integral of |F_x - F_y| over the merged support.
  const double nx = static_cast<double>(xs.size());
  const double ny = static_cast<double>(ys.size());
  std::size_t i = 0, j = 0;
  double fx = 0.0, fy = 0.0, total = 0.0;
  double prev = std::min(xs.front(), ys.front());
  while (i < xs.size() || j < ys.size()) {
    double next;
    if (j >= ys.size() || (i < xs.size() && xs[i] <= ys[j])) {
      next = xs[i];
    } else {
      next = ys[j];
    }
    total += std::abs(fx - fy) * (next - prev);
    while (i < xs.size() && xs[i] == next) {
      ++i;
      fx = i / nx;
    }
    while (j < ys.size() && ys[j] == next) {
      ++j;
      fy = j / ny;
    }
    prev = next;
  }
  return total;
}

double sliced_w1(const std::vector<std::vector<double>>& xs, const std::vector<std::vector<double>>& ys,
                 int n_projections, std::uint64_t seed) {
  if (xs.empty() || ys.empty()) throw Error(ErrorKind::EmptyInput, "sliced_w1 needs samples");
  const std::size_t dims = xs.front().size();
  for (const auto& x : xs) {
    if (x.size() != dims) throw Error(ErrorKind::DimensionMismatch, "sliced_w1 ragged X");
  }
  for (const auto& y : ys) {
    if (y.size() != dims) throw Error(ErrorKind::DimensionMismatch, "sliced_w1 dimension mismatch");
  }
  if (n_projections < 1) throw Error(ErrorKind::BadConfig, "n_projections must be positive");
  Rng rng(seed);
  double total = 0.0;
  std::vector<double> dir(dims), px(xs.size()), py(ys.size());
  for (int p = 0; p < n_projections; ++p) {
    double norm = 0.0;
    do {
      norm = 0.0;
      for (double& v : dir) {
        v = rng.normal();
        norm += v * v;
      }
    } while (norm == 0.0);
    norm = std::sqrt(norm);
    for (double& v : dir) v /= norm;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      double s = 0.0;
      for (std::size_t d = 0; d < dims; ++d) s += xs[i][d] * dir[d];
      px[i] = s;
    }
    for (std::size_t i = 0; i < ys.size(); ++i) {
      double s = 0.0;
      for (std::size_t d = 0; d < dims; ++d) s += ys[i][d] * dir[d];
      py[i] = s;
    }
    total += wasserstein1_1d(px, py);
  }
  return total / n_projections;
}

int collapse_rank(const Eigen::MatrixXd& features, double energy) {
  if (features.rows() == 0 || features.cols() == 0) {
    throw Error(ErrorKind::EmptyInput, "collapse_rank of an empty feature matrix");
  }
  if (!(energy > 0.0 && energy <= 1.0)) throw Error(ErrorKind::BadConfig, "energy must be in (0, 1]");
  const Eigen::MatrixXd centered = features.rowwise() - features.colwise().mean();
  const Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(features.rows());
  const double trace = cov.trace();
  const double scale = features.squaredNorm() / static_cast<double>(features.rows());
  // Identical rows leave only rounding noise from the mean subtraction.
  if (!(trace > 1e-20 * scale) || trace == 0.0) return 0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov, Eigen::EigenvaluesOnly);
  Eigen::VectorXd values = solver.eigenvalues().cwiseMax(0.0);
  std::vector<double> sorted(values.data(), values.data() + values.size());
  std::sort(sorted.rbegin(), sorted.rend());
  // Tolerance so a rank-r matrix does not need an extra near-zero eigenvalue.
  const double goal = energy * trace * (1.0 - 1e-12);
  double acc = 0.0;
  for (std::size_t r = 0; r < sorted.size(); ++r) {
    acc += sorted[r];
    if (acc >= goal) return static_cast<int>(r + 1);
  }
  return static_cast<int>(sorted.size());
}

}  // namespace oodmol
