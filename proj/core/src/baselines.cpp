#include "oodmol/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "oodmol/chemsim.hpp"
#include "oodmol/descriptors.hpp"
#include "oodmol/error.hpp"
#include "oodmol/rng.hpp"

namespace oodmol {
namespace {

double cosine(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const double na = a.norm(), nb = b.norm();
  if (na == 0.0 || nb == 0.0) return 0.0;
  return a.dot(b) / (na * nb);
}

std::vector<double> min_max(std::vector<double> v) {
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  const double a = *lo, b = *hi;
  for (double& x : v) x = b > a ? (x - a) / (b - a) : 0.0;
  return v;
}

std::vector<double> feature_scores(const std::vector<Eigen::VectorXd>& pool, const Eigen::VectorXd& proxy,
                                   std::string_view name, std::size_t expected) {
  if (pool.size() != expected || proxy.size() == 0) {
    throw Error(ErrorKind::BadConfig, std::string(name) + " selection needs encoder embeddings for every candidate");
  }
  std::vector<double> s;
  for (const auto& e : pool) s.push_back(cosine(e, proxy));
  return s;
}

// Negative Euclidean distance in descriptor space, z-scored over proxy + pool.
std::vector<double> physical_scores(const SelectorContext& ctx) {
  std::vector<std::vector<double>> all{ctx.proxy->descriptor};
  for (const ScaffoldRecord* r : ctx.pool) all.push_back(r->descriptor);
  const auto z = zscore(all);
  std::vector<double> s;
  for (std::size_t i = 1; i < z.size(); ++i) {
    double d2 = 0.0;
    for (std::size_t j = 0; j < z[0].size(); ++j) d2 += (z[i][j] - z[0][j]) * (z[i][j] - z[0][j]);
    s.push_back(-std::sqrt(d2));
  }
  return s;
}

std::vector<double> kernel_scores(const SelectorContext& ctx) {
  std::vector<double> s;
  for (const ScaffoldRecord* r : ctx.pool) s.push_back(wl_kernel(ctx.proxy->graph, r->graph, ctx.wl_iterations));
  return s;
}

}  // namespace

bool is_heuristic_policy(std::string_view name) {
  return std::find(std::begin(kHeuristicPolicies), std::end(kHeuristicPolicies), name) !=
         std::end(kHeuristicPolicies);
}

std::vector<double> heuristic_scores(std::string_view name, const SelectorContext& ctx) {
  if (!ctx.proxy) throw Error(ErrorKind::BadConfig, "selector context has no proxy");
  if (name == "shallow") return feature_scores(ctx.shallow_pool, ctx.shallow_proxy, name, ctx.pool.size());
  if (name == "deep") return feature_scores(ctx.deep_pool, ctx.deep_proxy, name, ctx.pool.size());
  if (name == "physical") return physical_scores(ctx);
  if (name == "graph-kernel") return kernel_scores(ctx);
  if (name == "mixed") {
    const auto k = min_max(kernel_scores(ctx));
    const auto p = min_max(physical_scores(ctx));
    std::vector<double> s(k.size());
    for (std::size_t i = 0; i < s.size(); ++i) s[i] = 0.5 * k[i] + 0.5 * p[i];
    return s;
  }
  throw Error(ErrorKind::UnknownPolicy, "no scoring rule for policy '" + std::string(name) + "'");
}

std::vector<int> baseline_select(std::string_view name, const SelectorContext& ctx, int k, std::uint64_t seed) {
  if (!is_heuristic_policy(name)) throw Error(ErrorKind::UnknownPolicy, "unknown policy '" + std::string(name) + "'");
  const int m = static_cast<int>(ctx.pool.size());
  if (k < 0 || k > m) throw Error(ErrorKind::KTooLarge, "cannot select " + std::to_string(k) + " of " + std::to_string(m));
  std::vector<int> order(m);
  std::iota(order.begin(), order.end(), 0);
  if (name == "random") {
    Rng rng(derive_seed(seed, 0x7a4d));
    rng.shuffle(order);
    order.resize(k);
    std::sort(order.begin(), order.end());
    return order;
  }
  const std::vector<double> s = heuristic_scores(name, ctx);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (s[a] != s[b]) return s[a] > s[b];
    return ctx.pool[a]->key < ctx.pool[b]->key;
  });
  order.resize(k);
  return order;
}

}  // namespace oodmol
