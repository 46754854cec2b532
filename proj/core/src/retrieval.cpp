#include "oodmol/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "oodmol/error.hpp"

namespace oodmol {
namespace {

// Indices sorted by score descending, then key ascending.
std::vector<int> rank_by(const std::vector<double>& score, std::span<const ScaffoldRecord* const> pool) {
  std::vector<int> order(score.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (score[a] != score[b]) return score[a] > score[b];
    return pool[a]->key < pool[b]->key;
  });
  return order;
}

}  // namespace

double hub_score(const Fingerprint& candidate, std::span<const Fingerprint> targets, double lambda, double tau_sim) {
  if (targets.empty()) throw Error(ErrorKind::EmptyTargets, "hub score needs at least one target");
  if (lambda < 0.0) throw Error(ErrorKind::BadConfig, "lambda must be >= 0");
  double best = -1.0;
  int above = 0;
  for (const Fingerprint& t : targets) {
    const double s = cosine_sim(candidate, t);
    best = std::max(best, s);
    if (s > tau_sim) ++above;
  }
  return best + lambda * above;
}

std::vector<int> select_proxies(std::span<const ScaffoldRecord* const> pool, std::span<const Fingerprint> targets,
                                int n_proxies, const RetrievalConfig& config) {
  if (n_proxies < 1 || static_cast<int>(pool.size()) <= n_proxies) {
    throw Error(ErrorKind::PoolTooSmall, "need more than " + std::to_string(n_proxies) + " pool scaffolds, have " +
                                             std::to_string(pool.size()));
  }
  std::vector<double> score;
  for (const ScaffoldRecord* r : pool) score.push_back(hub_score(r->fingerprint, targets, config.lambda, config.tau_sim));
  std::vector<int> order = rank_by(score, pool);
  order.resize(n_proxies);
  return order;
}

double s_rank(double wl_similarity, std::size_t member_count) {
  return wl_similarity * std::log1p(static_cast<double>(member_count));
}

double s_rank(const MolGraph& proxy, const MolGraph& candidate, std::size_t member_count, int wl_iterations) {
  return s_rank(wl_kernel(proxy, candidate, wl_iterations), member_count);
}

std::vector<int> build_candidate_pool(const ScaffoldRecord& proxy, std::span<const ScaffoldRecord* const> pool, int m,
                                      const RetrievalConfig& config) {
  if (m < 1 || static_cast<int>(pool.size()) < m) {
    throw Error(ErrorKind::PoolTooSmall, "candidate pool of " + std::to_string(m) + " requested from " +
                                             std::to_string(pool.size()) + " scaffolds");
  }
  std::vector<double> score;
  for (const ScaffoldRecord* r : pool) {
    score.push_back(s_rank(proxy.graph, r->graph, r->members.size(), config.wl_iterations));
  }
  std::vector<int> order = rank_by(score, pool);
  order.resize(m);
  return order;
}

std::vector<double> build_state(const Fingerprint& proxy_fp, const Fingerprint& candidate_fp, double wl_similarity,
                                std::size_t member_count, double c_norm) {
  if (proxy_fp.length() != kFingerprintLength || candidate_fp.length() != kFingerprintLength) {
    throw Error(ErrorKind::LengthMismatch, "state fingerprints must have " + std::to_string(kFingerprintLength) +
                                               " bits");
  }
  std::vector<double> s = proxy_fp.as_reals();
  const std::vector<double> c = candidate_fp.as_reals();
  s.insert(s.end(), c.begin(), c.end());
  s.push_back(wl_similarity);
  s.push_back(c_norm > 0.0 ? std::log1p(static_cast<double>(member_count)) / c_norm : 0.0);
  return s;
}

}  // namespace oodmol
