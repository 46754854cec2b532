#pragma once

#include <span>
#include <string>
#include <vector>

#include "oodmol/benchgen.hpp"
#include "oodmol/chemsim.hpp"

namespace oodmol {

inline constexpr int kStateDim = 2 * kFingerprintLength + 2;  // 258

struct RetrievalConfig {
  double lambda = 0.3;
  double tau_sim = 0.45;
  int wl_iterations = kDefaultWlIterations;
};

// max_t cos(c, t) + lambda * #{t : cos(c, t) > tau_sim}. Throws EmptyTargets.
double hub_score(const Fingerprint& candidate, std::span<const Fingerprint> targets, double lambda = 0.3,
                 double tau_sim = 0.45);

// Top-n_proxies pool entries by hub score, key-ascending tie-break. Returns
// positions in `pool`. Throws PoolTooSmall unless |pool| > n_proxies >= 1.
std::vector<int> select_proxies(std::span<const ScaffoldRecord* const> pool, std::span<const Fingerprint> targets,
                                int n_proxies, const RetrievalConfig& config = {});

double s_rank(double wl_similarity, std::size_t member_count);
double s_rank(const MolGraph& proxy, const MolGraph& candidate, std::size_t member_count,
              int wl_iterations = kDefaultWlIterations);

// Positions in `pool` of the top-m candidates by s_rank against `proxy`,
// key-ascending tie-break. Throws PoolTooSmall when |pool| < m.
std::vector<int> build_candidate_pool(const ScaffoldRecord& proxy, std::span<const ScaffoldRecord* const> pool, int m,
                                      const RetrievalConfig& config = {});

// [proxy bits, candidate bits, k_WL, ln(1 + members) / c_norm].
std::vector<double> build_state(const Fingerprint& proxy_fp, const Fingerprint& candidate_fp, double wl_similarity,
                                std::size_t member_count, double c_norm);

}  // namespace oodmol
