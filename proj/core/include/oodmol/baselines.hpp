#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "oodmol/benchgen.hpp"

namespace oodmol {

// The six heuristic selection policies.
inline constexpr std::string_view kHeuristicPolicies[] = {"random",   "shallow",      "deep",
                                                          "physical", "graph-kernel", "mixed"};

bool is_heuristic_policy(std::string_view name);

struct SelectorContext {
  const ScaffoldRecord* proxy = nullptr;
  std::vector<const ScaffoldRecord*> pool;
  // Mean h_mol of each pool scaffold's members (and the proxy's) under the
  // 40-epoch ("shallow") and 200-epoch ("deep") source models. Only needed
  // by the feature-matching policies.
  std::vector<Eigen::VectorXd> shallow_pool, deep_pool;
  Eigen::VectorXd shallow_proxy, deep_proxy;
  int wl_iterations = 3;
};

// Per-candidate score for a deterministic heuristic (higher is better).
std::vector<double> heuristic_scores(std::string_view name, const SelectorContext& ctx);

// Top-k positions in ctx.pool, key-ascending tie-break; "random" draws a
// seeded uniform k-subset. Throws UnknownPolicy / KTooLarge.
std::vector<int> baseline_select(std::string_view name, const SelectorContext& ctx, int k, std::uint64_t seed);

}  // namespace oodmol
