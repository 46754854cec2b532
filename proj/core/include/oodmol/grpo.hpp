#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "oodmol/policy.hpp"

namespace oodmol {

struct ActionRecord {
  std::vector<std::uint8_t> bits;
  double logp = 0.0;
  double logp_ref = 0.0;
  bool valid = false;
  double reward = 0.0;
  double advantage = 0.0;

  int count() const;
  std::string bitstring() const;
};

// sum_j a_j ln p_j + (1 - a_j) ln(1 - p_j), evaluated from logits.
double bernoulli_log_prob(std::span<const std::uint8_t> bits, const Eigen::VectorXd& logits);

// One forward of each network, then G Bernoulli vectors drawn from seeded
// substreams. Valid iff 1 <= |a| <= k_max.
std::vector<ActionRecord> sample_actions(const PolicyNet& policy, const PolicyNet& reference, const RowMatrix& states,
                                         int group_size, int k_max, std::uint64_t seed);

// (R - mean) / (population std + eps). Throws GroupTooSmall below 2 rewards.
std::vector<double> advantages(std::span<const double> rewards, double eps = 1e-8);

// mean(exp(d) - d - 1).
double kl_estimate(std::span<const double> deltas);

struct GrpoLossValue {
  double loss = 0.0;
  double surrogate = 0.0;  // mean min(r A, clip(r) A), before negation
  double kl = 0.0;
  std::vector<double> dlogp;  // d loss / d logp_theta per record (0 for invalid)
};

// -mean_V min(r A, clip(r, 1-eps, 1+eps) A) + beta * kl over the valid
// records. Throws GroupTooSmall with fewer than 2 valid records.
GrpoLossValue grpo_loss(std::span<const ActionRecord> records, double eps_clip = 0.2, double beta = 0.01);

// Parameter gradient of grpo_loss through the Bernoulli log-likelihoods.
Eigen::VectorXd grpo_gradient(const PolicyNet& policy, const RowMatrix& states,
                              std::span<const ActionRecord> records, const GrpoLossValue& loss);

class RewardOracle {
 public:
  virtual ~RewardOracle() = default;
  // nullopt marks a failed rollout; the action then counts as invalid.
  virtual std::optional<double> reward(const std::vector<std::uint8_t>& action, std::uint64_t seed) const = 0;
};

struct GrpoConfig {
  int steps = 40;
  int group_size = 33;
  int k_max = 8;
  double beta = 0.01;
  double eps_clip = 0.2;
  double eps_s = 1e-8;
  double lr = 1e-3;
  // "adam" or "sgd".
  std::string optimizer = "adam";
  int threads = 1;
};

struct PolicyState {
  PolicyNet policy;
  PolicyNet reference;
  Eigen::VectorXd adam_m;
  Eigen::VectorXd adam_v;
  int updates = 0;
  int steps_done = 0;

  explicit PolicyState(PolicyNet net);
};

struct StepLog {
  int step = 0;
  bool skipped = false;
  double loss = 0.0;
  double kl = 0.0;
  double mean_reward = 0.0;
  std::vector<ActionRecord> actions;
};

// Runs `config.steps` GRPO steps. Rewards are computed (optionally on
// several threads) and reduced in action order. Each step's log is appended
// to `log` when given and also written as JSONL to `jsonl`.
void train_policy(const RewardOracle& oracle, const RowMatrix& states, PolicyState& state, const GrpoConfig& config,
                  std::uint64_t seed, std::vector<StepLog>* log = nullptr, std::ostream* jsonl = nullptr);

// Top-k by probability (one forward pass), key-ascending tie-break.
// Throws KTooLarge when k exceeds the pool.
std::vector<int> infer_select(const PolicyNet& policy, const RowMatrix& states, int k,
                              std::span<const std::string> keys);

}  // namespace oodmol
