#include "oodmol/grpo.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <thread>

#include <json.hpp>

#include "oodmol/error.hpp"
#include "oodmol/rng.hpp"

namespace oodmol {
namespace {

double log_sigmoid(double z) { return z >= 0 ? -std::log1p(std::exp(-z)) : z - std::log1p(std::exp(z)); }

}  // namespace

int ActionRecord::count() const { return static_cast<int>(std::count(bits.begin(), bits.end(), 1)); }

std::string ActionRecord::bitstring() const {
  std::string s;
  for (auto b : bits) s.push_back(b ? '1' : '0');
  return s;
}

double bernoulli_log_prob(std::span<const std::uint8_t> bits, const Eigen::VectorXd& logits) {
  if (static_cast<Eigen::Index>(bits.size()) != logits.size()) {
    throw Error(ErrorKind::LengthMismatch, "action and logit lengths differ");
  }
  double lp = 0.0;
  for (std::size_t j = 0; j < bits.size(); ++j) {
    const double z = logits[static_cast<Eigen::Index>(j)];
    lp += bits[j] ? log_sigmoid(z) : log_sigmoid(-z);
  }
  return lp;
}

std::vector<ActionRecord> sample_actions(const PolicyNet& policy, const PolicyNet& reference, const RowMatrix& states,
                                         int group_size, int k_max, std::uint64_t seed) {
  if (group_size < 2) throw Error(ErrorKind::BadConfig, "group size must be at least 2");
  const Eigen::VectorXd z = policy.logits(states);
  const Eigen::VectorXd z_ref = reference.logits(states);
  const Eigen::VectorXd p = sigmoid(z);
  std::vector<ActionRecord> out(group_size);
  for (int g = 0; g < group_size; ++g) {
    Rng rng(derive_seed(seed, 0xac7, static_cast<std::uint64_t>(g)));
    ActionRecord& rec = out[g];
    rec.bits.resize(static_cast<std::size_t>(z.size()));
    for (Eigen::Index j = 0; j < z.size(); ++j) rec.bits[j] = rng.bernoulli(p[j]) ? 1 : 0;
    rec.logp = bernoulli_log_prob(rec.bits, z);
    rec.logp_ref = bernoulli_log_prob(rec.bits, z_ref);
    const int n = rec.count();
    rec.valid = n >= 1 && n <= k_max;
  }
  return out;
}

std::vector<double> advantages(std::span<const double> rewards, double eps) {
  if (rewards.size() < 2) throw Error(ErrorKind::GroupTooSmall, "advantages need at least two rewards");
  const double n = static_cast<double>(rewards.size());
  const double mean = std::accumulate(rewards.begin(), rewards.end(), 0.0) / n;
  double var = 0.0;
  for (double r : rewards) var += (r - mean) * (r - mean);
  const double sd = std::sqrt(var / n);
  std::vector<double> out;
  for (double r : rewards) out.push_back((r - mean) / (sd + eps));
  return out;
}

double kl_estimate(std::span<const double> deltas) {
  if (deltas.empty()) return 0.0;
  double s = 0.0;
  for (double d : deltas) s += std::expm1(d) - d;
  return s / static_cast<double>(deltas.size());
}

GrpoLossValue grpo_loss(std::span<const ActionRecord> records, double eps_clip, double beta) {
  std::vector<std::size_t> valid;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (records[i].valid) valid.push_back(i);
  }
  if (valid.size() < 2) throw Error(ErrorKind::GroupTooSmall, "fewer than two valid actions in the group");
  const double nv = static_cast<double>(valid.size());
  GrpoLossValue out;
  out.dlogp.assign(records.size(), 0.0);
  std::vector<double> deltas;
  for (std::size_t i : valid) {
    const ActionRecord& r = records[i];
    const double delta = r.logp - r.logp_ref;
    const double ratio = std::exp(delta);
    const double a = r.advantage;
    const double unclipped = ratio * a;
    const double clipped = std::clamp(ratio, 1.0 - eps_clip, 1.0 + eps_clip) * a;
    out.surrogate += std::min(unclipped, clipped) / nv;
    // d ratio / d logp = ratio; the clipped branch is flat.
    if (unclipped <= clipped) out.dlogp[i] -= unclipped / nv;
    out.dlogp[i] += beta * std::expm1(delta) / nv;
    deltas.push_back(delta);
  }
  out.kl = kl_estimate(deltas);
  out.loss = -out.surrogate + beta * out.kl;
  return out;
}

Eigen::VectorXd grpo_gradient(const PolicyNet& policy, const RowMatrix& states, std::span<const ActionRecord> records,
                              const GrpoLossValue& loss) {
  const Eigen::VectorXd p = sigmoid(policy.logits(states));
  Eigen::VectorXd dlogits = Eigen::VectorXd::Zero(p.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (loss.dlogp[i] == 0.0) continue;
    for (Eigen::Index j = 0; j < p.size(); ++j) dlogits[j] += loss.dlogp[i] * (records[i].bits[j] - p[j]);
  }
  return policy.backward(states, dlogits);
}

PolicyState::PolicyState(PolicyNet net) : policy(net), reference(std::move(net)) {
  adam_m = Eigen::VectorXd::Zero(policy.params().size());
  adam_v = Eigen::VectorXd::Zero(policy.params().size());
}

void train_policy(const RewardOracle& oracle, const RowMatrix& states, PolicyState& state, const GrpoConfig& config,
                  std::uint64_t seed, std::vector<StepLog>* log, std::ostream* jsonl) {
  if (config.optimizer != "adam" && config.optimizer != "sgd") {
    throw Error(ErrorKind::BadConfig, "unknown policy optimizer '" + config.optimizer + "'");
  }
  for (int s = 0; s < config.steps; ++s) {
    const int step = state.steps_done;
    state.reference = state.policy;
    StepLog entry;
    entry.step = step;
    entry.actions = sample_actions(state.policy, state.reference, states, config.group_size, config.k_max,
                                   derive_seed(seed, 0x5a3, static_cast<std::uint64_t>(step)));
    auto& acts = entry.actions;

    std::vector<std::optional<double>> rewards(acts.size());
    auto work = [&](std::size_t i) {
      if (acts[i].valid) rewards[i] = oracle.reward(acts[i].bits, derive_seed(seed, 0x4e7, step, i));
    };
    const int threads = std::max(1, config.threads);
    if (threads == 1) {
      for (std::size_t i = 0; i < acts.size(); ++i) work(i);
    } else {
      std::atomic<std::size_t> next{0};
      std::vector<std::thread> pool;
      for (int t = 0; t < threads; ++t) {
        pool.emplace_back([&] {
          for (std::size_t i = next++; i < acts.size(); i = next++) work(i);
        });
      }
      for (auto& th : pool) th.join();
    }

    std::vector<double> valid_rewards;
    for (std::size_t i = 0; i < acts.size(); ++i) {
      if (acts[i].valid && !rewards[i]) acts[i].valid = false;
      if (acts[i].valid) {
        acts[i].reward = *rewards[i];
        valid_rewards.push_back(*rewards[i]);
      }
    }
    if (valid_rewards.size() < 2) {
      entry.skipped = true;
    } else {
      const auto adv = advantages(valid_rewards, config.eps_s);
      std::size_t v = 0;
      for (auto& a : acts) {
        if (a.valid) a.advantage = adv[v++];
      }
      entry.mean_reward = std::accumulate(valid_rewards.begin(), valid_rewards.end(), 0.0) / valid_rewards.size();
      const GrpoLossValue loss = grpo_loss(acts, config.eps_clip, config.beta);
      entry.loss = loss.loss;
      entry.kl = loss.kl;
      const Eigen::VectorXd g = grpo_gradient(state.policy, states, acts, loss);
      if (!g.allFinite()) throw Error(ErrorKind::NaNGradient, "non-finite policy gradient");
      if (config.optimizer == "sgd") {
        state.policy.params() -= config.lr * g;
      } else {
        constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
        ++state.updates;
        state.adam_m = b1 * state.adam_m + (1.0 - b1) * g;
        state.adam_v = b2 * state.adam_v + (1.0 - b2) * g.cwiseProduct(g);
        const double c1 = 1.0 - std::pow(b1, state.updates);
        const double c2 = 1.0 - std::pow(b2, state.updates);
        state.policy.params().array() -=
            config.lr * (state.adam_m.array() / c1) / ((state.adam_v.array() / c2).sqrt() + eps);
      }
    }
    ++state.steps_done;

    if (jsonl) {
      for (const ActionRecord& a : acts) {
        nlohmann::json j{{"step", step},          {"action", a.bitstring()}, {"valid", a.valid},
                         {"reward", a.reward},    {"advantage", a.advantage}, {"kl", entry.kl},
                         {"loss", entry.loss},    {"skipped", entry.skipped}};
        *jsonl << j.dump() << '\n';
      }
    }
    if (log) log->push_back(std::move(entry));
  }
}

std::vector<int> infer_select(const PolicyNet& policy, const RowMatrix& states, int k,
                              std::span<const std::string> keys) {
  const Eigen::VectorXd z = policy.logits(states);
  if (k < 0 || k > z.size()) {
    throw Error(ErrorKind::KTooLarge, "cannot select " + std::to_string(k) + " of " + std::to_string(z.size()));
  }
  if (static_cast<Eigen::Index>(keys.size()) != z.size()) throw Error(ErrorKind::LengthMismatch, "one key per state");
  std::vector<int> order(static_cast<std::size_t>(z.size()));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (z[a] != z[b]) return z[a] > z[b];
    return keys[a] < keys[b];
  });
  order.resize(k);
  return order;
}

}  // namespace oodmol
