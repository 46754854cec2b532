#pragma once

#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "oodmol/adapt.hpp"
#include "oodmol/grpo.hpp"

namespace oodmol {

// Holds labels that must stay hidden until an adaptation finishes. Every
// access goes through reveal(); an observer sees the event stream
// ("adapt_begin", "adapt_end", "reveal").
class LabelVault {
 public:
  using Observer = std::function<void(const std::string&)>;

  LabelVault() = default;
  explicit LabelVault(std::vector<double> labels) : labels_(std::move(labels)) {}

  void set_observer(Observer obs) { observer_ = std::move(obs); }
  void notify(const std::string& event) const;
  const std::vector<double>& reveal() const;
  std::size_t size() const { return labels_.size(); }

 private:
  std::vector<double> labels_;
  Observer observer_;
  mutable std::mutex mutex_;
};

struct Candidate {
  std::string key;
  LabeledSet data;
  double s_rank = 0.0;
};

struct ProxyEnvironmentConfig {
  AdaptConfig rollout;  // epochs = E_proxy, epoch_offset = E_warm
  std::uint64_t base_seed = 42;
};

class ProxyEnvironment : public RewardOracle {
 public:
  // `proxy_inputs` are the proxy molecules (label-stripped for adaptation);
  // their labels live in `proxy_labels`. MAE_base is computed here, once.
  ProxyEnvironment(Encoder warm, std::vector<Candidate> candidates, UnlabeledSet proxy_inputs,
                   std::shared_ptr<LabelVault> proxy_labels, ProxyEnvironmentConfig config);

  std::optional<double> reward(const std::vector<std::uint8_t>& action, std::uint64_t seed) const override;

  // Adaptation then proxy MAE for an explicit selection; `align` off runs the
  // merged-source recipe.
  double rollout_mae(const std::vector<int>& selected, std::uint64_t seed, bool align) const;

  double mae_base() const { return mae_base_; }
  std::size_t pool_size() const { return candidates_.size(); }
  const std::vector<Candidate>& candidates() const { return candidates_; }
  const Encoder& warm_model() const { return warm_; }

 private:
  Encoder warm_;
  std::vector<Candidate> candidates_;
  UnlabeledSet proxy_inputs_;
  std::shared_ptr<LabelVault> vault_;
  ProxyEnvironmentConfig config_;
  double mae_base_ = 0.0;
};

// gamma_k proportional to s_rank over the selection (uniform when all zero).
std::vector<double> transfer_weights(std::span<const double> s_ranks);

}  // namespace oodmol
