#include "oodmol/environment.hpp"

#include <cmath>
#include <numeric>

#include "oodmol/error.hpp"

namespace oodmol {

void LabelVault::notify(const std::string& event) const {
  std::lock_guard lock(mutex_);
  if (observer_) observer_(event);
}

const std::vector<double>& LabelVault::reveal() const {
  notify("reveal");
  return labels_;
}

std::vector<double> transfer_weights(std::span<const double> s_ranks) {
  if (s_ranks.empty()) throw Error(ErrorKind::EmptySet, "no sources selected");
  double sum = 0.0;
  for (double s : s_ranks) {
    if (!(s >= 0.0)) throw Error(ErrorKind::BadConfig, "negative s_rank");
    sum += s;
  }
  std::vector<double> g(s_ranks.size(), 1.0 / static_cast<double>(s_ranks.size()));
  if (sum > 0.0) {
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = s_ranks[i] / sum;
  }
  return g;
}

ProxyEnvironment::ProxyEnvironment(Encoder warm, std::vector<Candidate> candidates, UnlabeledSet proxy_inputs,
                                   std::shared_ptr<LabelVault> proxy_labels, ProxyEnvironmentConfig config)
    : warm_(std::move(warm)),
      candidates_(std::move(candidates)),
      proxy_inputs_(std::move(proxy_inputs)),
      vault_(std::move(proxy_labels)),
      config_(std::move(config)) {
  if (candidates_.empty()) throw Error(ErrorKind::PoolTooSmall, "empty candidate pool");
  if (!vault_ || vault_->size() != proxy_inputs_.size() || proxy_inputs_.size() == 0) {
    throw Error(ErrorKind::LengthMismatch, "proxy labels must match the proxy molecules");
  }
  std::vector<int> all(candidates_.size());
  std::iota(all.begin(), all.end(), 0);
  mae_base_ = rollout_mae(all, config_.base_seed, false);
}

double ProxyEnvironment::rollout_mae(const std::vector<int>& selected, std::uint64_t seed, bool align) const {
  SourceAssembly assembly;
  std::vector<double> ranks;
  for (int j : selected) {
    assembly.groups.push_back(candidates_.at(j).data);
    ranks.push_back(candidates_[j].s_rank);
  }
  assembly.gamma = transfer_weights(ranks);

  AdaptConfig cfg = config_.rollout;
  cfg.seed = seed;
  cfg.use_mol = align && cfg.use_mol;
  cfg.use_sub = align && cfg.use_sub;

  Encoder model = warm_;
  vault_->notify("adapt_begin");
  adapt_run(model, assembly, proxy_inputs_, cfg);
  vault_->notify("adapt_end");

  const std::vector<double>& labels = vault_->reveal();
  const Eigen::VectorXd pred = predict(model, proxy_inputs_.inputs);
  double sum = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) sum += std::abs(pred[static_cast<Eigen::Index>(i)] - labels[i]);
  return sum / static_cast<double>(labels.size());
}

std::optional<double> ProxyEnvironment::reward(const std::vector<std::uint8_t>& action, std::uint64_t seed) const {
  if (action.size() != candidates_.size()) return std::nullopt;
  std::vector<int> selected;
  for (std::size_t j = 0; j < action.size(); ++j) {
    if (action[j]) selected.push_back(static_cast<int>(j));
  }
  if (selected.empty()) return std::nullopt;
  try {
    return mae_base_ - rollout_mae(selected, seed, true);
  } catch (const Error&) {
    return std::nullopt;
  }
}

}  // namespace oodmol
