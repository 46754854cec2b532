#pragma once

#include <cstdint>
#include <string>

#include <Eigen/Dense>

#include "oodmol/checkpoint.hpp"
#include "oodmol/encoder.hpp"

namespace oodmol {

inline constexpr double kLogitClamp = 15.0;

struct PolicyConfig {
  int state_dim = 258;
  int hidden = 64;
  double layer_norm_eps = 1e-5;
};

// states (M x state_dim) -> affine -> layer norm (gain, bias) -> tanh ->
// affine -> logit, clamped to +-15. Parameters are one flat vector:
//   W1 hidden x state_dim, b1, ln_gain, ln_bias, w2 (hidden each), b2.
class PolicyNet {
 public:
  PolicyNet() = default;
  PolicyNet(const PolicyConfig& config, Eigen::VectorXd params);

  static std::size_t param_count(const PolicyConfig& config);

  const PolicyConfig& config() const { return config_; }
  const Eigen::VectorXd& params() const { return params_; }
  Eigen::VectorXd& params() { return params_; }

  Eigen::VectorXd logits(const RowMatrix& states) const;
  // Gradient of sum_j dlogits_j * logit_j with respect to the parameters.
  Eigen::VectorXd backward(const RowMatrix& states, const Eigen::VectorXd& dlogits) const;

 private:
  PolicyConfig config_;
  Eigen::VectorXd params_;
};

// Fan-in uniform weights, unit gain; the output bias starts at
// logit(initial_rate) so the expected selection size is initial_rate * M.
PolicyNet init_policy(const PolicyConfig& config, std::uint64_t seed, double initial_rate = 0.5);

Eigen::VectorXd sigmoid(const Eigen::VectorXd& logits);

Checkpoint policy_checkpoint(const PolicyNet& net);
PolicyNet policy_from_checkpoint(const Checkpoint& ckpt);

}  // namespace oodmol
