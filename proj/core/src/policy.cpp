#include "oodmol/policy.hpp"

#include <cmath>

#include <json.hpp>

#include "oodmol/error.hpp"
#include "oodmol/rng.hpp"

namespace oodmol {
namespace {

struct Offsets {
  std::size_t w1, b1, gain, bias, w2, b2, total;

  explicit Offsets(const PolicyConfig& c) {
    const std::size_t h = c.hidden;
    w1 = 0;
    b1 = h * c.state_dim;
    gain = b1 + h;
    bias = gain + h;
    w2 = bias + h;
    b2 = w2 + h;
    total = b2 + 1;
  }
};

struct Activations {
  RowMatrix pre;   // M x H, before layer norm
  RowMatrix xhat;  // normalized
  Eigen::VectorXd inv_std;
  RowMatrix act;   // tanh output
  Eigen::VectorXd raw;  // unclamped logits
};

Activations run(const PolicyNet& net, const RowMatrix& states) {
  const PolicyConfig& c = net.config();
  if (states.cols() != c.state_dim) {
    throw Error(ErrorKind::DimensionMismatch, "policy expects states of width " + std::to_string(c.state_dim));
  }
  const Offsets o(c);
  const double* p = net.params().data();
  const Eigen::Map<const RowMatrix> w1(p + o.w1, c.hidden, c.state_dim);
  const Eigen::Map<const Eigen::VectorXd> b1(p + o.b1, c.hidden), gain(p + o.gain, c.hidden),
      bias(p + o.bias, c.hidden), w2(p + o.w2, c.hidden);

  Activations a;
  a.pre = states * w1.transpose();
  a.pre.rowwise() += b1.transpose();
  const Eigen::Index m = states.rows();
  a.xhat.resize(m, c.hidden);
  a.inv_std.resize(m);
  for (Eigen::Index r = 0; r < m; ++r) {
    const double mu = a.pre.row(r).mean();
    const double var = (a.pre.row(r).array() - mu).square().mean();
    a.inv_std[r] = 1.0 / std::sqrt(var + c.layer_norm_eps);
    a.xhat.row(r) = (a.pre.row(r).array() - mu) * a.inv_std[r];
  }
  RowMatrix y = a.xhat.array().rowwise() * gain.transpose().array();
  y.rowwise() += bias.transpose();
  a.act = y.array().tanh().matrix();
  a.raw = (a.act * w2).array() + p[o.b2];
  return a;
}

}  // namespace

PolicyNet::PolicyNet(const PolicyConfig& config, Eigen::VectorXd params) : config_(config), params_(std::move(params)) {
  if (static_cast<std::size_t>(params_.size()) != param_count(config)) {
    throw Error(ErrorKind::DimensionMismatch, "policy parameter count mismatch");
  }
}

std::size_t PolicyNet::param_count(const PolicyConfig& config) {
  if (config.state_dim < 1 || config.hidden < 2) throw Error(ErrorKind::BadConfig, "bad policy dimensions");
  return Offsets(config).total;
}

Eigen::VectorXd PolicyNet::logits(const RowMatrix& states) const {
  return run(*this, states).raw.cwiseMax(-kLogitClamp).cwiseMin(kLogitClamp);
}

Eigen::VectorXd PolicyNet::backward(const RowMatrix& states, const Eigen::VectorXd& dlogits) const {
  const Activations a = run(*this, states);
  if (dlogits.size() != states.rows()) throw Error(ErrorKind::NonScalarLoss, "logit adjoint length mismatch");
  const PolicyConfig& c = config_;
  const Offsets o(c);
  const double* p = params_.data();
  const Eigen::Map<const Eigen::VectorXd> gain(p + o.gain, c.hidden), w2(p + o.w2, c.hidden);

  // The clamp passes no gradient once saturated.
  Eigen::VectorXd draw = dlogits;
  for (Eigen::Index i = 0; i < draw.size(); ++i) {
    if (a.raw[i] > kLogitClamp || a.raw[i] < -kLogitClamp) draw[i] = 0.0;
  }
  Eigen::VectorXd g = Eigen::VectorXd::Zero(o.total);
  g[o.b2] = draw.sum();
  Eigen::Map<Eigen::VectorXd>(g.data() + o.w2, c.hidden) = a.act.transpose() * draw;
  const RowMatrix dy = ((draw * w2.transpose()).array() * (1.0 - a.act.array().square())).matrix();
  Eigen::Map<Eigen::VectorXd>(g.data() + o.gain, c.hidden) =
      (dy.array() * a.xhat.array()).colwise().sum().transpose();
  Eigen::Map<Eigen::VectorXd>(g.data() + o.bias, c.hidden) = dy.colwise().sum().transpose();

  const RowMatrix dxhat = dy.array().rowwise() * gain.transpose().array();
  RowMatrix dpre(dxhat.rows(), dxhat.cols());
  for (Eigen::Index r = 0; r < dxhat.rows(); ++r) {
    const double mean_d = dxhat.row(r).mean();
    const double mean_dx = (dxhat.row(r).array() * a.xhat.row(r).array()).mean();
    dpre.row(r) = a.inv_std[r] * (dxhat.row(r).array() - mean_d - a.xhat.row(r).array() * mean_dx);
  }
  Eigen::Map<RowMatrix>(g.data() + o.w1, c.hidden, c.state_dim) = dpre.transpose() * states;
  Eigen::Map<Eigen::VectorXd>(g.data() + o.b1, c.hidden) = dpre.colwise().sum().transpose();
  return g;
}

PolicyNet init_policy(const PolicyConfig& config, std::uint64_t seed, double initial_rate) {
  if (!(initial_rate > 0.0 && initial_rate < 1.0)) {
    throw Error(ErrorKind::BadConfig, "initial selection rate must lie in (0, 1)");
  }
  const Offsets o(config);
  Eigen::VectorXd p = Eigen::VectorXd::Zero(PolicyNet::param_count(config));
  Rng rng(seed);
  const double b_in = 1.0 / std::sqrt(static_cast<double>(config.state_dim));
  for (std::size_t i = o.w1; i < o.b1; ++i) p[i] = rng.uniform(-b_in, b_in);
  for (std::size_t i = o.gain; i < o.bias; ++i) p[i] = 1.0;
  const double b_out = 1.0 / std::sqrt(static_cast<double>(config.hidden));
  for (std::size_t i = o.w2; i < o.b2; ++i) p[i] = rng.uniform(-b_out, b_out);
  p[o.b2] = std::log(initial_rate / (1.0 - initial_rate));
  return PolicyNet(config, std::move(p));
}

Eigen::VectorXd sigmoid(const Eigen::VectorXd& logits) {
  return logits.unaryExpr([](double z) { return 1.0 / (1.0 + std::exp(-z)); });
}

Checkpoint policy_checkpoint(const PolicyNet& net) {
  nlohmann::json h{{"state_dim", net.config().state_dim},
                   {"hidden", net.config().hidden},
                   {"layer_norm_eps", net.config().layer_norm_eps}};
  return {"policy", h.dump(), net.params()};
}

PolicyNet policy_from_checkpoint(const Checkpoint& ckpt) {
  if (ckpt.kind != "policy") throw Error(ErrorKind::Io, "checkpoint holds a " + ckpt.kind + ", not a policy");
  PolicyConfig c;
  try {
    const auto h = nlohmann::json::parse(ckpt.header);
    c.state_dim = h.at("state_dim").get<int>();
    c.hidden = h.at("hidden").get<int>();
    c.layer_norm_eps = h.at("layer_norm_eps").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Io, std::string("bad policy checkpoint header: ") + e.what());
  }
  return PolicyNet(c, ckpt.params);
}

}  // namespace oodmol
