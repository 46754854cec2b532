#include "oodmol/adapt.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <json.hpp>

#include "oodmol/error.hpp"
#include "oodmol/rng.hpp"
#include "oodmol/wasserstein.hpp"

namespace oodmol {
namespace {

RowMatrix centered(const RowMatrix& x) {
  RowMatrix c = x;
  c.rowwise() -= x.colwise().mean();
  return c;
}

Batch make_batch(std::span<const MolInput* const> inputs) {
  Batch b;
  b.mols.assign(inputs.begin(), inputs.end());
  return b;
}

}  // namespace

double coral_term(const RowMatrix& source, const RowMatrix& target, RowMatrix* dsource, RowMatrix* dtarget) {
  if (source.rows() < 2 || target.rows() < 2) {
    throw Error(ErrorKind::BatchTooSmall, "CORAL needs at least two rows per batch (got " +
                                              std::to_string(source.rows()) + " and " +
                                              std::to_string(target.rows()) + ")");
  }
  if (source.cols() != target.cols()) {
    throw Error(ErrorKind::DimensionMismatch, "CORAL feature widths differ");
  }
  const double d = static_cast<double>(source.cols());
  const double ns = static_cast<double>(source.rows());
  const double nt = static_cast<double>(target.rows());
  const RowMatrix xs = centered(source);
  const RowMatrix xt = centered(target);
  const Eigen::MatrixXd diff = xs.transpose() * xs / ns - xt.transpose() * xt / nt;
  const double value = diff.squaredNorm() / (4.0 * d * d);
  if (dsource || dtarget) {
    const Eigen::MatrixXd g = diff / (2.0 * d * d);
    if (dsource) *dsource = (2.0 / ns) * xs * g;
    if (dtarget) *dtarget = (-2.0 / nt) * xt * g;
  }
  return value;
}

AlignmentWeights initial_weights(bool use_mol, bool use_sub) {
  AlignmentWeights w;
  w.use_mol = use_mol;
  w.use_sub = use_sub;
  w.w_mol = use_mol ? 1.0 : 0.0;
  w.w_sub = use_sub ? 1.0 : 0.0;
  return w;
}

AlignmentWeights weight_controller_step(AlignmentWeights w, double reg_loss, double mol_term, double sub_term) {
  if (!std::isfinite(reg_loss) || !std::isfinite(mol_term) || !std::isfinite(sub_term)) {
    throw Error(ErrorKind::NaNGradient, "non-finite loss observation for the weight controller");
  }
  if (!w.primed) {
    w.ema_reg = reg_loss;
    w.ema_mol = mol_term;
    w.ema_sub = sub_term;
    w.primed = true;
  } else {
    w.ema_reg = w.beta_m * w.ema_reg + (1.0 - w.beta_m) * reg_loss;
    w.ema_mol = w.beta_m * w.ema_mol + (1.0 - w.beta_m) * mol_term;
    w.ema_sub = w.beta_m * w.ema_sub + (1.0 - w.beta_m) * sub_term;
  }
  if (w.ema_reg < w.tau_reg) w.w_reg = std::max(w.w_reg_min, w.reg_decay * w.w_reg);

  auto clip = [&](double v) { return std::clamp(v, w.w_align_min, w.w_align_max); };
  // Inverse-magnitude rebalancing: the smaller term gets weight 1.
  auto inverse = [&](double c, double ema) { return ema > 0.0 ? clip(c / ema) : w.w_align_max; };
  if (w.use_mol && w.use_sub) {
    const double c = std::min(w.ema_mol, w.ema_sub);
    w.w_mol = inverse(c, w.ema_mol);
    w.w_sub = inverse(c, w.ema_sub);
  } else {
    w.w_mol = w.use_mol ? w.w_align_max : 0.0;
    w.w_sub = w.use_sub ? w.w_align_max : 0.0;
  }
  return w;
}

void SourceAssembly::validate() const {
  if (groups.empty()) throw Error(ErrorKind::EmptySet, "source assembly has no groups");
  if (gamma.size() != groups.size()) {
    throw Error(ErrorKind::LengthMismatch, "one transfer weight per source group is required");
  }
  double sum = 0.0;
  for (std::size_t k = 0; k < groups.size(); ++k) {
    if (groups[k].size() == 0) throw Error(ErrorKind::EmptySet, "empty source group");
    if (groups[k].labels.size() != groups[k].inputs.size()) {
      throw Error(ErrorKind::LengthMismatch, "source group labels do not match its molecules");
    }
    if (!(gamma[k] >= 0.0)) throw Error(ErrorKind::BadConfig, "negative transfer weight");
    sum += gamma[k];
  }
  if (std::abs(sum - 1.0) > 1e-9) throw Error(ErrorKind::BadConfig, "transfer weights must sum to 1");
}

DaTerms da_loss(const std::vector<DomainFeatures>& sources, std::span<const double> gamma,
                const DomainFeatures& target, const AlignmentWeights& w, std::vector<DomainFeatures>* grads) {
  if (gamma.size() != sources.size()) throw Error(ErrorKind::LengthMismatch, "gamma and source counts differ");
  DaTerms out;
  if (grads) {
    grads->assign(sources.size() + 1, {});
    auto& t = grads->back();
    t.h_mol = RowMatrix::Zero(target.h_mol.rows(), target.h_mol.cols());
    t.h_sub = RowMatrix::Zero(target.h_sub.rows(), target.h_sub.cols());
  }
  RowMatrix ds, dt;
  for (std::size_t k = 0; k < sources.size(); ++k) {
    const double gk = gamma[k];
    const double mol = coral_term(sources[k].h_mol, target.h_mol, grads ? &ds : nullptr, grads ? &dt : nullptr);
    out.mol_term += gk * mol;
    if (grads) {
      (*grads)[k].h_mol = (w.w_mol * gk) * ds;
      grads->back().h_mol += (w.w_mol * gk) * dt;
    }
    const double sub = coral_term(sources[k].h_sub, target.h_sub, grads ? &ds : nullptr, grads ? &dt : nullptr);
    out.sub_term += gk * sub;
    if (grads) {
      (*grads)[k].h_sub = (w.w_sub * gk) * ds;
      grads->back().h_sub += (w.w_sub * gk) * dt;
    }
  }
  out.value = w.w_mol * out.mol_term + w.w_sub * out.sub_term;
  return out;
}

double total_loss(double reg_loss, double da_value, const AlignmentWeights& w, int epoch, int e_warm) {
  if (epoch < e_warm) return w.w_reg * reg_loss;
  return w.w_reg * reg_loss + da_value;
}

StepLoss composite_loss(const Encoder& model, const std::vector<LabeledSet>& groups, std::span<const double> gamma,
                        const UnlabeledSet& target, const AlignmentWeights& w, int epoch, int e_warm,
                        Eigen::VectorXd* grad) {
  if (gamma.size() != groups.size()) throw Error(ErrorKind::LengthMismatch, "gamma and group counts differ");
  Batch src;
  std::vector<double> labels;
  std::vector<Eigen::Index> start;
  for (const LabeledSet& g : groups) {
    start.push_back(static_cast<Eigen::Index>(src.mols.size()));
    src.mols.insert(src.mols.end(), g.inputs.begin(), g.inputs.end());
    labels.insert(labels.end(), g.labels.begin(), g.labels.end());
  }
  if (src.mols.empty()) throw Error(ErrorKind::EmptySet, "no source molecules in the minibatch");

  ForwardCache src_cache;
  const ForwardResult fs = forward(model, src, grad ? &src_cache : nullptr);
  StepLoss out;
  Eigen::VectorXd dpred;
  out.reg = mse(fs.pred, labels, grad ? &dpred : nullptr);

  const bool align = (w.use_mol || w.use_sub) && target.size() >= 2;
  const bool active = align && epoch >= e_warm;
  std::vector<int> used;
  if (align) {
    std::vector<DomainFeatures> feats;
    std::vector<double> gam;
    for (std::size_t k = 0; k < groups.size(); ++k) {
      if (groups[k].size() < 2) continue;
      const Eigen::Index n = static_cast<Eigen::Index>(groups[k].size());
      feats.push_back({fs.h_mol.middleRows(start[k], n), fs.h_sub.middleRows(start[k], n)});
      gam.push_back(gamma[k]);
      used.push_back(static_cast<int>(k));
    }
    ForwardCache tgt_cache;
    const ForwardResult ft = forward(model, make_batch(target.inputs), (grad && active) ? &tgt_cache : nullptr);
    const DomainFeatures tf{ft.h_mol, ft.h_sub};
    std::vector<DomainFeatures> adj;
    out.da = da_loss(feats, gam, tf, w, (grad && active) ? &adj : nullptr);
    if (grad && active) {
      RowMatrix dmol = RowMatrix::Zero(fs.h_mol.rows(), fs.h_mol.cols());
      RowMatrix dsub = RowMatrix::Zero(fs.h_sub.rows(), fs.h_sub.cols());
      for (std::size_t u = 0; u < used.size(); ++u) {
        const Eigen::Index n = static_cast<Eigen::Index>(groups[used[u]].size());
        dmol.middleRows(start[used[u]], n) = adj[u].h_mol;
        dsub.middleRows(start[used[u]], n) = adj[u].h_sub;
      }
      *grad = backward(model, src_cache, w.w_reg * dpred, dmol, dsub);
      *grad += backward(model, tgt_cache, Eigen::VectorXd::Zero(ft.pred.size()), adj.back().h_mol, adj.back().h_sub);
    }
  }
  if (grad && !active) *grad = backward(model, src_cache, w.w_reg * dpred);
  out.total = total_loss(out.reg, out.da.value, w, epoch, e_warm);
  return out;
}

std::string AdaptHistory::to_jsonl() const {
  std::ostringstream os;
  for (const EpochRecord& r : epochs) {
    nlohmann::json j{{"epoch", r.epoch},       {"L_reg", r.reg_loss}, {"mol_term", r.mol_term},
                     {"sub_term", r.sub_term}, {"total", r.total},    {"w_reg", r.w_reg},
                     {"w_mol", r.w_mol},       {"w_sub", r.w_sub},    {"collapse_rank", r.collapse_rank}};
    os << j.dump() << '\n';
  }
  return os.str();
}

AdaptHistory adapt_run(Encoder& model, const SourceAssembly& assembly, const UnlabeledSet& target,
                       const AdaptConfig& config) {
  AdaptHistory history;
  if (config.epochs <= 0) return history;
  assembly.validate();
  if (config.batch_size < 2) throw Error(ErrorKind::BadConfig, "batch_size must be at least 2");
  const bool align = config.use_mol || config.use_sub;
  if (align && target.size() < 2) throw Error(ErrorKind::BatchTooSmall, "alignment needs >= 2 target molecules");

  if (align) history.collapse_before = collapse_rank(embed_mol(model, target.inputs));

  std::vector<std::pair<int, int>> items;
  for (std::size_t k = 0; k < assembly.groups.size(); ++k) {
    for (std::size_t i = 0; i < assembly.groups[k].size(); ++i) items.emplace_back(int(k), int(i));
  }
  std::vector<int> target_order(target.size());
  for (std::size_t i = 0; i < target_order.size(); ++i) target_order[i] = static_cast<int>(i);
  std::size_t target_cursor = target_order.size();

  AlignmentWeights w = initial_weights(config.use_mol, config.use_sub);
  w.beta_m = config.beta_m;
  w.tau_reg = config.tau_reg;
  const std::size_t k_groups = assembly.groups.size();
  const std::size_t tb = std::min<std::size_t>(config.batch_size, target.size());

  for (int e = 0; e < config.epochs; ++e) {
    const int epoch = config.epoch_offset + e;
    // Reshuffled from the canonical order every epoch.
    Rng rng(derive_seed(config.seed, 0xada7, static_cast<std::uint64_t>(epoch)));
    std::vector<std::pair<int, int>> order = items;
    rng.shuffle(order);

    double sum_reg = 0.0, sum_mol = 0.0, sum_sub = 0.0, sum_total = 0.0;
    int steps = 0;
    int last_rank = 0;
    for (std::size_t at = 0; at < order.size(); at += config.batch_size) {
      const std::size_t end = std::min(order.size(), at + config.batch_size);
      std::vector<LabeledSet> groups(k_groups);
      for (std::size_t i = at; i < end; ++i) {
        const auto [k, idx] = order[i];
        groups[k].inputs.push_back(assembly.groups[k].inputs[idx]);
        groups[k].labels.push_back(assembly.groups[k].labels[idx]);
      }
        std::vector<LabeledSet> present;
      std::vector<double> gamma;
      for (std::size_t k = 0; k < k_groups; ++k) {
        if (groups[k].size() == 0) continue;
        present.push_back(std::move(groups[k]));
        gamma.push_back(assembly.gamma[k]);
      }

      UnlabeledSet tbatch;
      if (align) {
        for (std::size_t i = 0; i < tb; ++i) {
          if (target_cursor == target_order.size()) {
            rng.shuffle(target_order);
            target_cursor = 0;
          }
          tbatch.inputs.push_back(target.inputs[target_order[target_cursor++]]);
        }
      }
      Eigen::VectorXd grad;
      const StepLoss loss = composite_loss(model, present, gamma, tbatch, w, epoch, config.e_warm, &grad);
      sgd_step(model, grad, config.lr);
      sum_reg += loss.reg;
      sum_mol += loss.da.mol_term;
      sum_sub += loss.da.sub_term;
      sum_total += loss.total;
      ++steps;
      if (align && at + config.batch_size >= order.size()) {
        last_rank = collapse_rank(embed_mol(model, tbatch.inputs));
      }
    }
    w = weight_controller_step(w, sum_reg / steps, sum_mol / steps, sum_sub / steps);
    history.epochs.push_back({epoch, sum_reg / steps, sum_mol / steps, sum_sub / steps, sum_total / steps, w.w_reg,
                              w.w_mol, w.w_sub, last_rank});
  }
  if (align) history.collapse_after = collapse_rank(embed_mol(model, target.inputs));
  return history;
}

Eigen::VectorXd predict(const Encoder& model, std::span<const MolInput* const> inputs) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(inputs.size()));
  constexpr std::size_t kChunk = 256;
  for (std::size_t at = 0; at < inputs.size(); at += kChunk) {
    const std::size_t n = std::min(kChunk, inputs.size() - at);
    out.segment(static_cast<Eigen::Index>(at), static_cast<Eigen::Index>(n)) =
        forward(model, make_batch(inputs.subspan(at, n))).pred;
  }
  return out;
}

RowMatrix embed_mol(const Encoder& model, std::span<const MolInput* const> inputs) {
  RowMatrix out(static_cast<Eigen::Index>(inputs.size()), model.config().dim);
  constexpr std::size_t kChunk = 256;
  for (std::size_t at = 0; at < inputs.size(); at += kChunk) {
    const std::size_t n = std::min(kChunk, inputs.size() - at);
    out.middleRows(static_cast<Eigen::Index>(at), static_cast<Eigen::Index>(n)) =
        forward(model, make_batch(inputs.subspan(at, n))).h_mol;
  }
  return out;
}

double evaluate_mae(const Encoder& model, const LabeledSet& set) {
  if (set.size() == 0) throw Error(ErrorKind::EmptySet, "MAE over an empty set");
  const Eigen::VectorXd pred = predict(model, set.inputs);
  double sum = 0.0;
  for (std::size_t i = 0; i < set.size(); ++i) sum += std::abs(pred[static_cast<Eigen::Index>(i)] - set.labels[i]);
  return sum / static_cast<double>(set.size());
}

}  // namespace oodmol
