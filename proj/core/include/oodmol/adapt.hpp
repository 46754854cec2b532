#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "oodmol/encoder.hpp"

namespace oodmol {

struct LabeledSet {
  std::vector<const MolInput*> inputs;
  std::vector<double> labels;

  std::size_t size() const { return inputs.size(); }
};

// Target-side data never carries labels.
struct UnlabeledSet {
  std::vector<const MolInput*> inputs;

  std::size_t size() const { return inputs.size(); }
};

// Deep CORAL: ||C_s - C_t||_F^2 / (4 d^2), population covariances of the
// mean-centred batches. Gradients are written when the pointers are set.
double coral_term(const RowMatrix& source, const RowMatrix& target, RowMatrix* dsource = nullptr,
                  RowMatrix* dtarget = nullptr);

struct AlignmentWeights {
  double w_reg = 1.0;
  double w_mol = 1.0;
  double w_sub = 1.0;
  double ema_reg = 0.0;
  double ema_mol = 0.0;
  double ema_sub = 0.0;
  bool primed = false;
  double beta_m = 0.9;
  double tau_reg = 0.05;
  double reg_decay = 0.95;
  double w_reg_min = 0.1;
  double w_align_min = 0.01;
  double w_align_max = 1.0;
  // Ablation switches; a disabled scale keeps weight 0.
  bool use_mol = true;
  bool use_sub = true;
};

AlignmentWeights initial_weights(bool use_mol = true, bool use_sub = true);

AlignmentWeights weight_controller_step(AlignmentWeights w, double reg_loss, double mol_term, double sub_term);

struct SourceAssembly {
  std::vector<LabeledSet> groups;
  std::vector<double> gamma;

  // Throws EmptySet / BadConfig when groups are empty or gamma is not a
  // distribution over them.
  void validate() const;
};

struct DomainFeatures {
  RowMatrix h_mol;
  RowMatrix h_sub;
};

struct DaTerms {
  double value = 0.0;
  double mol_term = 0.0;  // sum_k gamma_k coral(mol)
  double sub_term = 0.0;  // sum_k gamma_k coral(sub)
};

// w_mol sum_k gamma_k coral(mol_k, mol_t) + w_sub sum_k gamma_k coral(sub_k, sub_t).
// With `grads` set, fills one DomainFeatures of adjoints per source plus one
// for the target (last entry).
DaTerms da_loss(const std::vector<DomainFeatures>& sources, std::span<const double> gamma,
                const DomainFeatures& target, const AlignmentWeights& w,
                std::vector<DomainFeatures>* grads = nullptr);

double total_loss(double reg_loss, double da_value, const AlignmentWeights& w, int epoch, int e_warm);

struct StepLoss {
  double total = 0.0;
  double reg = 0.0;
  DaTerms da;
};

// Regression + weighted alignment loss on one minibatch: `groups` are per-source labeled batches
// (CORAL terms skip groups with fewer than two molecules), `target` an
// unlabeled batch. Returns the loss and, if `grad` is set, its exact gradient.
StepLoss composite_loss(const Encoder& model, const std::vector<LabeledSet>& groups, std::span<const double> gamma,
                        const UnlabeledSet& target, const AlignmentWeights& w, int epoch, int e_warm,
                        Eigen::VectorXd* grad = nullptr);

struct AdaptConfig {
  int epochs = 5;
  int batch_size = 64;
  double lr = 3e-4;
  int e_warm = 10;
  // Epoch index of the first epoch, so a run can start past warm-up.
  int epoch_offset = 0;
  bool use_mol = true;
  bool use_sub = true;
  double beta_m = 0.9;
  double tau_reg = 0.05;
  std::uint64_t seed = 42;
};

struct EpochRecord {
  int epoch = 0;
  double reg_loss = 0.0;
  double mol_term = 0.0;
  double sub_term = 0.0;
  double total = 0.0;
  double w_reg = 0.0;
  double w_mol = 0.0;
  double w_sub = 0.0;
  int collapse_rank = 0;
};

struct AdaptHistory {
  std::vector<EpochRecord> epochs;
  int collapse_before = 0;
  int collapse_after = 0;

  std::string to_jsonl() const;
};

// Runs `config.epochs` epochs of seeded minibatch SGD on the composite objective,
// stepping the weight controller once per epoch. The target set may be empty
// only when both alignment scales are disabled.
AdaptHistory adapt_run(Encoder& model, const SourceAssembly& assembly, const UnlabeledSet& target,
                       const AdaptConfig& config);

// Mean absolute error; throws EmptySet.
double evaluate_mae(const Encoder& model, const LabeledSet& set);

Eigen::VectorXd predict(const Encoder& model, std::span<const MolInput* const> inputs);
RowMatrix embed_mol(const Encoder& model, std::span<const MolInput* const> inputs);

}  // namespace oodmol
