#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "oodmol/molgraph.hpp"

namespace oodmol {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Ten aliphatic element types followed by six aromatic ones (b c n o p s).
inline constexpr int kAtomTypeCount = 16;

int atom_type(const Atom& atom);

struct EncoderConfig {
  int dim = 32;
  int layers = 3;
};

// Parameter count for the layout
//   embedding           16 x d
//   per layer           W_self d x d, W_msg d x d, b d
//   head                W1 d x 2d, b1 d, w2 d, b2
// i.e. 16d + L(2d^2 + d) + 2d^2 + 2d + 1  (8865 for d=32, L=3).
std::size_t encoder_param_count(const EncoderConfig& config);

// Graph pre-packed for the encoder: atom types, weighted edges (bond order,
// aromatic = 1.5) and the fragment each atom belongs to.
struct MolInput {
  struct Edge {
    int a;
    int b;
    double weight;
  };
  std::vector<int> types;
  std::vector<Edge> edges;
  std::vector<int> fragment_of;
  int fragment_count = 0;
};

MolInput prepare_input(const MolGraph& g);

struct Batch {
  std::vector<const MolInput*> mols;
  std::vector<double> labels;

  bool supervised() const { return !labels.empty(); }
  std::size_t size() const { return mols.size(); }
};

class Encoder {
 public:
  Encoder() = default;
  Encoder(const EncoderConfig& config, Eigen::VectorXd params);

  const EncoderConfig& config() const { return config_; }
  std::size_t param_count() const { return static_cast<std::size_t>(params_.size()); }
  const Eigen::VectorXd& params() const { return params_; }
  Eigen::VectorXd& params() { return params_; }

 private:
  EncoderConfig config_;
  Eigen::VectorXd params_;
};

// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights, zero biases.
Encoder init_encoder(const EncoderConfig& config, std::uint64_t seed);

struct ForwardCache {
  std::vector<int> types;
  std::vector<MolInput::Edge> edges;
  std::vector<int> atom_mol;
  std::vector<double> mol_weight;  // 1 / atoms in molecule
  std::vector<double> sub_weight;  // 1 / (fragments * fragment size)
  std::vector<RowMatrix> h;        // L + 1 node states
  std::vector<RowMatrix> msg;      // L aggregated messages
  RowMatrix pooled;                // B x 2d  [h_mol, h_sub]
  RowMatrix hidden;                // B x d   head activations
};

struct ForwardResult {
  RowMatrix h_mol;
  RowMatrix h_sub;
  Eigen::VectorXd pred;
};

ForwardResult forward(const Encoder& model, const Batch& batch, ForwardCache* cache = nullptr);

// Reverse pass from output adjoints. dh_mol / dh_sub may be empty (treated
// as zero). Throws NonScalarLoss if an adjoint does not match the forward
// output shape.
Eigen::VectorXd backward(const Encoder& model, const ForwardCache& cache, const Eigen::VectorXd& dpred,
                         const RowMatrix& dh_mol = {}, const RowMatrix& dh_sub = {});

// p <- p - lr * g. Throws NaNGradient on non-finite gradients.
Encoder& sgd_step(Encoder& model, const Eigen::VectorXd& grads, double lr);

// Mean squared error and its gradient w.r.t. predictions.
double mse(const Eigen::VectorXd& pred, std::span<const double> labels, Eigen::VectorXd* dpred = nullptr);

}  // namespace oodmol
