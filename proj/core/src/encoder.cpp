#include "oodmol/encoder.hpp"

#include <cmath>

#include "oodmol/error.hpp"
#include "oodmol/rng.hpp"

namespace oodmol {
namespace {

using ConstMap = Eigen::Map<const RowMatrix>;
using ConstVec = Eigen::Map<const Eigen::VectorXd>;

struct Layout {
  struct LayerOffsets {
    std::size_t w_self, w_msg, bias;
  };
  std::size_t embedding = 0;
  std::vector<LayerOffsets> layers;
  std::size_t w1 = 0, b1 = 0, w2 = 0, b2 = 0, total = 0;

  explicit Layout(const EncoderConfig& c) {
    const std::size_t d = c.dim;
    std::size_t at = kAtomTypeCount * d;
    for (int l = 0; l < c.layers; ++l) {
      layers.push_back({at, at + d * d, at + 2 * d * d});
      at += 2 * d * d + d;
    }
    w1 = at;
    b1 = w1 + 2 * d * d;
    w2 = b1 + d;
    b2 = w2 + d;
    total = b2 + 1;
  }
};

void check_config(const EncoderConfig& c) {
  if (c.dim < 2 || c.layers < 1) {
    throw Error(ErrorKind::BadConfig, "encoder needs dim >= 2 and layers >= 1 (got dim=" + std::to_string(c.dim) +
                                          ", layers=" + std::to_string(c.layers) + ")");
  }
}

}  // namespace

int atom_type(const Atom& atom) {
  const int e = static_cast<int>(atom.element);
  if (!atom.aromatic) return e;
  switch (atom.element) {
    case Element::B: return 10;
    case Element::C: return 11;
    case Element::N: return 12;
    case Element::O: return 13;
    case Element::P: return 14;
    case Element::S: return 15;
    default: return e;
  }
}

std::size_t encoder_param_count(const EncoderConfig& config) {
  check_config(config);
  return Layout(config).total;
}

MolInput prepare_input(const MolGraph& g) {
  MolInput in;
  for (const Atom& a : g.atoms()) in.types.push_back(atom_type(a));
  for (const Bond& b : g.bonds()) in.edges.push_back({b.begin, b.end, bond_order_value(b.order)});
  in.fragment_of.assign(g.atom_count(), 0);
  const auto frags = fragment(g);
  for (std::size_t f = 0; f < frags.size(); ++f) {
    for (int a : frags[f].atoms) in.fragment_of[a] = static_cast<int>(f);
  }
  in.fragment_count = static_cast<int>(frags.size());
  return in;
}

Encoder::Encoder(const EncoderConfig& config, Eigen::VectorXd params) : config_(config), params_(std::move(params)) {
  if (static_cast<std::size_t>(params_.size()) != encoder_param_count(config)) {
    throw Error(ErrorKind::DimensionMismatch, "encoder expects " + std::to_string(encoder_param_count(config)) +
                                                  " parameters, got " + std::to_string(params_.size()));
  }
}

Encoder init_encoder(const EncoderConfig& config, std::uint64_t seed) {
  check_config(config);
  const Layout lay(config);
  const std::size_t d = config.dim;
  Eigen::VectorXd p = Eigen::VectorXd::Zero(lay.total);
  Rng rng(seed);
  auto fill = [&](std::size_t offset, std::size_t count, double fan_in) {
    const double bound = 1.0 / std::sqrt(fan_in);
    for (std::size_t i = 0; i < count; ++i) p[offset + i] = rng.uniform(-bound, bound);
  };
  fill(lay.embedding, kAtomTypeCount * d, 1.0);
  for (const auto& l : lay.layers) {
    fill(l.w_self, d * d, static_cast<double>(d));
    fill(l.w_msg, d * d, static_cast<double>(d));
  }
  fill(lay.w1, 2 * d * d, 2.0 * d);
  fill(lay.w2, d, static_cast<double>(d));
  return Encoder(config, std::move(p));
}

ForwardResult forward(const Encoder& model, const Batch& batch, ForwardCache* cache) {
  const EncoderConfig& cfg = model.config();
  const Layout lay(cfg);
  const int d = cfg.dim;
  const double* p = model.params().data();
  const int nmol = static_cast<int>(batch.size());

  ForwardCache local;
  ForwardCache& c = cache ? *cache : local;
  c = ForwardCache{};
  for (int m = 0; m < nmol; ++m) {
    const MolInput& in = *batch.mols[m];
    const int base = static_cast<int>(c.types.size());
    const int n = static_cast<int>(in.types.size());
    std::vector<int> frag_size(in.fragment_count, 0);
    for (int f : in.fragment_of) ++frag_size[f];
    for (int a = 0; a < n; ++a) {
      c.types.push_back(in.types[a]);
      c.atom_mol.push_back(m);
      c.mol_weight.push_back(1.0 / n);
      c.sub_weight.push_back(1.0 / (static_cast<double>(in.fragment_count) * frag_size[in.fragment_of[a]]));
    }
    for (const auto& e : in.edges) c.edges.push_back({e.a + base, e.b + base, e.weight});
  }
  const int natoms = static_cast<int>(c.types.size());

  const ConstMap emb(p + lay.embedding, kAtomTypeCount, d);
  RowMatrix h(natoms, d);
  for (int a = 0; a < natoms; ++a) h.row(a) = emb.row(c.types[a]);
  c.h.push_back(h);

  for (const auto& l : lay.layers) {
    const ConstMap ws(p + l.w_self, d, d);
    const ConstMap wm(p + l.w_msg, d, d);
    const ConstVec b(p + l.bias, d);
    const RowMatrix& cur = c.h.back();
    RowMatrix msg = RowMatrix::Zero(natoms, d);
    for (const auto& e : c.edges) {
      msg.row(e.a) += e.weight * cur.row(e.b);
      msg.row(e.b) += e.weight * cur.row(e.a);
    }
    RowMatrix z = cur * ws.transpose() + msg * wm.transpose();
    z.rowwise() += b.transpose();
    c.msg.push_back(std::move(msg));
    c.h.push_back(z.array().tanh().matrix());
  }

  const RowMatrix& top = c.h.back();
  c.pooled = RowMatrix::Zero(nmol, 2 * d);
  for (int a = 0; a < natoms; ++a) {
    c.pooled.row(c.atom_mol[a]).head(d) += c.mol_weight[a] * top.row(a);
    c.pooled.row(c.atom_mol[a]).tail(d) += c.sub_weight[a] * top.row(a);
  }
  const ConstMap w1(p + lay.w1, d, 2 * d);
  const ConstVec b1(p + lay.b1, d);
  const ConstVec w2(p + lay.w2, d);
  RowMatrix pre = c.pooled * w1.transpose();
  pre.rowwise() += b1.transpose();
  c.hidden = pre.array().tanh().matrix();

  ForwardResult out;
  out.h_mol = c.pooled.leftCols(d);
  out.h_sub = c.pooled.rightCols(d);
  out.pred = (c.hidden * w2).array() + p[lay.b2];
  return out;
}

Eigen::VectorXd backward(const Encoder& model, const ForwardCache& c, const Eigen::VectorXd& dpred,
                         const RowMatrix& dh_mol, const RowMatrix& dh_sub) {
  const EncoderConfig& cfg = model.config();
  const Layout lay(cfg);
  const int d = cfg.dim;
  const double* p = model.params().data();
  const Eigen::Index nmol = c.pooled.rows();
  const int natoms = static_cast<int>(c.types.size());

  auto shape_ok = [&](const RowMatrix& m) { return m.size() == 0 || (m.rows() == nmol && m.cols() == d); };
  if (dpred.size() != nmol || !shape_ok(dh_mol) || !shape_ok(dh_sub)) {
    throw Error(ErrorKind::NonScalarLoss, "output adjoints do not match a scalar loss over a batch of " +
                                              std::to_string(nmol));
  }

  Eigen::VectorXd g = Eigen::VectorXd::Zero(lay.total);
  const ConstMap w1(p + lay.w1, d, 2 * d);
  const ConstVec w2(p + lay.w2, d);

  g[lay.b2] = dpred.sum();
  Eigen::Map<Eigen::VectorXd>(g.data() + lay.w2, d) = c.hidden.transpose() * dpred;
  const RowMatrix dpre = ((dpred * w2.transpose()).array() * (1.0 - c.hidden.array().square())).matrix();
  Eigen::Map<RowMatrix>(g.data() + lay.w1, d, 2 * d) = dpre.transpose() * c.pooled;
  Eigen::Map<Eigen::VectorXd>(g.data() + lay.b1, d) = dpre.colwise().sum().transpose();
  RowMatrix dpooled = dpre * w1;
  if (dh_mol.size()) dpooled.leftCols(d) += dh_mol;
  if (dh_sub.size()) dpooled.rightCols(d) += dh_sub;

  RowMatrix dh(natoms, d);
  for (int a = 0; a < natoms; ++a) {
    dh.row(a) = c.mol_weight[a] * dpooled.row(c.atom_mol[a]).head(d) +
                c.sub_weight[a] * dpooled.row(c.atom_mol[a]).tail(d);
  }

  for (int l = cfg.layers - 1; l >= 0; --l) {
    const auto& off = lay.layers[l];
    const ConstMap ws(p + off.w_self, d, d);
    const ConstMap wm(p + off.w_msg, d, d);
    const RowMatrix dz = (dh.array() * (1.0 - c.h[l + 1].array().square())).matrix();
    Eigen::Map<RowMatrix>(g.data() + off.w_self, d, d) = dz.transpose() * c.h[l];
    Eigen::Map<RowMatrix>(g.data() + off.w_msg, d, d) = dz.transpose() * c.msg[l];
    Eigen::Map<Eigen::VectorXd>(g.data() + off.bias, d) = dz.colwise().sum().transpose();
    const RowMatrix dmsg = dz * wm;
    dh = dz * ws;
    for (const auto& e : c.edges) {
      dh.row(e.b) += e.weight * dmsg.row(e.a);
      dh.row(e.a) += e.weight * dmsg.row(e.b);
    }
  }
  Eigen::Map<RowMatrix> demb(g.data() + lay.embedding, kAtomTypeCount, d);
  for (int a = 0; a < natoms; ++a) demb.row(c.types[a]) += dh.row(a);
  return g;
}

Encoder& sgd_step(Encoder& model, const Eigen::VectorXd& grads, double lr) {
  if (grads.size() != model.params().size()) {
    throw Error(ErrorKind::DimensionMismatch, "gradient length does not match the parameter vector");
  }
  if (!grads.allFinite()) throw Error(ErrorKind::NaNGradient, "non-finite gradient entry");
  model.params() -= lr * grads;
  return model;
}

double mse(const Eigen::VectorXd& pred, std::span<const double> labels, Eigen::VectorXd* dpred) {
  if (static_cast<std::size_t>(pred.size()) != labels.size()) {
    throw Error(ErrorKind::LengthMismatch, "prediction and label counts differ");
  }
  if (labels.empty()) throw Error(ErrorKind::EmptySet, "mse over an empty batch");
  const Eigen::VectorXd r = pred - ConstVec(labels.data(), labels.size());
  if (dpred) *dpred = (2.0 / labels.size()) * r;
  return r.squaredNorm() / labels.size();
}

}  // namespace oodmol
