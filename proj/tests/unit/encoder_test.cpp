#include <numeric>

#include <gtest/gtest.h>

#include "gradcheck.hpp"
#include "oodmol/checkpoint.hpp"
#include "oodmol/encoder.hpp"
#include "oodmol/error.hpp"
#include "oodmol/rng.hpp"

using namespace oodmol;
using oodmol::fixtures::GradCheckData;

TEST(Encoder, ParamCount) {
  // embedding 16*32, per layer 2*32*32 + 32, head 32*64 + 32 + 32 + 1
  const std::size_t by_hand = 16 * 32 + 3 * (2 * 32 * 32 + 32) + 32 * 64 + 32 + 32 + 1;
  EXPECT_EQ(by_hand, 8865u);
  EXPECT_EQ(encoder_param_count({32, 3}), by_hand);
  EXPECT_EQ(init_encoder({32, 3}, 1).param_count(), by_hand);
  EXPECT_EQ(encoder_param_count({4, 1}), 16u * 4 + (2 * 16 + 4) + 2 * 16 + 2 * 4 + 1);
}

TEST(Encoder, InitDeterminism) {
  EXPECT_EQ(init_encoder({}, 5).params(), init_encoder({}, 5).params());
  EXPECT_NE(init_encoder({}, 5).params(), init_encoder({}, 6).params());
  EXPECT_THROW(init_encoder({1, 3}, 1), Error);
  EXPECT_THROW(init_encoder({8, 0}, 1), Error);
}

TEST(Encoder, AtomTypes) {
  EXPECT_EQ(atom_type({Element::C, 0, false}), 1);
  EXPECT_EQ(atom_type({Element::C, 0, true}), 11);
  EXPECT_EQ(atom_type({Element::S, 0, true}), 15);
}

TEST(Encoder, BatchingIndependence) {
  Encoder m = oodmol::fixtures::gradcheck_model(3);
  MolInput a = prepare_input(parse_smiles("CC(=O)Nc1ccccc1"));
  MolInput b = prepare_input(parse_smiles("OCC1CCN(C)CC1"));
  ForwardResult ra = forward(m, {{&a}, {}});
  ForwardResult rb = forward(m, {{&b}, {}});
  ForwardResult rab = forward(m, {{&a, &b}, {}});
  EXPECT_NEAR(rab.pred(0), ra.pred(0), 1e-12);
  EXPECT_NEAR(rab.pred(1), rb.pred(0), 1e-12);
  EXPECT_LT((rab.h_mol.row(0) - ra.h_mol.row(0)).norm(), 1e-12);
  EXPECT_LT((rab.h_sub.row(1) - rb.h_sub.row(0)).norm(), 1e-12);
  EXPECT_EQ(rab.h_mol.cols(), 32);
}

TEST(Encoder, PermutationInvariance) {
  Encoder m = oodmol::fixtures::gradcheck_model(4);
  Rng rng(9);
  for (const auto& smi : oodmol::fixtures::gradcheck_smiles()) {
    MolGraph g = parse_smiles(smi);
    MolInput base = prepare_input(g);
    ForwardResult r0 = forward(m, {{&base}, {}});
    for (int t = 0; t < 10; ++t) {
      std::vector<int> p(g.atom_count());
      std::iota(p.begin(), p.end(), 0);
      rng.shuffle(p);
      MolInput q = prepare_input(permute_atoms(g, p));
      // duplicate in the same batch
      ForwardResult r = forward(m, {{&base, &q}, {}});
      EXPECT_NEAR(r.pred(1), r0.pred(0), 1e-10) << smi;
      EXPECT_LT((r.h_mol.row(1) - r0.h_mol.row(0)).norm(), 1e-10);
      EXPECT_LT((r.h_sub.row(1) - r0.h_sub.row(0)).norm(), 1e-10);
    }
  }
}

TEST(Encoder, SingleFragmentPoolsLikeMolecule) {
  Encoder m = oodmol::fixtures::gradcheck_model(5);
  MolInput in = prepare_input(parse_smiles("c1ccncc1"));
  ASSERT_EQ(in.fragment_count, 1);
  ForwardResult r = forward(m, {{&in}, {}});
  EXPECT_LT((r.h_mol - r.h_sub).norm(), 1e-12);
}

TEST(Encoder, SingleAtomHasNoMessages) {
  Encoder m = oodmol::fixtures::gradcheck_model(6, {8, 2});
  MolInput a = prepare_input(parse_smiles("C"));
  MolInput b = prepare_input(parse_smiles("CC"));
  ForwardCache ca;
  forward(m, {{&a}, {}}, &ca);
  for (const RowMatrix& msg : ca.msg) EXPECT_EQ(msg.norm(), 0.0);
  ForwardCache cb;
  forward(m, {{&b}, {}}, &cb);
  EXPECT_GT(cb.msg[0].norm(), 0.0);
}

TEST(Encoder, ZeroAdjointGivesZeroGradient) {
  Encoder m = oodmol::fixtures::gradcheck_model(7);
  GradCheckData d(1);
  ForwardCache c;
  Batch b{d.groups[0].inputs, {}};
  forward(m, b, &c);
  Eigen::VectorXd g = backward(m, c, Eigen::VectorXd::Zero(4));
  EXPECT_EQ(g.norm(), 0.0);
  EXPECT_THROW(backward(m, c, Eigen::VectorXd::Zero(3)), Error);
  EXPECT_THROW(backward(m, c, Eigen::VectorXd::Zero(4), RowMatrix::Zero(4, 5)), Error);
}

TEST(Encoder, RegressionGradientMatchesFiniteDifferences) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    Encoder m = oodmol::fixtures::gradcheck_model(seed);
    GradCheckData d(seed);
    Eigen::VectorXd g;
    oodmol::fixtures::regression_loss(m, d.groups[0], &g);
    auto r = oodmol::fixtures::finite_difference_check(
        m, g, [&](const Encoder& e) { return oodmol::fixtures::regression_loss(e, d.groups[0]); }, 20, seed);
    EXPECT_LT(r.max_rel_error, 1e-4) << "seed " << seed;
  }
}

TEST(Sgd, Steps) {
  Encoder m({2, 1}, Eigen::VectorXd::Ones(encoder_param_count({2, 1})));
  Eigen::VectorXd g = Eigen::VectorXd::Constant(m.param_count(), 3.0);
  Encoder before = m;
  sgd_step(m, g, 0.0);
  EXPECT_EQ(m.params(), before.params());
  // d/dp p^2 = 2p at p = 1
  sgd_step(m, 2.0 * m.params(), 0.1);
  EXPECT_NEAR(m.params()(0), 0.8, 1e-15);
  g(3) = std::nan("");
  EXPECT_THROW(sgd_step(m, g, 0.1), Error);
}

TEST(Sgd, LinearToyDecreasesMonotonically) {
  // one-parameter least squares through the encoder output bias
  Encoder m({2, 1}, Eigen::VectorXd::Zero(encoder_param_count({2, 1})));
  MolInput a = prepare_input(parse_smiles("C"));
  MolInput b = prepare_input(parse_smiles("CC"));
  Batch batch{{&a, &b}, {1.0, 3.0}};
  double prev = 1e300;
  for (int step = 0; step < 200; ++step) {
    ForwardCache c;
    ForwardResult r = forward(m, batch, &c);
    Eigen::VectorXd dpred;
    const double loss = mse(r.pred, batch.labels, &dpred);
    if (step >= 5) EXPECT_LE(loss, prev + 1e-15) << step;
    prev = loss;
    sgd_step(m, backward(m, c, dpred), 0.05);
  }
  EXPECT_NEAR(prev, 1.0, 1e-3);  // best constant fit leaves variance 1
}

TEST(Mse, ValueAndGradient) {
  Eigen::VectorXd p(2);
  p << 1.0, 2.0;
  Eigen::VectorXd d;
  std::vector<double> y = {0.0, 4.0};
  EXPECT_DOUBLE_EQ(mse(p, y, &d), 2.5);
  EXPECT_DOUBLE_EQ(d(0), 1.0);
  EXPECT_DOUBLE_EQ(d(1), -2.0);
}

TEST(Checkpoint, RoundTripAndCorruption) {
  Encoder m = init_encoder({}, 11);
  const std::string bytes = encode_checkpoint(encoder_checkpoint(m));
  EXPECT_EQ(bytes.substr(0, 8), "OODMCKPT");
  Encoder back = encoder_from_checkpoint(decode_checkpoint(bytes));
  EXPECT_EQ(back.params(), m.params());
  EXPECT_EQ(back.config().dim, 32);
  std::string bad = bytes;
  bad[bad.size() / 2] ^= 0x10;
  EXPECT_THROW(decode_checkpoint(bad), Error);
  EXPECT_THROW(decode_checkpoint(bytes.substr(0, bytes.size() - 3)), Error);
  std::string magic = bytes;
  magic[0] = 'X';
  EXPECT_THROW(decode_checkpoint(magic), Error);
}
