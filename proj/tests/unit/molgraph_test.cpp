#include <algorithm>
#include <numeric>
#include <set>

#include <gtest/gtest.h>

#include "oodmol/error.hpp"
#include "oodmol/molgraph.hpp"
#include "oodmol/rng.hpp"

using namespace oodmol;

namespace {

std::vector<int> random_perm(int n, Rng& rng) {
  std::vector<int> p(n);
  std::iota(p.begin(), p.end(), 0);
  rng.shuffle(p);
  return p;
}

const char* kSmallMolecules[] = {
    "CCO",          "c1ccccc1",        "CC(=O)Nc1ccccc1",   "c1ccncc1",         "C1CCCCC1",
    "OC(=O)CCN",    "c1ccc2ccccc2c1",  "c1ccc(Cc2ccccc2)cc1", "C1CC2CCC1C2",    "ClC(Br)(F)I",
    "c1ccsc1",      "c1cc[nH]c1",      "C#CC=CC",           "O=C1CCCCC1",       "CN1CCOCC1",
    "c1ccc(-c2ccccc2)cc1", "CC(C)(C)OC(=O)N", "[NH4+]",      "C1CCC2(CC1)CCC2",  "P(=O)(O)(O)O",
};

}  // namespace

TEST(ParseSmiles, SingleAtom) {
  MolGraph g = parse_smiles("C");
  EXPECT_EQ(g.atom_count(), 1u);
  EXPECT_EQ(g.bond_count(), 0u);
}

TEST(ParseSmiles, Benzene) {
  MolGraph g = parse_smiles("c1ccccc1");
  ASSERT_EQ(g.atom_count(), 6u);
  EXPECT_EQ(g.bond_count(), 6u);
  for (const Atom& a : g.atoms()) {
    EXPECT_TRUE(a.aromatic);
    EXPECT_EQ(a.element, Element::C);
  }
  for (const Bond& b : g.bonds()) EXPECT_EQ(b.order, BondOrder::Aromatic);
  EXPECT_EQ(g.cyclomatic_number(), 1);
}

TEST(ParseSmiles, Acetanilide) {
  // methyl C, carbonyl C, O, N and six ring atoms; 4 chain bonds + 6 ring bonds
  MolGraph g = parse_smiles("CC(=O)Nc1ccccc1");
  EXPECT_EQ(g.atom_count(), 10u);
  EXPECT_EQ(g.bond_count(), 10u);
  EXPECT_EQ(g.cyclomatic_number(), 1);
}

TEST(ParseSmiles, BracketAtomsAndPercentClosures) {
  MolGraph g = parse_smiles("[13CH3][N+](C)(C)C");
  ASSERT_EQ(g.atom_count(), 5u);
  EXPECT_EQ(g.atom(1).charge, 1);
  MolGraph r = parse_smiles("C%12CCCC%12");
  EXPECT_EQ(r.bond_count(), 5u);
  EXPECT_EQ(r.cyclomatic_number(), 1);
  MolGraph t = parse_smiles("C#N");
  EXPECT_EQ(t.bond(0).order, BondOrder::Triple);
}

TEST(ParseSmiles, RejectsWithOffset) {
  struct Case {
    const char* text;
    std::size_t offset;
  };
  const Case cases[] = {{"C/C=C/C", 1}, {"F[C@H](Cl)Br", 3}, {"CXC", 1}, {"C(C", 1}, {"CC)", 2}, {"C1CC", 1}};
  for (const Case& c : cases) {
    try {
      parse_smiles(c.text);
      ADD_FAILURE() << c.text << " parsed";
    } catch (const RejectedFeature& e) {
      EXPECT_EQ(e.kind(), ErrorKind::RejectedFeature);
      EXPECT_EQ(e.offset(), c.offset) << c.text << ": " << e.what();
    }
  }
}

TEST(MolGraphCtor, ValidatesStructure) {
  const std::vector<Atom> two(2);
  EXPECT_THROW(MolGraph(two, {{0, 5, BondOrder::Single}}), Error);
  EXPECT_THROW(MolGraph(two, {{1, 1, BondOrder::Single}}), Error);
  EXPECT_THROW(MolGraph(two, {{0, 1, BondOrder::Single}, {1, 0, BondOrder::Single}}), Error);
  // aromatic bond between aliphatic atoms
  EXPECT_THROW(MolGraph(two, {{0, 1, BondOrder::Aromatic}}), Error);
}

TEST(ImplicitH, SimpleCases) {
  EXPECT_EQ(implicit_h_count(parse_smiles("C"), 0), 4);
  EXPECT_EQ(implicit_h_count(parse_smiles("O"), 0), 2);
  MolGraph bz = parse_smiles("c1ccccc1");
  for (int i = 0; i < 6; ++i) EXPECT_EQ(implicit_h_count(bz, i), 1);
  MolGraph py = parse_smiles("c1ccncc1");
  EXPECT_EQ(implicit_h_count(py, 3), 0);
  EXPECT_EQ(implicit_h_count(parse_smiles("C(=O)=O"), 0), 0);
  EXPECT_EQ(implicit_h_count(parse_smiles("CC(C)(C)C"), 1), 0);
}

TEST(Murcko, Examples) {
  EXPECT_TRUE(murcko_scaffold(parse_smiles("CCO")).empty());
  EXPECT_EQ(canonical_key(murcko_scaffold(parse_smiles("CCc1ccccc1"))), canonical_key(parse_smiles("c1ccccc1")));
  MolGraph dpm = parse_smiles("c1ccc(Cc2ccccc2)cc1");
  MolGraph s = murcko_scaffold(dpm);
  EXPECT_EQ(s.atom_count(), 13u);
  EXPECT_EQ(canonical_key(s), canonical_key(dpm));
}

TEST(Murcko, KeepsExocyclicDoubleBond) {
  MolGraph s = murcko_scaffold(parse_smiles("CCC1CCC(=O)CC1"));
  EXPECT_EQ(s.atom_count(), 7u);
  EXPECT_EQ(canonical_key(s), canonical_key(parse_smiles("O=C1CCCCC1")));
}

TEST(Murcko, Idempotent) {
  for (const char* smi : kSmallMolecules) {
    MolGraph s = murcko_scaffold(parse_smiles(smi));
    EXPECT_EQ(canonical_key(murcko_scaffold(s)), canonical_key(s)) << smi;
  }
}

TEST(CanonicalKey, Basics) {
  EXPECT_EQ(canonical_key(parse_smiles("CCO")), canonical_key(parse_smiles("OCC")));
  EXPECT_NE(canonical_key(parse_smiles("c1ccccc1")), canonical_key(parse_smiles("c1ccncc1")));
  EXPECT_NE(canonical_key(parse_smiles("CC=O")), canonical_key(parse_smiles("CCO")));
}

TEST(CanonicalKey, PermutationInvariant) {
  Rng rng(7);
  for (const char* smi : kSmallMolecules) {
    MolGraph g = parse_smiles(smi);
    const std::string key = canonical_key(g);
    for (int trial = 0; trial < 100; ++trial) {
      auto p = random_perm(static_cast<int>(g.atom_count()), rng);
      ASSERT_EQ(canonical_key(permute_atoms(g, p)), key) << smi << " trial " << trial;
    }
  }
}

TEST(CanonicalKey, RegularGraphsDistinguished) {
  // same degree sequence and element counts, different topology
  EXPECT_NE(canonical_key(parse_smiles("C1CCCCC1")), canonical_key(parse_smiles("C1CC1C1CC1")));
  EXPECT_NE(canonical_key(parse_smiles("C12CC1CC2")), canonical_key(parse_smiles("C1CCC1C")));
}

TEST(Smiles, RoundTrip) {
  Rng rng(11);
  for (const char* smi : kSmallMolecules) {
    MolGraph g = parse_smiles(smi);
    const std::string key = canonical_key(g);
    EXPECT_EQ(canonical_key(parse_smiles(to_smiles(g))), key) << smi << " -> " << to_smiles(g);
    auto p = random_perm(static_cast<int>(g.atom_count()), rng);
    MolGraph q = permute_atoms(g, p);
    EXPECT_EQ(canonical_key(parse_smiles(to_smiles(q))), key) << smi;
  }
}

TEST(Fragment, Examples) {
  EXPECT_EQ(fragment(parse_smiles("CC")).size(), 1u);

  auto ethylbenzene = fragment(parse_smiles("CCc1ccccc1"));
  ASSERT_EQ(ethylbenzene.size(), 2u);
  EXPECT_EQ(ethylbenzene[0].atoms, (std::vector<int>{0, 1}));
  EXPECT_EQ(ethylbenzene[1].atoms.size(), 6u);
  EXPECT_EQ(ethylbenzene[0].attachment_points, 1);
  EXPECT_EQ(ethylbenzene[1].attachment_points, 1);

  auto ether = fragment(parse_smiles("CCOC(C)C"));
  ASSERT_EQ(ether.size(), 3u);
  EXPECT_EQ(ether[0].atoms, (std::vector<int>{0, 1}));
  EXPECT_EQ(ether[1].atoms, (std::vector<int>{2}));
  EXPECT_EQ(ether[2].atoms, (std::vector<int>{3, 4, 5}));
  EXPECT_EQ(ether[1].attachment_points, 2);
}

TEST(Fragment, PartitionsAtoms) {
  for (const char* smi : kSmallMolecules) {
    MolGraph g = parse_smiles(smi);
    std::vector<int> seen;
    for (const Fragment& f : fragment(g)) seen.insert(seen.end(), f.atoms.begin(), f.atoms.end());
    std::sort(seen.begin(), seen.end());
    std::vector<int> all(g.atom_count());
    std::iota(all.begin(), all.end(), 0);
    EXPECT_EQ(seen, all) << smi;
  }
}

TEST(RingInfo, BridgesAreAcyclic) {
  RingInfo ri = ring_info(parse_smiles("c1ccc(-c2ccccc2)cc1"));
  int acyclic = 0;
  for (bool b : ri.bond_in_ring) acyclic += b ? 0 : 1;
  EXPECT_EQ(acyclic, 1);
  EXPECT_EQ(ri.max_ring_size(), 6);
}
