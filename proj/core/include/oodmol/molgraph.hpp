#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace oodmol {

enum class Element : std::uint8_t { B, C, N, O, P, S, F, Cl, Br, I };

inline constexpr int kElementCount = 10;

std::string_view element_symbol(Element e);
std::optional<Element> element_from_symbol(std::string_view symbol);
int default_valence(Element e);
/// Elements that may carry a lowercase aromatic flag in SMILES.
bool can_be_aromatic(Element e);

enum class BondOrder : std::uint8_t { Single, Double, Triple, Aromatic };

/// 1, 2, 3 or 1.5.
double bond_order_value(BondOrder order);

struct Atom {
  Element element = Element::C;
  int charge = 0;
  bool aromatic = false;

  friend bool operator==(const Atom&, const Atom&) = default;
};

struct Bond {
  int begin = 0;
  int end = 0;
  BondOrder order = BondOrder::Single;

  int other(int atom) const { return atom == begin ? end : begin; }
  friend bool operator==(const Bond&, const Bond&) = default;
};

struct Neighbor {
  int atom;
  int bond;
};

/// Heavy-atom molecular graph. Hydrogens are implicit and derived on demand.
/// Construction validates endpoints, self-loops, duplicate bonds and the
/// aromatic-bond placement rule, throwing Error(InvalidGraph) otherwise.
class MolGraph {
 public:
  MolGraph() = default;
  MolGraph(std::vector<Atom> atoms, std::vector<Bond> bonds, std::string source_text = {});

  std::size_t atom_count() const { return atoms_.size(); }
  std::size_t bond_count() const { return bonds_.size(); }
  bool empty() const { return atoms_.empty(); }

  const std::vector<Atom>& atoms() const { return atoms_; }
  const std::vector<Bond>& bonds() const { return bonds_; }
  const Atom& atom(int i) const { return atoms_[i]; }
  const Bond& bond(int i) const { return bonds_[i]; }

  /// Neighbors sorted by atom index.
  std::span<const Neighbor> neighbors(int atom) const {
    return {adjacency_.data() + offsets_[atom], adjacency_.data() + offsets_[atom + 1]};
  }
  int degree(int atom) const { return offsets_[atom + 1] - offsets_[atom]; }

  const std::string& source_text() const { return source_text_; }

  /// Number of connected components (0 for the empty graph).
  int component_count() const;
  /// E - V + C.
  int cyclomatic_number() const;

 private:
  std::vector<Atom> atoms_;
  std::vector<Bond> bonds_;
  std::vector<int> offsets_{0};
  std::vector<Neighbor> adjacency_;
  std::string source_text_;
};

/// Ring membership derived from bridge detection: a bond lies on a cycle iff
/// it is not a bridge.
struct RingInfo {
  std::vector<bool> bond_in_ring;
  std::vector<bool> atom_in_ring;
  /// Size of the smallest cycle through each ring bond (0 for acyclic bonds).
  std::vector<int> smallest_ring_through_bond;

  int max_ring_size() const;
};

RingInfo ring_info(const MolGraph& g);

/// Default valence minus explicit bond-order sum, clamped at 0. Aromatic
/// atoms count their aromatic bonds once each plus one extra unit.
int implicit_h_count(const MolGraph& g, int atom_index);

/// Parses the supported SMILES subset. Throws RejectedFeature naming the byte
/// offset for stereo markers, unknown elements, unbalanced branches and
/// unclosed or self-referencing ring closures.
MolGraph parse_smiles(std::string_view text);

/// Deterministic DFS writer. `order`, when given, ranks atoms: the walk starts
/// at the lowest-ranked atom of each component and visits neighbors by rank.
std::string to_smiles(const MolGraph& g, std::span<const int> order = {});

/// Relabels atoms so that old atom i becomes new atom perm[i].
MolGraph permute_atoms(const MolGraph& g, std::span<const int> perm);

/// Subgraph induced by `keep` (sorted, unique), atoms renumbered in order.
MolGraph induced_subgraph(const MolGraph& g, std::span<const int> keep);

/// Bemis-Murcko scaffold: ring systems plus linkers, with exocyclic atoms that
/// are double-bonded to scaffold atoms retained. Empty for acyclic input.
MolGraph murcko_scaffold(const MolGraph& g);

/// Isomorphism-invariant string key.
std::string canonical_key(const MolGraph& g);

struct Fragment {
  std::vector<int> atoms;
  std::vector<int> bonds;
  int attachment_points = 0;
};

/// Retrosynthetic-style cleavage: cuts acyclic single bonds that either join
/// a ring atom to a non-ring atom, or join carbon to N/O/S when both ends are
/// acyclic and non-terminal. Returns connected components ordered by their
/// lowest atom index; the fragments partition the atom set.
std::vector<Fragment> fragment(const MolGraph& g);

}  // namespace oodmol
