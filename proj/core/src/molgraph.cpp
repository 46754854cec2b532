#include "oodmol/molgraph.hpp"

#include <algorithm>
#include <array>
#include <numeric>
#include <queue>
#include <set>
#include <utility>

#include "oodmol/error.hpp"

namespace oodmol {

namespace {

constexpr std::array<std::string_view, kElementCount> kSymbols = {"B", "C",  "N",  "O", "P",
                                                                  "S", "F", "Cl", "Br", "I"};
constexpr std::array<int, kElementCount> kValence = {3, 4, 3, 2, 3, 2, 1, 1, 1, 1};

}  // namespace

std::string_view element_symbol(Element e) { return kSymbols[static_cast<int>(e)]; }

std::optional<Element> element_from_symbol(std::string_view symbol) {
  for (int i = 0; i < kElementCount; ++i) {
    if (kSymbols[i] == symbol) return static_cast<Element>(i);
  }
  return std::nullopt;
}

int default_valence(Element e) { return kValence[static_cast<int>(e)]; }

bool can_be_aromatic(Element e) {
  switch (e) {
    case Element::B:
    case Element::C:
    case Element::N:
    case Element::O:
    case Element::P:
    case Element::S:
      return true;
    default:
      return false;
  }
}

double bond_order_value(BondOrder order) {
  switch (order) {
    case BondOrder::Single: return 1.0;
    case BondOrder::Double: return 2.0;
    case BondOrder::Triple: return 3.0;
    case BondOrder::Aromatic: return 1.5;
  }
  return 1.0;
}

MolGraph::MolGraph(std::vector<Atom> atoms, std::vector<Bond> bonds, std::string source_text)
    : atoms_(std::move(atoms)), bonds_(std::move(bonds)), source_text_(std::move(source_text)) {
  const int n = static_cast<int>(atoms_.size());
  std::set<std::pair<int, int>> seen;
  std::vector<int> deg(n, 0);
  for (const Bond& b : bonds_) {
    if (b.begin < 0 || b.end < 0 || b.begin >= n || b.end >= n) {
      throw Error(ErrorKind::InvalidGraph, "bond endpoint out of range");
    }
    if (b.begin == b.end) throw Error(ErrorKind::InvalidGraph, "self-loop bond");
    const auto key = std::minmax(b.begin, b.end);
    if (!seen.insert(key).second) throw Error(ErrorKind::InvalidGraph, "duplicate bond");
    if (b.order == BondOrder::Aromatic && !(atoms_[b.begin].aromatic && atoms_[b.end].aromatic)) {
      throw Error(ErrorKind::InvalidGraph, "aromatic bond between non-aromatic atoms");
    }
    ++deg[b.begin];
    ++deg[b.end];
  }
  offsets_.assign(n + 1, 0);
  for (int i = 0; i < n; ++i) offsets_[i + 1] = offsets_[i] + deg[i];
  adjacency_.resize(offsets_[n]);
  std::vector<int> fill(offsets_.begin(), offsets_.end() - 1);
  for (int bi = 0; bi < static_cast<int>(bonds_.size()); ++bi) {
    const Bond& b = bonds_[bi];
    adjacency_[fill[b.begin]++] = {b.end, bi};
    adjacency_[fill[b.end]++] = {b.begin, bi};
  }
  for (int i = 0; i < n; ++i) {
    std::sort(adjacency_.begin() + offsets_[i], adjacency_.begin() + offsets_[i + 1],
              [](const Neighbor& a, const Neighbor& b) { return a.atom < b.atom; });
  }
}

int MolGraph::component_count() const {
  const int n = static_cast<int>(atom_count());
  std::vector<bool> seen(n, false);
  int components = 0;
  std::vector<int> stack;
  for (int s = 0; s < n; ++s) {
    if (seen[s]) continue;
    ++components;
    seen[s] = true;
    stack.push_back(s);
    while (!stack.empty()) {
      const int u = stack.back();
      stack.pop_back();
      for (const Neighbor& nb : neighbors(u)) {
        if (!seen[nb.atom]) {
          seen[nb.atom] = true;
          stack.push_back(nb.atom);
        }
      }
    }
  }
  return components;
}

int MolGraph::cyclomatic_number() const {
  return static_cast<int>(bond_count()) - static_cast<int>(atom_count()) + component_count();
}

int RingInfo::max_ring_size() const {
  int best = 0;
  for (int s : smallest_ring_through_bond) best = std::max(best, s);
  return best;
}

RingInfo ring_info(const MolGraph& g) {
  const int n = static_cast<int>(g.atom_count());
  const int m = static_cast<int>(g.bond_count());
  RingInfo info;
  info.bond_in_ring.assign(m, true);
  info.atom_in_ring.assign(n, false);
  info.smallest_ring_through_bond.assign(m, 0);

  // Iterative Tarjan bridge finding.
  std::vector<int> disc(n, -1), low(n, 0);
  int timer = 0;
  struct Frame {
    int atom;
    int parent_bond;
    std::size_t next;
  };
  for (int root = 0; root < n; ++root) {
    if (disc[root] != -1) continue;
    std::vector<Frame> stack{{root, -1, 0}};
    disc[root] = low[root] = timer++;
    while (!stack.empty()) {
      Frame& f = stack.back();
      const auto nbs = g.neighbors(f.atom);
      if (f.next < nbs.size()) {
        const Neighbor nb = nbs[f.next++];
        if (nb.bond == f.parent_bond) continue;
        if (disc[nb.atom] == -1) {
          disc[nb.atom] = low[nb.atom] = timer++;
          stack.push_back({nb.atom, nb.bond, 0});
        } else {
          low[f.atom] = std::min(low[f.atom], disc[nb.atom]);
        }
      } else {
        const Frame done = f;
        stack.pop_back();
        if (!stack.empty()) {
          Frame& parent = stack.back();
          low[parent.atom] = std::min(low[parent.atom], low[done.atom]);
          if (low[done.atom] > disc[parent.atom]) info.bond_in_ring[done.parent_bond] = false;
        }
      }
    }
  }

  for (int bi = 0; bi < m; ++bi) {
    if (!info.bond_in_ring[bi]) continue;
    const Bond& b = g.bond(bi);
    info.atom_in_ring[b.begin] = true;
    info.atom_in_ring[b.end] = true;
    // BFS from begin to end without using this bond.
    std::vector<int> dist(n, -1);
    std::queue<int> q;
    dist[b.begin] = 0;
    q.push(b.begin);
    while (!q.empty() && dist[b.end] == -1) {
      const int u = q.front();
      q.pop();
      for (const Neighbor& nb : g.neighbors(u)) {
        if (nb.bond == bi || dist[nb.atom] != -1) continue;
        dist[nb.atom] = dist[u] + 1;
        q.push(nb.atom);
      }
    }
    info.smallest_ring_through_bond[bi] = dist[b.end] + 1;
  }
  return info;
}

int implicit_h_count(const MolGraph& g, int atom_index) {
  const Atom& a = g.atom(atom_index);
  int valence = default_valence(a.element);
  if (a.charge < 0) {
    valence += a.charge;
  } else if (a.charge > 0) {
    switch (a.element) {
      case Element::N:
      case Element::O:
      case Element::P:
      case Element::S:
        valence += a.charge;
        break;
      default:
        valence -= a.charge;
        break;
    }
  }
  int used = 0;
  int aromatic_bonds = 0;
  for (const Neighbor& nb : g.neighbors(atom_index)) {
    const BondOrder order = g.bond(nb.bond).order;
    if (order == BondOrder::Aromatic) {
      ++aromatic_bonds;
    } else {
      used += static_cast<int>(bond_order_value(order));
    }
  }
  if (a.aromatic) used += aromatic_bonds + 1;
  return std::max(0, valence - used);
}

MolGraph permute_atoms(const MolGraph& g, std::span<const int> perm) {
  const int n = static_cast<int>(g.atom_count());
  if (static_cast<int>(perm.size()) != n) {
    throw Error(ErrorKind::DimensionMismatch, "permutation size differs from atom count");
  }
  std::vector<Atom> atoms(n);
  for (int i = 0; i < n; ++i) atoms[perm[i]] = g.atom(i);
  std::vector<Bond> bonds;
  bonds.reserve(g.bond_count());
  for (const Bond& b : g.bonds()) bonds.push_back({perm[b.begin], perm[b.end], b.order});
  return MolGraph(std::move(atoms), std::move(bonds), g.source_text());
}

MolGraph induced_subgraph(const MolGraph& g, std::span<const int> keep) {
  std::vector<int> remap(g.atom_count(), -1);
  std::vector<Atom> atoms;
  atoms.reserve(keep.size());
  for (int i : keep) {
    remap[i] = static_cast<int>(atoms.size());
    atoms.push_back(g.atom(i));
  }
  std::vector<Bond> bonds;
  for (const Bond& b : g.bonds()) {
    if (remap[b.begin] >= 0 && remap[b.end] >= 0) {
      bonds.push_back({remap[b.begin], remap[b.end], b.order});
    }
  }
  // An aromatic atom cut out of its ring keeps its flag; only bonds are checked.
  return MolGraph(std::move(atoms), std::move(bonds));
}

MolGraph murcko_scaffold(const MolGraph& g) {
  const int n = static_cast<int>(g.atom_count());
  std::vector<bool> alive(n, true);
  std::vector<int> deg(n);
  for (int i = 0; i < n; ++i) deg[i] = g.degree(i);

  // Strip terminal atoms to a fixpoint; what survives is rings plus linkers.
  std::vector<int> queue;
  for (int i = 0; i < n; ++i) {
    if (deg[i] <= 1) queue.push_back(i);
  }
  while (!queue.empty()) {
    const int u = queue.back();
    queue.pop_back();
    if (!alive[u] || deg[u] > 1) continue;
    alive[u] = false;
    for (const Neighbor& nb : g.neighbors(u)) {
      if (alive[nb.atom] && --deg[nb.atom] <= 1) queue.push_back(nb.atom);
    }
  }

  // Exocyclic/exolinker atoms double-bonded to the core are part of the scaffold.
  std::vector<bool> keep = alive;
  for (int i = 0; i < n; ++i) {
    if (alive[i] || g.degree(i) != 1) continue;
    const Neighbor nb = g.neighbors(i)[0];
    if (alive[nb.atom] && g.bond(nb.bond).order == BondOrder::Double) keep[i] = true;
  }

  std::vector<int> atoms;
  for (int i = 0; i < n; ++i) {
    if (keep[i]) atoms.push_back(i);
  }
  MolGraph core = induced_subgraph(g, atoms);
  if (core.empty()) return core;
  return MolGraph(core.atoms(), core.bonds(), to_smiles(core));
}

std::vector<Fragment> fragment(const MolGraph& g) {
  const int n = static_cast<int>(g.atom_count());
  const RingInfo rings = ring_info(g);
  std::vector<bool> cut(g.bond_count(), false);
  auto hetero = [](Element e) { return e == Element::N || e == Element::O || e == Element::S; };

  for (int bi = 0; bi < static_cast<int>(g.bond_count()); ++bi) {
    const Bond& b = g.bond(bi);
    if (rings.bond_in_ring[bi] || b.order != BondOrder::Single) continue;
    const bool ring_a = rings.atom_in_ring[b.begin];
    const bool ring_b = rings.atom_in_ring[b.end];
    if (ring_a != ring_b) {
      cut[bi] = true;
      continue;
    }
    if (ring_a || ring_b) continue;
    const Element ea = g.atom(b.begin).element;
    const Element eb = g.atom(b.end).element;
    const bool c_hetero =
        (ea == Element::C && hetero(eb)) || (eb == Element::C && hetero(ea));
    if (c_hetero && g.degree(b.begin) > 1 && g.degree(b.end) > 1) cut[bi] = true;
  }

  std::vector<int> comp(n, -1);
  std::vector<Fragment> fragments;
  for (int s = 0; s < n; ++s) {
    if (comp[s] != -1) continue;
    const int id = static_cast<int>(fragments.size());
    Fragment frag;
    std::vector<int> stack{s};
    comp[s] = id;
    while (!stack.empty()) {
      const int u = stack.back();
      stack.pop_back();
      frag.atoms.push_back(u);
      for (const Neighbor& nb : g.neighbors(u)) {
        if (cut[nb.bond]) {
          ++frag.attachment_points;
          continue;
        }
        if (comp[nb.atom] == -1) {
          comp[nb.atom] = id;
          stack.push_back(nb.atom);
        }
      }
    }
    std::sort(frag.atoms.begin(), frag.atoms.end());
    fragments.push_back(std::move(frag));
  }
  for (int bi = 0; bi < static_cast<int>(g.bond_count()); ++bi) {
    if (!cut[bi]) fragments[comp[g.bond(bi).begin]].bonds.push_back(bi);
  }
  return fragments;
}

}  // namespace oodmol
