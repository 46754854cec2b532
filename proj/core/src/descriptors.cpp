#include "oodmol/descriptors.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "oodmol/error.hpp"

namespace oodmol {

double mean_polarizability(const MolGraph& g, const PolarizabilityTable& table) {
  if (g.empty()) return 0.0;
  double sum = 0.0;
  for (const Atom& a : g.atoms()) sum += table(a.element);
  return sum / static_cast<double>(g.atom_count());
}

double rotatable_ratio(const MolGraph& g) {
  if (g.bond_count() == 0) return 0.0;
  const RingInfo rings = ring_info(g);
  int rotatable = 0;
  for (int bi = 0; bi < static_cast<int>(g.bond_count()); ++bi) {
    const Bond& b = g.bond(bi);
    if (rings.bond_in_ring[bi] || b.order != BondOrder::Single) continue;
    if (g.degree(b.begin) > 1 && g.degree(b.end) > 1) ++rotatable;
  }
  return static_cast<double>(rotatable) / static_cast<double>(g.bond_count());
}

std::vector<double> descriptor(const MolGraph& g, const PolarizabilityTable& table, DescriptorMode mode) {
  if (g.empty()) throw Error(ErrorKind::EmptyScaffold, "descriptor of an empty scaffold");
  const RingInfo rings = ring_info(g);
  const double n = static_cast<double>(g.atom_count());
  int hetero = 0, ring_atoms = 0, aromatic = 0;
  for (int i = 0; i < static_cast<int>(g.atom_count()); ++i) {
    if (g.atom(i).element != Element::C) ++hetero;
    if (rings.atom_in_ring[i]) ++ring_atoms;
    if (g.atom(i).aromatic) ++aromatic;
  }
  int multiple = 0;
  for (const Bond& b : g.bonds()) {
    if (b.order != BondOrder::Single) ++multiple;
  }
  const double bonds = static_cast<double>(g.bond_count());

  const double macro[3] = {n, static_cast<double>(g.cyclomatic_number()),
                           static_cast<double>(rings.max_ring_size())};
  const double element[2] = {mean_polarizability(g, table), hetero / n};
  const double conn[3] = {ring_atoms / n, bonds > 0 ? multiple / bonds : 0.0, aromatic / n};
  const double flex = rotatable_ratio(g);

  if (mode == DescriptorMode::Summary) {
    return {(macro[0] + macro[1] + macro[2]) / 3.0, (element[0] + element[1]) / 2.0,
            (conn[0] + conn[1] + conn[2]) / 3.0, flex};
  }
  return {macro[0], macro[1], macro[2], element[0], element[1], conn[0], conn[1], conn[2], flex};
}

int scaffold_level(const MolGraph& g) {
  const int rings = g.cyclomatic_number();
  if (g.empty() || rings < 1) throw Error(ErrorKind::AcyclicScaffold, "scaffold has no ring");
  if (rings >= 3) return 4;
  if (rings == 2) return 3;
  const int size = ring_info(g).max_ring_size();
  if (size <= 5) return 0;
  if (size == 6) return 1;
  return 2;
}

std::vector<int> assign_levels(const std::vector<MolGraph>& scaffolds) {
  if (scaffolds.empty()) throw Error(ErrorKind::EmptyInput, "no scaffolds to level");
  std::vector<int> levels;
  levels.reserve(scaffolds.size());
  for (const MolGraph& g : scaffolds) levels.push_back(scaffold_level(g));
  return levels;
}

std::vector<std::vector<double>> zscore_per_level(const std::vector<std::vector<double>>& vectors,
                                                  const std::vector<int>& levels) {
  if (vectors.size() != levels.size()) {
    throw Error(ErrorKind::DimensionMismatch, "one level per vector required");
  }
  std::map<int, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < vectors.size(); ++i) groups[levels[i]].push_back(i);
  std::vector<std::vector<double>> out(vectors.size());
  for (const auto& [level, idx] : groups) {
    const std::size_t dims = vectors[idx.front()].size();
    std::vector<double> mean(dims, 0.0), var(dims, 0.0);
    for (std::size_t i : idx) {
      if (vectors[i].size() != dims) throw Error(ErrorKind::DimensionMismatch, "ragged vectors");
      for (std::size_t d = 0; d < dims; ++d) mean[d] += vectors[i][d];
    }
    for (double& m : mean) m /= static_cast<double>(idx.size());
    for (std::size_t i : idx) {
      for (std::size_t d = 0; d < dims; ++d) {
        const double c = vectors[i][d] - mean[d];
        var[d] += c * c;
      }
    }
    for (std::size_t i : idx) {
      out[i].resize(dims);
      for (std::size_t d = 0; d < dims; ++d) {
        const double sd = std::sqrt(var[d] / static_cast<double>(idx.size()));
        // Relative cutoff: a column of equal values can carry rounding noise.
        const double scale = std::max(1.0, std::abs(mean[d]));
        out[i][d] = sd > 1e-12 * scale ? (vectors[i][d] - mean[d]) / sd : 0.0;
      }
    }
  }
  return out;
}

std::vector<std::vector<double>> zscore(const std::vector<std::vector<double>>& vectors) {
  return zscore_per_level(vectors, std::vector<int>(vectors.size(), 0));
}

}  // namespace oodmol
