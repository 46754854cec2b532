#pragma once

#include <array>
#include <vector>

#include "oodmol/molgraph.hpp"

namespace oodmol {

/// Atomic polarizability lookup (cubic angstrom), indexed by Element.
struct PolarizabilityTable {
  std::array<double, kElementCount> values{3.03, 1.76, 1.10, 0.80, 3.63, 2.90, 0.56, 2.18, 3.05, 5.35};

  double operator()(Element e) const { return values[static_cast<int>(e)]; }
};

enum class DescriptorMode {
  /// Nine scalars in four blocks: macro(3) element(2) conn(3) flex(1).
  Blocks,
  /// One summary scalar per block (block mean).
  Summary,
};

inline constexpr int kBlockDescriptorSize = 9;

/// Whole-graph physicochemical descriptor. Layout in Blocks mode:
///   [0] heavy atoms  [1] cyclomatic ring count  [2] max ring size
///   [3] mean polarizability  [4] heteroatom fraction
///   [5] ring-atom fraction  [6] multiple-bond fraction  [7] aromatic-atom fraction
///   [8] rotatable-bond ratio
/// Throws EmptyScaffold for the empty graph.
std::vector<double> descriptor(const MolGraph& g, const PolarizabilityTable& table = {},
                               DescriptorMode mode = DescriptorMode::Blocks);

double mean_polarizability(const MolGraph& g, const PolarizabilityTable& table = {});

/// Acyclic single bonds between non-terminal atoms over total bonds (0 without bonds).
double rotatable_ratio(const MolGraph& g);

/// Five ring-complexity levels: 0 one ring <= 5 atoms, 1 one 6-ring, 2 one
/// ring >= 7, 3 two rings, 4 three or more. Throws AcyclicScaffold.
int scaffold_level(const MolGraph& g);
std::vector<int> assign_levels(const std::vector<MolGraph>& scaffolds);

/// Per-level, per-dimension z-scores with population std; zero-variance
/// columns map to 0. `levels[i]` selects the group of `vectors[i]`.
std::vector<std::vector<double>> zscore_per_level(const std::vector<std::vector<double>>& vectors,
                                                  const std::vector<int>& levels);

/// Column z-scores over the whole set (a single level).
std::vector<std::vector<double>> zscore(const std::vector<std::vector<double>>& vectors);

}  // namespace oodmol
