#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "oodmol/chemsim.hpp"
#include "oodmol/descriptors.hpp"
#include "oodmol/molgraph.hpp"

namespace oodmol {

inline constexpr const char* kAcyclicKey = "ACYCLIC";

struct Molecule {
  std::string id;
  std::string smiles;
  double label = 0.0;
  MolGraph graph;
};

struct Provenance {
  /// "ingested" or "synthetic".
  std::string kind = "ingested";
  std::uint64_t seed = 0;
  /// Generator configuration as JSON text for synthetic data.
  std::string generator_config;
};

struct Dataset {
  std::string property = "value";
  std::string unit;
  std::vector<Molecule> molecules;
  Provenance provenance;
  /// Canonical scaffold key -> molecule indices, ascending. Acyclic
  /// molecules are filed under kAcyclicKey.
  std::map<std::string, std::vector<int>> scaffold_index;

  /// Rebuilds scaffold_index from the molecule graphs.
  void index_scaffolds();
};

enum class DomainRole { Source, Validation, Target, Excluded };

std::string_view to_string(DomainRole role);
DomainRole role_from_string(std::string_view name);

struct ScaffoldRecord {
  std::string key;
  MolGraph graph;
  std::vector<int> members;
  std::vector<double> descriptor;
  Fingerprint fingerprint;
  int level = 0;
  int cluster = -1;
  DomainRole role = DomainRole::Excluded;
};

struct Cluster {
  int id = 0;
  int level = 0;
  std::vector<int> scaffolds;
  int member_count = 0;
  DomainRole role = DomainRole::Excluded;
};

struct SeparationAudit {
  /// Row-major 3x3 sliced-W1 between source, validation and target
  /// descriptor sets (globally z-scored space).
  std::vector<double> w1;
  /// Scaffold indices in heatmap order (source, validation, target).
  std::vector<int> order;
  /// Row-major Tanimoto matrix over `order`.
  std::vector<double> tanimoto;
  /// Fraction of source x target scaffold pairs above `tanimoto_threshold`.
  double cross_fraction = 0.0;
  double tanimoto_threshold = 0.5;
  double tau_dist = 0.0;
  bool pass = false;

  double min_cross_w1() const;
};

struct BenchConfig {
  int k_total = 12;
  int n_source = 6;
  int task_threshold = 200;
  int max_tasks = 15;
  int min_scaffold_members = 10;
  double alpha_comp = 0.5;
  double tau_dist = 0.0;
  int w1_projections = 64;
  int kmeans_max_iterations = 100;
  int morgan_radius = kDefaultMorganRadius;
  DescriptorMode descriptor_mode = DescriptorMode::Blocks;
  PolarizabilityTable polarizability;
  std::uint64_t seed = 42;
};

struct DomainSplit {
  std::vector<ScaffoldRecord> scaffolds;
  std::vector<Cluster> clusters;
  /// Indices into `scaffolds`, largest first.
  std::vector<int> zero_shot_tasks;
  /// Scaffold keys left out of clustering (acyclic or below the size floor).
  std::vector<std::string> excluded_keys;
  SeparationAudit audit;

  /// Molecule indices of every scaffold carrying `role`, ascending.
  std::vector<int> molecules_with_role(DomainRole role) const;
  std::vector<int> scaffolds_with_role(DomainRole role) const;
};

/// Groups molecules by scaffold and featurizes every scaffold that is cyclic
/// and has at least `min_scaffold_members` members. Records are ordered by key.
std::vector<ScaffoldRecord> extract_scaffolds(const Dataset& data, const BenchConfig& config,
                                              std::vector<std::string>* excluded = nullptr);

/// Level -> z-score -> quota -> K-Means++ per level. Fills `cluster` and
/// `level` on each record and returns the clusters (ids are global, level
/// order). Throws InfeasibleQuota when there are fewer scaffolds than clusters.
std::vector<Cluster> cluster_scaffolds(std::vector<ScaffoldRecord>& records, const BenchConfig& config);

/// Asymmetric partition: clusters sorted by member count (descending, id
/// ascending) give n_source source clusters, one validation cluster, and the
/// rest target. Zero-shot tasks are target scaffolds at or above the task
/// threshold, largest first, capped at max_tasks. Throws NotEnoughClusters.
void partition(DomainSplit& split, const BenchConfig& config);

/// Fills the separation audit. pass = min off-diagonal W1 >= tau_dist.
SeparationAudit audit(const DomainSplit& split, const BenchConfig& config);

/// extract -> cluster -> partition -> audit.
DomainSplit build_split(const Dataset& data, const BenchConfig& config);

struct RandomSplit {
  std::vector<int> source;
  std::vector<int> target;
};

/// Molecule-level random split with the same source and target sizes as
/// `split`, drawn from the molecules `split` assigns to any clustered role.
RandomSplit random_split_like(const DomainSplit& split, std::uint64_t seed);

}  // namespace oodmol
