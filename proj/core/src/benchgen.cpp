#include "oodmol/benchgen.hpp"

#include <algorithm>
#include <array>
#include <limits>
#include <numeric>
#include <set>

#include "oodmol/clustering.hpp"
#include "oodmol/error.hpp"
#include "oodmol/rng.hpp"
#include "oodmol/wasserstein.hpp"

namespace oodmol {

std::string_view to_string(DomainRole role) {
  switch (role) {
    case DomainRole::Source: return "source";
    case DomainRole::Validation: return "validation";
    case DomainRole::Target: return "target";
    case DomainRole::Excluded: return "excluded";
  }
  return "excluded";
}

DomainRole role_from_string(std::string_view name) {
  if (name == "source") return DomainRole::Source;
  if (name == "validation") return DomainRole::Validation;
  if (name == "target") return DomainRole::Target;
  if (name == "excluded") return DomainRole::Excluded;
  throw Error(ErrorKind::BadConfig, "unknown domain role '" + std::string(name) + "'");
}

void Dataset::index_scaffolds() {
  scaffold_index.clear();
  std::map<std::string, std::string> by_smiles;  // molecule SMILES -> scaffold key
  for (int i = 0; i < static_cast<int>(molecules.size()); ++i) {
    const Molecule& m = molecules[i];
    auto it = by_smiles.find(m.smiles);
    if (it == by_smiles.end()) {
      const MolGraph scaffold = murcko_scaffold(m.graph);
      const std::string key = scaffold.empty() ? std::string(kAcyclicKey) : canonical_key(scaffold);
      it = by_smiles.emplace(m.smiles, key).first;
    }
    scaffold_index[it->second].push_back(i);
  }
}

double SeparationAudit::min_cross_w1() const {
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      if (i != j && !w1.empty()) best = std::min(best, w1[i * 3 + j]);
    }
  }
  return best;
}

std::vector<int> DomainSplit::scaffolds_with_role(DomainRole role) const {
  std::vector<int> out;
  for (int i = 0; i < static_cast<int>(scaffolds.size()); ++i) {
    if (scaffolds[i].role == role) out.push_back(i);
  }
  return out;
}

std::vector<int> DomainSplit::molecules_with_role(DomainRole role) const {
  std::vector<int> out;
  for (const ScaffoldRecord& s : scaffolds) {
    if (s.role == role) out.insert(out.end(), s.members.begin(), s.members.end());
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<ScaffoldRecord> extract_scaffolds(const Dataset& data, const BenchConfig& config,
                                              std::vector<std::string>* excluded) {
  std::vector<ScaffoldRecord> records;
  for (const auto& [key, members] : data.scaffold_index) {
    if (key == kAcyclicKey || static_cast<int>(members.size()) < config.min_scaffold_members) {
      if (excluded) excluded->push_back(key);
      continue;
    }
    ScaffoldRecord rec;
    rec.key = key;
    rec.graph = murcko_scaffold(data.molecules[members.front()].graph);
    rec.members = members;
    rec.descriptor = descriptor(rec.graph, config.polarizability, config.descriptor_mode);
    rec.fingerprint = morgan_fingerprint(rec.graph, config.morgan_radius, kFingerprintLength);
    rec.level = scaffold_level(rec.graph);
    records.push_back(std::move(rec));
  }
  return records;
}

std::vector<Cluster> cluster_scaffolds(std::vector<ScaffoldRecord>& records, const BenchConfig& config) {
  if (static_cast<int>(records.size()) < config.k_total) {
    throw Error(ErrorKind::InfeasibleQuota, std::to_string(records.size()) + " scaffolds for K_total=" +
                                                std::to_string(config.k_total) + " clusters");
  }
  std::array<int, kLevelCount> sizes{};
  for (const ScaffoldRecord& r : records) ++sizes[r.level];
  std::array<int, kLevelCount> quota = allocate_quotas(sizes, config.k_total, config.alpha_comp);

  // A level cannot hold more clusters than scaffolds; hand the excess to the
  // levels with the most spare room (lower level on ties).
  int excess = 0;
  for (int l = 0; l < kLevelCount; ++l) {
    if (quota[l] > sizes[l]) {
      excess += quota[l] - sizes[l];
      quota[l] = sizes[l];
    }
  }
  while (excess > 0) {
    int best = -1;
    for (int l = 0; l < kLevelCount; ++l) {
      if (sizes[l] - quota[l] <= 0) continue;
      if (best < 0 || sizes[l] - quota[l] > sizes[best] - quota[best]) best = l;
    }
    if (best < 0) throw Error(ErrorKind::InfeasibleQuota, "not enough scaffolds to fill quotas");
    ++quota[best];
    --excess;
  }

  std::vector<int> levels;
  std::vector<std::vector<double>> vectors;
  for (const ScaffoldRecord& r : records) {
    levels.push_back(r.level);
    vectors.push_back(r.descriptor);
  }
  const auto normalized = zscore_per_level(vectors, levels);

  std::vector<Cluster> clusters;
  for (int l = 0; l < kLevelCount; ++l) {
    if (quota[l] == 0) continue;
    std::vector<int> idx;
    std::vector<Point> points;
    for (int i = 0; i < static_cast<int>(records.size()); ++i) {
      if (records[i].level == l) {
        idx.push_back(i);
        points.push_back(normalized[i]);
      }
    }
    const KMeansResult km =
        kmeanspp(points, quota[l], derive_seed(config.seed, 0x6b6d, static_cast<std::uint64_t>(l)),
                 config.kmeans_max_iterations);
    const int base = static_cast<int>(clusters.size());
    for (int c = 0; c < quota[l]; ++c) {
      Cluster cl;
      cl.id = base + c;
      cl.level = l;
      clusters.push_back(cl);
    }
    for (std::size_t p = 0; p < idx.size(); ++p) {
      const int cid = base + km.assignment[p];
      records[idx[p]].cluster = cid;
      clusters[cid].scaffolds.push_back(idx[p]);
      clusters[cid].member_count += static_cast<int>(records[idx[p]].members.size());
    }
  }
  return clusters;
}

void partition(DomainSplit& split, const BenchConfig& config) {
  const int k = static_cast<int>(split.clusters.size());
  if (k < 3 || config.n_source < 1 || config.n_source > k - 2) {
    throw Error(ErrorKind::NotEnoughClusters, std::to_string(k) + " clusters for n_source=" +
                                                  std::to_string(config.n_source));
  }
  std::vector<int> order(k);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return split.clusters[a].member_count > split.clusters[b].member_count;
  });
  for (int rank = 0; rank < k; ++rank) {
    Cluster& cl = split.clusters[order[rank]];
    cl.role = rank < config.n_source    ? DomainRole::Source
              : rank == config.n_source ? DomainRole::Validation
                                        : DomainRole::Target;
    for (int s : cl.scaffolds) split.scaffolds[s].role = cl.role;
  }

  std::vector<int> candidates;
  for (int i = 0; i < static_cast<int>(split.scaffolds.size()); ++i) {
    const ScaffoldRecord& s = split.scaffolds[i];
    if (s.role == DomainRole::Target && static_cast<int>(s.members.size()) >= config.task_threshold) {
      candidates.push_back(i);
    }
  }
  std::stable_sort(candidates.begin(), candidates.end(), [&](int a, int b) {
    const auto& sa = split.scaffolds[a];
    const auto& sb = split.scaffolds[b];
    if (sa.members.size() != sb.members.size()) return sa.members.size() > sb.members.size();
    return sa.key < sb.key;
  });
  if (static_cast<int>(candidates.size()) > config.max_tasks) candidates.resize(config.max_tasks);
  split.zero_shot_tasks = std::move(candidates);
}

SeparationAudit audit(const DomainSplit& split, const BenchConfig& config) {
  SeparationAudit out;
  out.tau_dist = config.tau_dist;
  const DomainRole roles[3] = {DomainRole::Source, DomainRole::Validation, DomainRole::Target};

  std::vector<std::vector<double>> all;
  for (const ScaffoldRecord& s : split.scaffolds) all.push_back(s.descriptor);
  const auto normalized = all.empty() ? all : zscore(all);

  std::vector<std::vector<std::vector<double>>> sets(3);
  for (int r = 0; r < 3; ++r) {
    for (int i : split.scaffolds_with_role(roles[r])) {
      sets[r].push_back(normalized[i]);
      out.order.push_back(i);
    }
  }
  out.w1.assign(9, 0.0);
  for (int a = 0; a < 3; ++a) {
    for (int b = a + 1; b < 3; ++b) {
      double v = 0.0;
      if (!sets[a].empty() && !sets[b].empty()) {
        v = sliced_w1(sets[a], sets[b], config.w1_projections, derive_seed(config.seed, 0x7731));
      }
      out.w1[a * 3 + b] = out.w1[b * 3 + a] = v;
    }
  }

  const std::size_t n = out.order.size();
  out.tanimoto.assign(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      const double t = tanimoto(split.scaffolds[out.order[i]].fingerprint,
                                split.scaffolds[out.order[j]].fingerprint);
      out.tanimoto[i * n + j] = out.tanimoto[j * n + i] = t;
    }
  }
  int cross = 0, above = 0;
  for (int s : split.scaffolds_with_role(DomainRole::Source)) {
    for (int t : split.scaffolds_with_role(DomainRole::Target)) {
      ++cross;
      if (tanimoto(split.scaffolds[s].fingerprint, split.scaffolds[t].fingerprint) > out.tanimoto_threshold) {
        ++above;
      }
    }
  }
  out.cross_fraction = cross > 0 ? static_cast<double>(above) / cross : 0.0;
  out.pass = out.min_cross_w1() >= config.tau_dist;
  return out;
}

DomainSplit build_split(const Dataset& data, const BenchConfig& config) {
  DomainSplit split;
  split.scaffolds = extract_scaffolds(data, config, &split.excluded_keys);
  split.clusters = cluster_scaffolds(split.scaffolds, config);
  partition(split, config);
  split.audit = audit(split, config);
  return split;
}

RandomSplit random_split_like(const DomainSplit& split, std::uint64_t seed) {
  const auto source = split.molecules_with_role(DomainRole::Source);
  const auto target = split.molecules_with_role(DomainRole::Target);
  std::vector<int> pool = source;
  pool.insert(pool.end(), target.begin(), target.end());
  std::sort(pool.begin(), pool.end());
  Rng rng(seed);
  rng.shuffle(pool);
  RandomSplit out;
  out.source.assign(pool.begin(), pool.begin() + source.size());
  out.target.assign(pool.begin() + source.size(), pool.end());
  std::sort(out.source.begin(), out.source.end());
  std::sort(out.target.begin(), out.target.end());
  return out;
}

}  // namespace oodmol
