// Acceptance suite: one PASS/FAIL line per criterion.
//
//   oodmol_acceptance [--only name[,name...]] [--threads N] [--workdir DIR]
//
// Exit status is 0 only when every selected criterion passes.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <numbers>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#ifdef __GLIBC__
#include <malloc.h>
#endif

#include <CLI11.hpp>
#include <Eigen/Dense>

#include "gradcheck.hpp"
#include "oodmol/adapt.hpp"
#include "oodmol/artifacts.hpp"
#include "oodmol/baselines.hpp"
#include "oodmol/benchgen.hpp"
#include "oodmol/chemsim.hpp"
#include "oodmol/clustering.hpp"
#include "oodmol/descriptors.hpp"
#include "oodmol/error.hpp"
#include "oodmol/grpo.hpp"
#include "oodmol/pipeline.hpp"
#include "oodmol/retrieval.hpp"
#include "oodmol/rng.hpp"
#include "oodmol/wasserstein.hpp"
#include "test_support.hpp"

using namespace oodmol;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

// Collects failed checks with a short description.
class Checker {
 public:
  void near(const std::string& what, double got, double want, double tol) {
    ++count_;
    if (!(std::abs(got - want) <= tol)) fail(what + ": got " + num(got) + ", want " + num(want));
  }
  void truth(const std::string& what, bool ok) {
    ++count_;
    if (!ok) fail(what);
  }
  void fail(const std::string& msg) {
    if (failures_.size() < 5) failures_.push_back(msg);
    ++failed_;
  }
  Outcome outcome(const std::string& summary) const {
    Outcome o;
    o.pass = failed_ == 0;
    o.detail = std::to_string(count_ - failed_) + "/" + std::to_string(count_) + " checks";
    if (!summary.empty()) o.detail += ", " + summary;
    for (const auto& f : failures_) o.detail += "; " + f;
    return o;
  }
  static std::string num(double v, int prec = 6) {
    char b[64];
    std::snprintf(b, sizeof b, "%.*f", prec, v);
    return b;
  }

 private:
  int count_ = 0;
  int failed_ = 0;
  std::vector<std::string> failures_;
};

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

Fingerprint bit_range(int lo, int hi) {
  Fingerprint f(kFingerprintLength);
  for (int b = lo; b < hi; ++b) f.set(b);
  return f;
}

RowMatrix rows(std::initializer_list<std::initializer_list<double>> values) {
  RowMatrix m(values.size(), values.begin()->size());
  int i = 0;
  for (const auto& r : values) {
    int j = 0;
    for (double v : r) m(i, j++) = v;
    ++i;
  }
  return m;
}

Outcome equation_oracles() {
  Checker c;
  const double tol = 1e-6;
  MolGraph acet = parse_smiles("CC(=O)Nc1ccccc1");
  c.near("acetanilide atoms", acet.atom_count(), 10, 0);
  c.near("acetanilide bonds", acet.bond_count(), 10, 0);
  c.near("acetanilide rings", acet.cyclomatic_number(), 1, 0);
  MolGraph bz = parse_smiles("c1ccccc1");
  for (int i = 0; i < 6; ++i) c.near("benzene implicit H", implicit_h_count(bz, i), 1, 0);
  c.truth("ethylbenzene scaffold", canonical_key(murcko_scaffold(parse_smiles("CCc1ccccc1"))) == canonical_key(bz));
  MolGraph dpm = parse_smiles("c1ccc(Cc2ccccc2)cc1");
  c.truth("diphenylmethane scaffold", canonical_key(murcko_scaffold(dpm)) == canonical_key(dpm));
  c.near("ethylbenzene fragments", fragment(parse_smiles("CCc1ccccc1")).size(), 2, 0);
  c.near("ether fragments", fragment(parse_smiles("CCOC(C)C")).size(), 3, 0);

  Fingerprint a(16), b(16);
  for (int i = 0; i < 7; ++i) a.set(i);
  for (int i = 4; i < 12; ++i) b.set(i);
  c.near("tanimoto 3/12", tanimoto(a, b), 0.25, tol);
  Fingerprint x(4), y(4);
  x.set(0), x.set(1), y.set(0), y.set(2);
  c.near("cosine", cosine_sim(x, y, 0.0), 0.5, tol);

  MolGraph p2 = parse_smiles("CC"), p3 = parse_smiles("CCC");
  c.near("WL raw path2/path3", wl_raw_kernel(p2, p3, 1), 10, tol);
  c.near("WL self path2", wl_raw_kernel(p2, p2, 1), 8, tol);
  c.near("WL self path3", wl_raw_kernel(p3, p3, 1), 14, tol);
  c.near("WL normalized", wl_kernel(p2, p3, 1), 10.0 / std::sqrt(112.0), tol);
  MolGraph ring = parse_smiles("C1=CC=CC=C1"), chain = parse_smiles("CCCCCC");
  c.near("WL ring/chain h=0", wl_kernel(ring, chain, 0), 1.0, tol);
  c.truth("WL ring/chain h=1 < 1", wl_kernel(ring, chain, 1) < 1.0);

  auto d = descriptor(bz);
  c.near("benzene heavy atoms", d[0], 6, tol);
  c.near("benzene rings", d[1], 1, tol);
  c.near("benzene max ring", d[2], 6, tol);
  c.near("benzene ring fraction", d[5], 1, tol);
  c.near("benzene multiple bonds", d[6], 1, tol);
  c.near("benzene flex", d[8], 0, tol);
  c.near("biphenyl rotatable", rotatable_ratio(parse_smiles("c1ccc(-c2ccccc2)cc1")), 1.0 / 13.0, tol);
  c.near("naphthalene level", scaffold_level(parse_smiles("c1ccc2ccccc2c1")), 3, 0);

  auto z = zscore({{1.0}, {2.0}, {3.0}});
  c.near("z(1)", z[0][0], -1.0 / std::sqrt(2.0 / 3.0), tol);
  c.near("z(3)", z[2][0], 1.0 / std::sqrt(2.0 / 3.0), tol);
  auto km = kmeanspp({{0.0}, {0.1}, {10.0}, {10.1}}, 2, 42);
  c.truth("kmeans 1D split", km.assignment[0] == km.assignment[1] && km.assignment[2] == km.assignment[3] &&
                                 km.assignment[0] != km.assignment[2]);
  c.truth("quotas (6,3,1,1,1)", allocate_quotas({50, 30, 10, 6, 4}, 12, 0.5) == std::array<int, 5>{6, 3, 1, 1, 1});
  c.near("W1 {0,2} vs {1,3}", wasserstein1_1d({0, 2}, {1, 3}), 1.0, tol);
  c.near("sliced W1 point masses", sliced_w1({{0.0, 0.0}}, {{1.0, 0.0}}, 20000, 42), 2.0 / std::numbers::pi, 0.01);
  Rng rng(42);
  Eigen::MatrixXd g(1000, 4);
  for (int i = 0; i < 1000; ++i)
    for (int j = 0; j < 4; ++j) g(i, j) = rng.normal();
  c.near("collapse rank gaussian", collapse_rank(g, 0.99), 4, 0);

  c.near("coral d=1", coral_term(rows({{-std::sqrt(2.0)}, {std::sqrt(2.0)}}), rows({{1.0}, {1.0}})), 1.0, tol);
  DomainFeatures s1{rows({{0, 0}, {2, 0}}), rows({{0, 0}, {2, 0}})};
  DomainFeatures s2{rows({{1, 1}, {-1, -1}}), rows({{0, 0}, {4, 0}})};
  DomainFeatures t{rows({{0, 0}, {0, 2}}), rows({{0, 0}, {2, 0}})};
  AlignmentWeights w;
  w.w_sub = 0.5;
  const std::vector<double> gamma = {0.75, 0.25};
  c.near("da_loss two sources", da_loss({s1, s2}, gamma, t, w).value, 0.2109375, tol);
  c.near("total loss", total_loss(1.0, 0.5, AlignmentWeights{}, 10, 10), 1.5, tol);
  c.near("total loss warm-up", total_loss(1.0, 0.5, AlignmentWeights{}, 0, 10), 1.0, tol);
  AlignmentWeights cw = weight_controller_step(initial_weights(), 1.0, 0.4, 0.1);
  c.near("controller w_mol", cw.w_mol, 0.25, tol);
  c.near("controller w_sub", cw.w_sub, 1.0, tol);

  const std::vector<Fingerprint> targets = {bit_range(0, 81), bit_range(0, 25), bit_range(0, 4)};
  c.near("hub score", hub_score(bit_range(0, 100), targets, 0.3, 0.45), 1.5, tol);
  c.near("s_rank", s_rank(0.8, 99), 0.8 * std::log(100.0), tol);
  c.near("state tail", build_state(bit_range(0, 1), bit_range(0, 1), 1.0, 99, std::log(1000.0))[257],
         std::log(100.0) / std::log(1000.0), tol);
  const double r123[] = {1, 2, 3};
  auto adv = advantages(r123);
  c.near("advantage -", adv[0], -1.224744871391589, tol);
  c.near("advantage 0", adv[1], 0.0, tol);
  c.near("advantage +", adv[2], 1.224744871391589, tol);
  const double dl[] = {std::log(2.0)};
  c.near("kl ln2", kl_estimate(dl), 2.0 - std::log(2.0) - 1.0, tol);
  auto rec = [](double ratio, double adv_value) {
    ActionRecord r;
    r.bits = {1};
    r.valid = true;
    r.logp = std::log(ratio);
    r.advantage = adv_value;
    return r;
  };
  c.near("clip positive", grpo_loss(std::vector{rec(1.5, 1), rec(1.5, 1)}, 0.2, 0.0).surrogate, 1.2, tol);
  c.near("clip negative", grpo_loss(std::vector{rec(0.5, -1), rec(0.5, -1)}, 0.2, 0.0).surrogate, -0.8, tol);
  return c.outcome("");
}

Outcome gradient_checks() {
  using namespace oodmol::fixtures;
  Checker c;
  double worst = 0.0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    Encoder m = gradcheck_model(seed);
    GradCheckData d(seed);
    auto track = [&](const std::string& name, const GradCheckResult& r) {
      worst = std::max(worst, r.max_rel_error);
      c.truth(name + " seed " + std::to_string(seed) + " rel " + Checker::num(r.max_rel_error, 8),
              r.max_rel_error < 1e-4 && r.checked == 20);
    };
    Eigen::VectorXd g;
    regression_loss(m, d.groups[0], &g);
    track("L_reg", finite_difference_check(m, g, [&](const Encoder& e) { return regression_loss(e, d.groups[0]); },
                                           20, seed));
    for (auto scale : {CoralScale::Mol, CoralScale::Sub}) {
      coral_through_encoder(m, d, scale, &g);
      track(scale == CoralScale::Mol ? "CORAL mol" : "CORAL sub",
            finite_difference_check(
                m, g, [&](const Encoder& e) { return coral_through_encoder(e, d, scale); }, 20, seed + 10));
    }
    AlignmentWeights w;
    w.w_reg = 0.8;
    w.w_mol = 0.6;
    w.w_sub = 0.9;
    composite_loss(m, d.groups, d.gamma, d.target, w, 10, 10, &g);
    track("composite", finite_difference_check(
                           m, g,
                           [&](const Encoder& e) {
                             return composite_loss(e, d.groups, d.gamma, d.target, w, 10, 10).total;
                           },
                           20, seed + 20));
  }
  return c.outcome("max relative error " + Checker::num(worst, 8));
}

Outcome kernel_properties() {
  Checker c;
  std::vector<MolGraph> gs;
  for (const char* smi : {"c1ccccc1", "c1ccncc1", "C1CCCCC1", "C1CCOCC1", "c1ccc2ccccc2c1", "c1ccsc1", "C1CCC1",
                          "c1ccc(Cc2ccccc2)cc1", "C1CCNCC1", "c1ccc(-c2ccccc2)cc1", "C1CC2CCC1C2", "O=C1CCCCC1"})
    gs.push_back(parse_smiles(smi));
  const std::size_t n = gs.size();
  const auto gram = wl_gram(gs);
  Eigen::MatrixXd m(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) m(i, j) = gram[i * n + j];
  const double min_eig = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(m).eigenvalues().minCoeff();
  c.truth("WL Gram PSD", min_eig >= -1e-8);
  c.truth("WL Gram symmetric", (m - m.transpose()).norm() == 0.0);

  Rng rng(2024);
  for (const char* smi : {"CC(=O)Nc1ccccc1", "OCC1CCN(C)CC1"}) {
    MolGraph g = parse_smiles(smi);
    const Fingerprint fp = morgan_fingerprint(g);
    const std::string key = canonical_key(g);
    for (int t = 0; t < 100; ++t) {
      std::vector<int> p(g.atom_count());
      std::iota(p.begin(), p.end(), 0);
      rng.shuffle(p);
      MolGraph q = permute_atoms(g, p);
      c.truth(std::string("fingerprint permutation ") + smi, morgan_fingerprint(q) == fp);
      c.truth(std::string("key permutation ") + smi, canonical_key(q) == key);
    }
  }
  for (int t = 0; t < 1000; ++t) {
    Fingerprint a(128), b(128);
    for (int i = 0; i < 128; ++i) {
      if (rng.bernoulli(0.25)) a.set(i);
      if (rng.bernoulli(0.25)) b.set(i);
    }
    const double s = tanimoto(a, b), co = cosine_sim(a, b);
    c.truth("tanimoto symmetric/range", s == tanimoto(b, a) && s >= 0.0 && s <= 1.0);
    c.truth("cosine symmetric/range", co == cosine_sim(b, a) && co >= 0.0 && co <= 1.0);
  }
  return c.outcome("min eigenvalue " + Checker::num(min_eig, 10));
}

Outcome benchmark_integrity() {
  Checker c;
  const RunConfig cfg = fixtures::shipped_config("synthetic_default");
  const Dataset& data = fixtures::shipped_dataset("synthetic_default");
  const DomainSplit split = build_split(data, cfg.bench);
  c.near("cluster count", split.clusters.size(), cfg.bench.k_total, 0);

  std::map<DomainRole, int> roles;
  std::vector<int> owner(split.scaffolds.size(), -1);
  std::array<int, kLevelCount> level_sizes{}, level_clusters{};
  for (const ScaffoldRecord& s : split.scaffolds) ++level_sizes[s.level];
  for (const Cluster& cl : split.clusters) {
    ++roles[cl.role];
    ++level_clusters[cl.level];
    c.truth("non-empty cluster", !cl.scaffolds.empty());
    for (int s : cl.scaffolds) {
      c.truth("disjoint clusters", owner[s] == -1);
      owner[s] = cl.id;
      c.truth("role consistent", split.scaffolds[s].role == cl.role);
      c.truth("level consistent", split.scaffolds[s].level == cl.level);
    }
  }
  c.truth("every scaffold clustered", std::count(owner.begin(), owner.end(), -1) == 0);
  c.truth("quota conservation",
          level_clusters == allocate_quotas(level_sizes, cfg.bench.k_total, cfg.bench.alpha_comp));
  c.near("source clusters", roles[DomainRole::Source], 6, 0);
  c.near("validation clusters", roles[DomainRole::Validation], 1, 0);
  c.near("target clusters", roles[DomainRole::Target], 5, 0);

  // Voronoi: each scaffold is nearest to its own centroid among the clusters of
  // its level, in the per-level z-scored descriptor space.
  std::vector<std::vector<double>> desc;
  std::vector<int> levels;
  for (const ScaffoldRecord& s : split.scaffolds) desc.push_back(s.descriptor), levels.push_back(s.level);
  const auto zs = zscore_per_level(desc, levels);
  std::map<int, Point> centroid;
  for (const Cluster& cl : split.clusters) {
    Point m(zs[0].size(), 0.0);
    for (int s : cl.scaffolds)
      for (std::size_t j = 0; j < m.size(); ++j) m[j] += zs[s][j] / cl.scaffolds.size();
    centroid[cl.id] = m;
  }
  for (std::size_t s = 0; s < split.scaffolds.size(); ++s) {
    const double own = squared_distance(zs[s], centroid[owner[s]]);
    for (const Cluster& cl : split.clusters)
      if (cl.level == split.scaffolds[s].level)
        c.truth("voronoi", own <= squared_distance(zs[s], centroid[cl.id]) + 1e-9);
  }

  c.truth("zero-shot tasks present", !split.zero_shot_tasks.empty());
  for (int t : split.zero_shot_tasks) {
    c.truth("task is target", split.scaffolds[t].role == DomainRole::Target);
    c.truth("task threshold", static_cast<int>(split.scaffolds[t].members.size()) >= cfg.bench.task_threshold);
  }
  // independent recount of the cross-domain Tanimoto fraction
  int above = 0, pairs = 0;
  for (int s : split.scaffolds_with_role(DomainRole::Source))
    for (int t : split.scaffolds_with_role(DomainRole::Target)) {
      ++pairs;
      above += tanimoto(split.scaffolds[s].fingerprint, split.scaffolds[t].fingerprint) > 0.5;
    }
  c.near("cross Tanimoto>0.5 fraction", pairs ? double(above) / pairs : 1.0, 0.0, 0.0);
  c.near("audit cross fraction", split.audit.cross_fraction, 0.0, 0.0);
  return c.outcome(std::to_string(split.scaffolds.size()) + " scaffolds, " +
                   std::to_string(split.zero_shot_tasks.size()) + " tasks");
}

RunConfig seeded(RunConfig cfg, std::uint64_t seed) {
  cfg.seed = seed;
  cfg.bench.seed = seed;
  return cfg;
}

Outcome degradation() {
  Checker c;
  const RunConfig base = fixtures::shipped_config("synthetic_default");
  const Dataset& data = fixtures::shipped_dataset("synthetic_default");
  std::vector<double> ratios;
  for (std::uint64_t seed = 42; seed < 52; ++seed) {
    const RunConfig cfg = seeded(base, seed);
    const Workspace ws = make_workspace(data, build_split(data, cfg.bench));
    const double strict = train_baseline(ws, cfg, SplitKind::Strict, seed).mean_mae;
    const double random = train_baseline(ws, cfg, SplitKind::Random, seed).mean_mae;
    const double ratio = strict / random;
    ratios.push_back(ratio);
    std::cerr << "  degradation seed " << seed << ": strict " << Checker::num(strict, 4) << " random "
              << Checker::num(random, 4) << " ratio " << Checker::num(ratio, 2) << "x\n";
    c.truth("seed " + std::to_string(seed) + " ratio " + Checker::num(ratio, 2), ratio >= 2.0);
  }
  return c.outcome("ratios min " + Checker::num(*std::min_element(ratios.begin(), ratios.end()), 2) + "x median " +
                   Checker::num(median(ratios), 2) + "x");
}

class PlantedBandit : public RewardOracle {
 public:
  PlantedBandit(int m, std::vector<int> planted) : target_(m, 0) {
    for (int j : planted) target_[j] = 1;
  }
  std::optional<double> reward(const std::vector<std::uint8_t>& a, std::uint64_t) const override {
    int ham = 0;
    for (std::size_t j = 0; j < a.size(); ++j) ham += a[j] != target_[j];
    return ham == 0 ? 1.0 : -0.1 * ham;
  }

 private:
  std::vector<std::uint8_t> target_;
};

Outcome planted_bandit() {
  int hits = 0;
  const int m = 10;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(derive_seed(seed, 0xba));
    RowMatrix states(m, kStateDim);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < kStateDim; ++j) states(i, j) = j < 256 ? (rng.bernoulli(0.3) ? 1.0 : 0.0) : rng.uniform();
    const int x = static_cast<int>(rng.uniform_index(m));
    int y = static_cast<int>(rng.uniform_index(m - 1));
    if (y >= x) ++y;
    PlantedBandit env(m, {x, y});
    PolicyState st(init_policy({}, derive_seed(seed, 1), 0.2));
    GrpoConfig cfg;  // 40 steps, G = 33
    train_policy(env, states, st, cfg, derive_seed(seed, 2));
    std::vector<std::string> keys;
    for (int j = 0; j < m; ++j) keys.push_back(std::string(1, static_cast<char>('a' + j)));
    auto top = infer_select(st.policy, states, 2, keys);
    std::sort(top.begin(), top.end());
    hits += top == std::vector<int>{std::min(x, y), std::max(x, y)};
  }
  return {hits >= 9, std::to_string(hits) + "/10 seeds recover the planted pair"};
}

Outcome poma_improvement(int threads) {
  Checker c;
  RunConfig base = fixtures::shipped_config("planted");
  base.selector.grpo.threads = threads;
  const Dataset& data = fixtures::shipped_dataset("planted");
  std::vector<std::string> policies = {"grpo"};
  for (auto p : kHeuristicPolicies) policies.emplace_back(p);
  std::map<std::string, std::vector<double>> imp;
  for (std::uint64_t seed = 42; seed < 52; ++seed) {
    const RunConfig cfg = seeded(base, seed);
    const Workspace ws = make_workspace(data, build_split(data, cfg.bench));
    const BaselineResult b = train_baseline(ws, cfg, SplitKind::Strict, seed);
    std::string line = "  poma seed " + std::to_string(seed) + ":";
    auto run = [&](const std::string& policy, const std::string& ablation, const std::string& label) {
      const PomaResult r = poma_run(ws, cfg, policy, b.model, b.shallow, seed, Ablation::parse(ablation));
      imp[label].push_back(r.improvement_pct);
      line += " " + label + "=" + Checker::num(r.improvement_pct, 2) + "%";
    };
    for (const auto& p : policies) run(p, "full", p);
    run("grpo", "no-mol", "w/o Mol-CORAL");
    run("grpo", "no-sub", "w/o Sub-CORAL");
    std::cerr << line << "\n";
  }
  const double g = median(imp["grpo"]);
  c.truth("grpo median " + Checker::num(g, 2) + "% >= 3%", g >= 3.0);
  std::string summary = "median grpo " + Checker::num(g, 2) + "%";
  for (const auto& [label, values] : imp) {
    if (label == "grpo") continue;
    const double m = median(values);
    summary += ", " + label + " " + Checker::num(m, 2) + "%";
    c.truth("grpo beats " + label + " (" + Checker::num(m, 2) + "%)", g > m);
  }
  return c.outcome(summary);
}

// Hashes every file a manifest records, plus the manifest's output table.
std::map<std::string, std::string> run_hashes(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    const std::string rel = fs::relative(e.path(), dir).string();
    if (rel == kManifestName || rel.find(".lock") != std::string::npos) continue;
    out[rel] = sha256_file(e.path());
  }
  const Manifest m = Manifest::load(dir);
  m.verify(dir);
  for (const auto& [k, v] : m.outputs) out["manifest:" + k] = v;
  return out;
}

Outcome determinism(const fs::path& workdir, int threads) {
  Checker c;
  RunConfig cfg = fixtures::shipped_config("planted");
  const fs::path dataset = fixtures::source_path("data/planted.csv");
  std::vector<std::map<std::string, std::string>> hashes;
  for (int rep = 0; rep < 2; ++rep) {
    // the second run uses a different thread count; results must not depend on it
    cfg.selector.grpo.threads = rep == 0 ? 1 : std::max(2, threads);
    // same leaf name in both repetitions: the report labels rows by run directory name
    const fs::path dir = workdir / ("determinism_" + std::to_string(rep)) / "run";
    fs::remove_all(dir);
    fs::create_directories(dir);
    std::ostringstream sink;
    cmd_bench_build(dataset, cfg, dir, sink);
    cmd_bench_audit(cfg, dir, sink);
    cmd_train_baseline(cfg, dir, SplitKind::Strict, sink);
    cmd_train_baseline(cfg, dir, SplitKind::Random, sink);
    cmd_poma_run(cfg, dir, "grpo", {}, sink);
    cmd_poma_run(cfg, dir, "mixed", {}, sink);
    cmd_report({dir}, sink, dir / "report.csv");
    hashes.push_back(run_hashes(dir));
  }
  c.truth("same artifact set", hashes[0].size() == hashes[1].size());
  int ckpts = 0;
  for (const auto& [k, v] : hashes[0]) {
    auto it = hashes[1].find(k);
    c.truth(k + " identical", it != hashes[1].end() && it->second == v);
    ckpts += k.ends_with(".ckpt") && k.find("manifest:") == std::string::npos;
  }
  return c.outcome(std::to_string(hashes[0].size()) + " artifacts compared, " + std::to_string(ckpts) +
                   " checkpoints");
}

Outcome advantage_kl_invariants() {
  Checker c;
  Rng rng(99);
  double worst_mu = 0.0, min_kl = 1e300;
  for (int t = 0; t < 10000; ++t) {
    const int g = 2 + static_cast<int>(rng.uniform_index(64));
    std::vector<double> r(g), d(g);
    const double scale = std::exp(rng.uniform(-6.0, 6.0));
    for (int i = 0; i < g; ++i) {
      r[i] = rng.bernoulli(0.05) ? 0.0 : scale * rng.normal() + rng.uniform(-5.0, 5.0);
      d[i] = rng.uniform(-3.0, 3.0) * (rng.bernoulli(0.1) ? 0.0 : 1.0);
    }
    const auto a = advantages(r);
    double mu = 0.0;
    for (double v : a) mu += v;
    mu /= g;
    worst_mu = std::max(worst_mu, std::abs(mu));
    if (!(std::abs(mu) < 1e-9)) c.fail("advantage mean " + Checker::num(mu, 12));
    const double kl = kl_estimate(d);
    min_kl = std::min(min_kl, kl);
    c.truth("kl >= 0", kl >= 0.0);
  }
  AlignmentWeights w = initial_weights();
  for (int t = 0; t < 10000; ++t) {
    auto draw = [&] { return rng.bernoulli(0.05) ? 0.0 : std::exp(rng.uniform(-15.0, 5.0)); };
    w = weight_controller_step(w, draw(), draw(), draw());
    c.truth("controller bounds", w.w_reg >= 0.1 && w.w_reg <= 1.0 && w.w_mol >= 0.01 && w.w_mol <= 1.0 &&
                                     w.w_sub >= 0.01 && w.w_sub <= 1.0);
    if (t % 1000 == 999) w = initial_weights();
  }
  return c.outcome("max |mean advantage| " + Checker::num(worst_mu, 15) + ", min KL " + Checker::num(min_kl, 6));
}

}  // namespace

int main(int argc, char** argv) {
#ifdef __GLIBC__
  mallopt(M_MMAP_THRESHOLD, 64 << 20);
  mallopt(M_TRIM_THRESHOLD, 256 << 20);
#endif
  CLI::App app{"oodmol acceptance suite"};
  std::string only;
  int threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  std::string workdir = (fs::temp_directory_path() / "oodmol_acceptance").string();
  app.add_option("--only", only, "comma-separated criterion names");
  app.add_option("--threads", threads, "rollout threads for GRPO");
  app.add_option("--workdir", workdir, "scratch directory for command runs");
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"equation-oracles", equation_oracles},
      {"gradient-checks", gradient_checks},
      {"kernel-fingerprint-properties", kernel_properties},
      {"benchmark-integrity", benchmark_integrity},
      {"degradation-analog", degradation},
      {"grpo-planted-bandit", planted_bandit},
      {"poma-improvement", [&] { return poma_improvement(threads); }},
      {"determinism", [&] { return determinism(workdir, threads); }},
      {"advantage-kl-invariants", advantage_kl_invariants},
  };
  std::set<std::string> selected;
  std::stringstream ss(only);
  for (std::string item; std::getline(ss, item, ',');)
    if (!item.empty()) selected.insert(item);

  int failed = 0, ran = 0;
  for (const auto& [name, fn] : criteria) {
    if (!selected.empty() && !selected.count(name)) continue;
    ++ran;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    failed += !o.pass;
    std::printf("%s %-30s %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  if (ran == 0) {
    std::fprintf(stderr, "no criterion matched --only %s\n", only.c_str());
    return 2;
  }
  std::printf("%d/%d criteria passed\n", ran - failed, ran);
  std::error_code ec;
  fs::remove_all(fs::path(workdir) / "determinism_0", ec);
  fs::remove_all(fs::path(workdir) / "determinism_1", ec);
  return failed == 0 ? 0 : 1;
}
