#include "oodmol/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "oodmol/artifacts.hpp"
#include "oodmol/baselines.hpp"
#include "oodmol/checkpoint.hpp"
#include "oodmol/dataset_io.hpp"
#include "oodmol/environment.hpp"
#include "oodmol/retrieval.hpp"
#include "oodmol/rng.hpp"
#include "oodmol/synth.hpp"
#include "oodmol/wasserstein.hpp"

namespace oodmol {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

enum SeedTag : std::uint64_t {
  kSeedInit = 1,
  kSeedBaseline,
  kSeedRandomSplit,
  kSeedMaeBase,
  kSeedPolicyInit,
  kSeedGrpo,
  kSeedRandomPolicy,
  kSeedFinetune,
};

std::string fmt(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

double mean_of(const std::vector<TaskScore>& tasks) {
  double s = 0.0;
  int n = 0;
  for (const TaskScore& t : tasks) {
    if (!t.error.empty()) continue;
    s += t.mae;
    ++n;
  }
  return n ? s / n : 0.0;
}

json tasks_json(const std::vector<TaskScore>& tasks) {
  json arr = json::array();
  for (const TaskScore& t : tasks) {
    json j{{"key", t.key}, {"size", t.size}, {"mae", t.mae}};
    if (!t.error.empty()) j["error"] = t.error;
    arr.push_back(std::move(j));
  }
  return arr;
}

Manifest open_manifest(const fs::path& dir, const RunConfig& config) {
  Manifest m;
  if (fs::exists(dir / kManifestName)) {
    m = Manifest::load(dir);
    m.verify(dir);
  }
  m.tool_version = kToolVersion;
  m.config_json = config.to_json();
  return m;
}

void write_artifact(Manifest& m, const fs::path& dir, const std::string& rel, const std::string& bytes) {
  atomic_write(dir / rel, bytes);
  m.record_output(dir, rel);
}

void set_result(Manifest& m, const std::string& key, json value) {
  json r = json::parse(m.results_json);
  r[key] = std::move(value);
  m.results_json = r.dump();
}

Workspace load_workspace(const fs::path& dir, const RunConfig& config) {
  const fs::path split_path = dir / "split.json";
  if (!fs::exists(split_path)) throw Error(ErrorKind::Io, "no split.json in " + dir.string() + "; run `bench build`");
  const std::string text = read_file(split_path);
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::HashMismatch, std::string("malformed split.json: ") + e.what());
  }
  const fs::path dataset = j.at("dataset").get<std::string>();
  if (sha256_file(dataset) != j.at("dataset_sha256").get<std::string>()) {
    throw Error(ErrorKind::HashMismatch, "dataset " + dataset.string() + " changed since `bench build`");
  }
  Dataset data = read_dataset_csv(dataset, j.at("property").get<std::string>());
  DomainSplit split = split_from_json(text, data, config.bench);
  return make_workspace(std::move(data), std::move(split));
}

std::string task_table(const std::vector<TaskScore>& base, const std::vector<TaskScore>& tuned, bool with_rank) {
  std::ostringstream os;
  os << "task                                      size   baseline_mae   adapted_mae   improve%";
  if (with_rank) os << "   rank_before  rank_after";
  os << "\n";
  for (std::size_t i = 0; i < tuned.size(); ++i) {
    char line[256];
    const double b = base[i].mae;
    if (!tuned[i].error.empty()) {
      std::snprintf(line, sizeof line, "%-40s %5d   %12s   failed: %s\n", tuned[i].key.c_str(), tuned[i].size,
                    fmt(b).c_str(), tuned[i].error.c_str());
      os << line;
      continue;
    }
    std::snprintf(line, sizeof line, "%-40s %5d   %12s   %11s   %8s", tuned[i].key.c_str(), tuned[i].size,
                  fmt(b).c_str(), fmt(tuned[i].mae).c_str(), fmt(100.0 * (b - tuned[i].mae) / b, 2).c_str());
    os << line;
    if (with_rank) {
      std::snprintf(line, sizeof line, "   %11d  %10d", tuned[i].collapse_before, tuned[i].collapse_after);
      os << line;
    }
    os << "\n";
  }
  return os.str();
}

}  // namespace

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::BadConfig:
    case ErrorKind::UnknownPolicy:
      return 1;
    case ErrorKind::DatasetParse:
      return 2;
    case ErrorKind::InfeasibleQuota:
    case ErrorKind::NotEnoughClusters:
      return 3;
    case ErrorKind::HashMismatch:
      return 4;
    case ErrorKind::Locked:
      return 5;
    default:
      return 6;
  }
}

LabeledSet Workspace::labeled(const std::vector<int>& molecules) const {
  LabeledSet s;
  for (int i : molecules) {
    s.inputs.push_back(&inputs.at(i));
    s.labels.push_back(data.molecules[i].label);
  }
  return s;
}

UnlabeledSet Workspace::unlabeled(const std::vector<int>& molecules) const {
  UnlabeledSet s;
  for (int i : molecules) s.inputs.push_back(&inputs.at(i));
  return s;
}

Workspace make_workspace(Dataset data, DomainSplit split) {
  Workspace ws;
  ws.data = std::move(data);
  ws.split = std::move(split);
  ws.inputs.reserve(ws.data.molecules.size());
  for (const Molecule& m : ws.data.molecules) ws.inputs.push_back(prepare_input(m.graph));
  return ws;
}

std::string_view to_string(SplitKind kind) { return kind == SplitKind::Strict ? "strict" : "random"; }

std::vector<TaskScore> score_tasks(const Workspace& ws, const Encoder& model) {
  std::vector<TaskScore> out;
  for (int s : ws.split.zero_shot_tasks) {
    const ScaffoldRecord& rec = ws.split.scaffolds[s];
    TaskScore t;
    t.key = rec.key;
    t.size = static_cast<int>(rec.members.size());
    t.mae = evaluate_mae(model, ws.labeled(rec.members));
    out.push_back(std::move(t));
  }
  return out;
}

BaselineResult train_baseline(const Workspace& ws, const RunConfig& config, SplitKind kind, std::uint64_t seed) {
  BaselineResult r;
  r.kind = kind;
  std::vector<int> train, target;
  if (kind == SplitKind::Strict) {
    train = ws.split.molecules_with_role(DomainRole::Source);
    target = ws.split.molecules_with_role(DomainRole::Target);
  } else {
    RandomSplit rs = random_split_like(ws.split, derive_seed(seed, kSeedRandomSplit));
    train = std::move(rs.source);
    target = std::move(rs.target);
  }
  Encoder model = init_encoder(config.encoder, derive_seed(seed, kSeedInit));
  SourceAssembly assembly{{ws.labeled(train)}, {1.0}};

  AdaptConfig ac = config.finetune_config(derive_seed(seed, kSeedBaseline));
  ac.use_mol = ac.use_sub = false;
  ac.epochs = config.train.shallow_epochs;
  r.history = adapt_run(model, assembly, {}, ac);
  r.shallow = model;
  ac.epoch_offset = config.train.shallow_epochs;
  ac.epochs = config.train.baseline_epochs - config.train.shallow_epochs;
  const AdaptHistory rest = adapt_run(model, assembly, {}, ac);
  r.history.epochs.insert(r.history.epochs.end(), rest.epochs.begin(), rest.epochs.end());
  r.model = std::move(model);

  r.target_mae = evaluate_mae(r.model, ws.labeled(target));
  r.mean_mae = r.target_mae;
  if (kind == SplitKind::Strict) {
    r.tasks = score_tasks(ws, r.model);
    if (!r.tasks.empty()) r.mean_mae = mean_of(r.tasks);
  }
  return r;
}

Ablation Ablation::parse(const std::string& name) {
  if (name.empty() || name == "full") return {true, true};
  if (name == "no-mol") return {false, true};
  if (name == "no-sub") return {true, false};
  if (name == "no-align") return {false, false};
  throw Error(ErrorKind::BadConfig, "unknown ablation '" + name + "' (full, no-mol, no-sub, no-align)");
}

std::string Ablation::name() const {
  if (use_mol && use_sub) return "full";
  if (use_sub) return "no-mol";
  if (use_mol) return "no-sub";
  return "no-align";
}

PomaResult poma_run(const Workspace& ws, const RunConfig& config, const std::string& policy, const Encoder& baseline,
                    const Encoder& shallow, std::uint64_t seed, Ablation ablation, std::ostream* rollout_log) {
  if (policy != "grpo" && !is_heuristic_policy(policy)) {
    throw Error(ErrorKind::UnknownPolicy, "unknown policy '" + policy + "'");
  }
  const DomainSplit& split = ws.split;
  const SelectorSettings& sel = config.selector;
  PomaResult res;
  res.policy = policy;
  res.ablation = ablation;

  // proxies from hub scores against the unlabeled zero-shot targets.
  std::vector<const ScaffoldRecord*> source_pool;
  for (int s : split.scaffolds_with_role(DomainRole::Source)) source_pool.push_back(&split.scaffolds[s]);
  std::vector<Fingerprint> target_fps;
  for (int s : split.zero_shot_tasks) target_fps.push_back(split.scaffolds[s].fingerprint);
  if (target_fps.empty()) throw Error(ErrorKind::EmptyTargets, "the split has no zero-shot tasks");

  const std::vector<int> proxy_pos = select_proxies(source_pool, target_fps, sel.n_proxies, sel.retrieval);
  const ScaffoldRecord& anchor = *source_pool[proxy_pos.front()];
  std::vector<int> proxy_molecules;
  for (int p : proxy_pos) {
    res.proxies.push_back(source_pool[p]->key);
    proxy_molecules.insert(proxy_molecules.end(), source_pool[p]->members.begin(), source_pool[p]->members.end());
  }
  std::sort(proxy_molecules.begin(), proxy_molecules.end());

  std::vector<const ScaffoldRecord*> remaining;
  for (std::size_t i = 0; i < source_pool.size(); ++i) {
    if (std::find(proxy_pos.begin(), proxy_pos.end(), static_cast<int>(i)) == proxy_pos.end()) {
      remaining.push_back(source_pool[i]);
    }
  }
  const std::vector<int> pool_pos = build_candidate_pool(anchor, remaining, sel.pool_size, sel.retrieval);
  std::vector<const ScaffoldRecord*> pool;
  for (int p : pool_pos) pool.push_back(remaining[p]);

  std::size_t max_members = 0;
  for (const ScaffoldRecord* c : pool) max_members = std::max(max_members, c->members.size());
  const double c_norm = std::log1p(static_cast<double>(max_members));
  RowMatrix states(static_cast<Eigen::Index>(pool.size()), kStateDim);
  std::vector<Candidate> candidates;
  for (std::size_t j = 0; j < pool.size(); ++j) {
    const double k_wl = wl_kernel(anchor.graph, pool[j]->graph, sel.retrieval.wl_iterations);
    const auto st = build_state(anchor.fingerprint, pool[j]->fingerprint, k_wl, pool[j]->members.size(), c_norm);
    states.row(static_cast<Eigen::Index>(j)) = Eigen::Map<const Eigen::RowVectorXd>(st.data(), kStateDim);
    candidates.push_back({pool[j]->key, ws.labeled(pool[j]->members), s_rank(k_wl, pool[j]->members.size())});
    res.pool_keys.push_back(pool[j]->key);
  }

  // selection
  const int k = sel.select_k;
  if (policy == "grpo") {
    std::vector<double> proxy_labels;
    for (int i : proxy_molecules) proxy_labels.push_back(ws.data.molecules[i].label);
    ProxyEnvironmentConfig ec;
    ec.rollout = config.finetune_config(0);
    ec.rollout.epochs = config.train.proxy_epochs;
    ec.rollout.epoch_offset = config.train.e_warm;
    ec.rollout.use_mol = ablation.use_mol;
    ec.rollout.use_sub = ablation.use_sub;
    ec.base_seed = derive_seed(seed, kSeedMaeBase);
    const ProxyEnvironment env(baseline, candidates, ws.unlabeled(proxy_molecules),
                               std::make_shared<LabelVault>(std::move(proxy_labels)), ec);
    res.mae_base = env.mae_base();

    PolicyConfig pc;
    pc.state_dim = kStateDim;
    pc.hidden = sel.hidden;
    const double rate = std::min(0.5, static_cast<double>(k) / static_cast<double>(pool.size()));
    PolicyState state(init_policy(pc, derive_seed(seed, kSeedPolicyInit), rate));
    train_policy(env, states, state, sel.grpo, derive_seed(seed, kSeedGrpo), &res.rollouts, rollout_log);
    res.selected = infer_select(state.policy, states, k, res.pool_keys);
    res.policy_net = state.policy;
  } else {
    SelectorContext ctx;
    ctx.proxy = &anchor;
    ctx.pool = pool;
    ctx.wl_iterations = sel.retrieval.wl_iterations;
    if (policy == "shallow" || policy == "deep") {
      const Encoder& enc = policy == "shallow" ? shallow : baseline;
      auto mean_embed = [&](const ScaffoldRecord& r) -> Eigen::VectorXd {
        return embed_mol(enc, ws.unlabeled(r.members).inputs).colwise().mean().transpose();
      };
      auto& pool_e = policy == "shallow" ? ctx.shallow_pool : ctx.deep_pool;
      auto& proxy_e = policy == "shallow" ? ctx.shallow_proxy : ctx.deep_proxy;
      proxy_e = mean_embed(anchor);
      for (const ScaffoldRecord* r : pool) pool_e.push_back(mean_embed(*r));
    }
    res.selected = baseline_select(policy, ctx, k, derive_seed(seed, kSeedRandomPolicy));
  }
  for (int j : res.selected) res.selected_keys.push_back(res.pool_keys[j]);

  // fine-tune a copy of the baseline per zero-shot task.
  SourceAssembly assembly;
  std::vector<double> ranks;
  for (int j : res.selected) {
    assembly.groups.push_back(candidates[j].data);
    ranks.push_back(candidates[j].s_rank);
  }
  assembly.gamma = transfer_weights(ranks);
  res.baseline_tasks = score_tasks(ws, baseline);
  for (std::size_t t = 0; t < split.zero_shot_tasks.size(); ++t) {
    const ScaffoldRecord& rec = split.scaffolds[split.zero_shot_tasks[t]];
    TaskScore score;
    score.key = rec.key;
    score.size = static_cast<int>(rec.members.size());
    Encoder model = baseline;
    try {
      AdaptConfig ac = config.finetune_config(derive_seed(seed, kSeedFinetune, t));
      ac.use_mol = ablation.use_mol;
      ac.use_sub = ablation.use_sub;
      const AdaptHistory h = adapt_run(model, assembly, ws.unlabeled(rec.members), ac);
      score.collapse_before = h.collapse_before;
      score.collapse_after = h.collapse_after;
      score.mae = evaluate_mae(model, ws.labeled(rec.members));
      res.histories.push_back(h);
    } catch (const Error& e) {
      score.error = e.what();
      res.histories.emplace_back();
    }
    res.adapted.push_back(std::move(model));
    res.tasks.push_back(std::move(score));
  }
  // Means over the tasks that completed.
  double base_sum = 0.0, sum = 0.0;
  int n = 0;
  for (std::size_t t = 0; t < res.tasks.size(); ++t) {
    if (!res.tasks[t].error.empty()) continue;
    base_sum += res.baseline_tasks[t].mae;
    sum += res.tasks[t].mae;
    ++n;
  }
  if (n > 0) {
    res.baseline_mean = base_sum / n;
    res.mean_mae = sum / n;
    res.improvement_pct = res.baseline_mean > 0.0 ? 100.0 * (res.baseline_mean - res.mean_mae) / res.baseline_mean : 0.0;
  }
  return res;
}

std::string split_to_json(const DomainSplit& split, const Dataset& data, const std::string& dataset_path,
                          const std::string& dataset_sha) {
  json j;
  j["dataset"] = dataset_path;
  j["dataset_sha256"] = dataset_sha;
  j["property"] = data.property;
  json scaffolds = json::array();
  for (const ScaffoldRecord& s : split.scaffolds) {
    std::vector<std::string> ids;
    for (int m : s.members) ids.push_back(data.molecules[m].id);
    scaffolds.push_back({{"key", s.key},
                         {"level", s.level},
                         {"cluster", s.cluster},
                         {"role", std::string(to_string(s.role))},
                         {"members", ids}});
  }
  j["scaffolds"] = std::move(scaffolds);
  json clusters = json::array();
  for (const Cluster& c : split.clusters) {
    clusters.push_back({{"id", c.id},
                        {"level", c.level},
                        {"role", std::string(to_string(c.role))},
                        {"member_count", c.member_count},
                        {"scaffolds", c.scaffolds}});
  }
  j["clusters"] = std::move(clusters);
  std::vector<std::string> tasks;
  for (int t : split.zero_shot_tasks) tasks.push_back(split.scaffolds[t].key);
  j["zero_shot_tasks"] = tasks;
  j["excluded_keys"] = split.excluded_keys;
  j["audit"] = {{"w1", split.audit.w1},
                {"min_cross_w1", split.audit.min_cross_w1()},
                {"cross_fraction", split.audit.cross_fraction},
                {"tanimoto_threshold", split.audit.tanimoto_threshold},
                {"tau_dist", split.audit.tau_dist},
                {"pass", split.audit.pass}};
  return j.dump(2) + "\n";
}

DomainSplit split_from_json(const std::string& text, const Dataset& data, const BenchConfig& config) {
  DomainSplit split;
  try {
    const json j = json::parse(text);
    std::map<std::string, int> by_id;
    for (int i = 0; i < static_cast<int>(data.molecules.size()); ++i) by_id[data.molecules[i].id] = i;
    for (const json& s : j.at("scaffolds")) {
      ScaffoldRecord r;
      r.key = s.at("key").get<std::string>();
      r.level = s.at("level").get<int>();
      r.cluster = s.at("cluster").get<int>();
      r.role = role_from_string(s.at("role").get<std::string>());
      for (const auto& id : s.at("members").get<std::vector<std::string>>()) {
        const auto it = by_id.find(id);
        if (it == by_id.end()) throw Error(ErrorKind::HashMismatch, "split refers to unknown molecule " + id);
        r.members.push_back(it->second);
      }
      if (r.members.empty()) throw Error(ErrorKind::HashMismatch, "scaffold " + r.key + " has no members");
      r.graph = murcko_scaffold(data.molecules[r.members.front()].graph);
      if (canonical_key(r.graph) != r.key) {
        throw Error(ErrorKind::HashMismatch, "scaffold " + r.key + " does not match its molecules");
      }
      r.descriptor = descriptor(r.graph, config.polarizability, config.descriptor_mode);
      r.fingerprint = morgan_fingerprint(r.graph, config.morgan_radius, kFingerprintLength);
      split.scaffolds.push_back(std::move(r));
    }
    for (const json& c : j.at("clusters")) {
      Cluster cl;
      cl.id = c.at("id").get<int>();
      cl.level = c.at("level").get<int>();
      cl.role = role_from_string(c.at("role").get<std::string>());
      cl.member_count = c.at("member_count").get<int>();
      cl.scaffolds = c.at("scaffolds").get<std::vector<int>>();
      split.clusters.push_back(std::move(cl));
    }
    std::map<std::string, int> by_key;
    for (int i = 0; i < static_cast<int>(split.scaffolds.size()); ++i) by_key[split.scaffolds[i].key] = i;
    for (const auto& key : j.at("zero_shot_tasks").get<std::vector<std::string>>()) {
      split.zero_shot_tasks.push_back(by_key.at(key));
    }
    split.excluded_keys = j.at("excluded_keys").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw Error(ErrorKind::HashMismatch, std::string("malformed split.json: ") + e.what());
  } catch (const std::out_of_range&) {
    throw Error(ErrorKind::HashMismatch, "split.json names an unknown zero-shot task");
  }
  split.audit = audit(split, config);
  return split;
}

std::string format_matrix_csv(const std::vector<double>& values, std::size_t n,
                              const std::vector<std::string>& labels) {
  std::string out = "label";
  for (const auto& l : labels) out += "," + l;
  out += "\n";
  for (std::size_t i = 0; i < n; ++i) {
    out += labels[i];
    for (std::size_t j = 0; j < n; ++j) {
      char buf[32];
      std::snprintf(buf, sizeof buf, ",%.6f", values[i * n + j]);
      out += buf;
    }
    out += "\n";
  }
  return out;
}

void cmd_bench_synth(const fs::path& gen_config, const fs::path& out_csv, std::uint64_t seed, std::ostream& out) {
  const GenConfig gen = GenConfig::from_json(read_file(gen_config));
  const Dataset data = synth_dataset(gen, seed);
  atomic_write(out_csv, format_dataset_csv(data));
  out << "wrote " << data.molecules.size() << " molecules (" << data.scaffold_index.size() << " scaffolds) to "
      << out_csv.string() << "\n";
}

namespace {

std::string audit_text(const DomainSplit& split) {
  const SeparationAudit& a = split.audit;
  std::ostringstream os;
  os << "sliced W1 (source, validation, target):\n";
  for (int i = 0; i < 3; ++i) {
    os << "  ";
    for (int j = 0; j < 3; ++j) os << fmt(a.w1[i * 3 + j], 4) << (j < 2 ? "  " : "\n");
  }
  os << "min cross-domain W1: " << fmt(a.min_cross_w1(), 4) << "  tau_dist: " << fmt(a.tau_dist, 4)
     << "  pass: " << (a.pass ? "yes" : "no") << "\n";
  os << "source x target scaffold pairs with Tanimoto > " << fmt(a.tanimoto_threshold, 2) << ": "
     << fmt(a.cross_fraction, 4) << "\n";
  return os.str();
}

void write_audit(Manifest& m, const fs::path& dir, const DomainSplit& split) {
  std::vector<std::string> labels;
  for (int s : split.audit.order) labels.push_back(split.scaffolds[s].key);
  write_artifact(m, dir, "tanimoto.csv", format_matrix_csv(split.audit.tanimoto, labels.size(), labels));
  write_artifact(m, dir, "w1.csv", format_matrix_csv(split.audit.w1, 3, {"source", "validation", "target"}));
  write_artifact(m, dir, "audit.txt", audit_text(split));
}

}  // namespace

void cmd_bench_build(const fs::path& dataset, const RunConfig& config, const fs::path& dir, std::ostream& out) {
  RunLock lock(dir);
  Stopwatch sw;
  const fs::path abs = fs::absolute(dataset);
  const Dataset data = read_dataset_csv(abs, config.property);
  const std::string sha = sha256_file(abs);
  const DomainSplit split = build_split(data, config.bench);

  Manifest m;
  m.tool_version = kToolVersion;
  m.config_json = config.to_json();
  m.inputs[abs.string()] = sha;
  write_artifact(m, dir, "split.json", split_to_json(split, data, abs.string(), sha));
  write_audit(m, dir, split);

  std::map<std::string, int> roles;
  for (const Cluster& c : split.clusters) ++roles[std::string(to_string(c.role))];
  json bench{{"molecules", data.molecules.size()},
             {"scaffolds", split.scaffolds.size()},
             {"clusters", split.clusters.size()},
             {"roles", roles},
             {"zero_shot_tasks", split.zero_shot_tasks.size()},
             {"min_cross_w1", split.audit.min_cross_w1()},
             {"cross_fraction", split.audit.cross_fraction},
             {"audit_pass", split.audit.pass}};
  set_result(m, "bench", bench);
  m.timings["bench_build"] = sw.seconds();
  m.save(dir);

  out << "molecules: " << data.molecules.size() << "  clustered scaffolds: " << split.scaffolds.size()
      << "  excluded: " << split.excluded_keys.size() << "\n";
  out << "clusters: " << split.clusters.size() << "  (source " << roles["source"] << ", validation "
      << roles["validation"] << ", target " << roles["target"] << ")\n";
  out << "zero-shot tasks: " << split.zero_shot_tasks.size() << "\n";
  out << audit_text(split);
}

void cmd_bench_audit(const RunConfig& config, const fs::path& dir, std::ostream& out) {
  RunLock lock(dir);
  Manifest m = open_manifest(dir, config);
  const Workspace ws = load_workspace(dir, config);
  write_audit(m, dir, ws.split);
  m.save(dir);
  out << audit_text(ws.split);
}

void cmd_train_baseline(const RunConfig& config, const fs::path& dir, SplitKind kind, std::ostream& out) {
  RunLock lock(dir);
  Manifest m = open_manifest(dir, config);
  Stopwatch sw;
  const Workspace ws = load_workspace(dir, config);
  const BaselineResult r = train_baseline(ws, config, kind, config.seed);
  const std::string name = "baseline_" + std::string(to_string(kind));

  std::ostringstream report, csv;
  report << "baseline (" << to_string(kind) << " split), " << config.train.baseline_epochs << " epochs, seed "
         << config.seed << "\n";
  csv << "task,size,mae\n";
  if (!r.tasks.empty()) {
    report << "task                                      size   mae\n";
    for (const TaskScore& t : r.tasks) {
      char line[256];
      std::snprintf(line, sizeof line, "%-40s %5d   %s\n", t.key.c_str(), t.size, fmt(t.mae).c_str());
      report << line;
      csv << t.key << "," << t.size << "," << fmt(t.mae) << "\n";
    }
  }
  report << "target-domain MAE: " << fmt(r.target_mae) << "\n";
  report << "mean MAE: " << fmt(r.mean_mae) << "\n";
  csv << "target," << 0 << "," << fmt(r.target_mae) << "\n";
  csv << "mean,0," << fmt(r.mean_mae) << "\n";

  write_artifact(m, dir, name + ".ckpt", encode_checkpoint(encoder_checkpoint(r.model)));
  if (kind == SplitKind::Strict) {
    write_artifact(m, dir, "baseline_shallow.ckpt", encode_checkpoint(encoder_checkpoint(r.shallow)));
  }
  write_artifact(m, dir, name + "_history.jsonl", r.history.to_jsonl());
  write_artifact(m, dir, name + "_report.txt", report.str());
  write_artifact(m, dir, name + "_report.csv", csv.str());
  set_result(m, name, {{"mean_mae", r.mean_mae}, {"target_mae", r.target_mae}, {"tasks", tasks_json(r.tasks)}});
  m.timings[name] = sw.seconds();
  m.save(dir);
  out << report.str();
}

void cmd_poma_run(const RunConfig& config, const fs::path& dir, const std::string& policy, const Ablation& ablation,
                  std::ostream& out) {
  if (policy != "grpo" && !is_heuristic_policy(policy)) {
    throw Error(ErrorKind::UnknownPolicy, "unknown policy '" + policy + "'");
  }
  RunLock lock(dir);
  Manifest m = open_manifest(dir, config);
  Stopwatch sw;
  if (!m.outputs.count("baseline_strict.ckpt") || !m.outputs.count("baseline_shallow.ckpt")) {
    throw Error(ErrorKind::Io, "no strict baseline in " + dir.string() + "; run `train baseline` first");
  }
  const Encoder baseline = encoder_from_checkpoint(load_checkpoint(dir / "baseline_strict.ckpt"));
  const Encoder shallow = encoder_from_checkpoint(load_checkpoint(dir / "baseline_shallow.ckpt"));
  const Workspace ws = load_workspace(dir, config);

  std::ostringstream rollouts;
  const PomaResult r = poma_run(ws, config, policy, baseline, shallow, config.seed, ablation, &rollouts);
  const std::string sub = "poma_" + policy + (ablation.name() == "full" ? "" : "_" + ablation.name());

  std::ostringstream report, csv, selection;
  report << "policy: " << policy << "  ablation: " << ablation.name() << "  seed: " << config.seed << "\n";
  report << "proxies:";
  for (const auto& p : r.proxies) report << " " << p;
  report << "\nselected:";
  for (const auto& s : r.selected_keys) report << " " << s;
  report << "\n";
  if (policy == "grpo") report << "MAE_base (proxy): " << fmt(r.mae_base) << "\n";
  report << task_table(r.baseline_tasks, r.tasks, true);
  report << "mean baseline MAE: " << fmt(r.baseline_mean) << "\n";
  report << "mean adapted MAE:  " << fmt(r.mean_mae) << "\n";
  report << "improvement: " << fmt(r.improvement_pct, 2) << "%\n";
  csv << "task,size,baseline_mae,adapted_mae,rank_before,rank_after\n";
  for (std::size_t t = 0; t < r.tasks.size(); ++t) {
    csv << r.tasks[t].key << "," << r.tasks[t].size << "," << fmt(r.baseline_tasks[t].mae) << ","
        << (r.tasks[t].error.empty() ? fmt(r.tasks[t].mae) : "nan") << "," << r.tasks[t].collapse_before << ","
        << r.tasks[t].collapse_after << "\n";
  }
  selection << json{{"policy", policy},
                    {"ablation", ablation.name()},
                    {"proxies", r.proxies},
                    {"pool", r.pool_keys},
                    {"selected", r.selected},
                    {"selected_keys", r.selected_keys}}
                   .dump(2)
            << "\n";

  write_artifact(m, dir, sub + "/report.txt", report.str());
  write_artifact(m, dir, sub + "/report.csv", csv.str());
  write_artifact(m, dir, sub + "/selection.json", selection.str());
  if (r.policy_net) {
    write_artifact(m, dir, sub + "/policy.ckpt", encode_checkpoint(policy_checkpoint(*r.policy_net)));
    write_artifact(m, dir, sub + "/rollouts.jsonl", rollouts.str());
  }
  for (std::size_t t = 0; t < r.adapted.size(); ++t) {
    write_artifact(m, dir, sub + "/task" + std::to_string(t) + ".ckpt",
                   encode_checkpoint(encoder_checkpoint(r.adapted[t])));
    write_artifact(m, dir, sub + "/task" + std::to_string(t) + "_history.jsonl", r.histories[t].to_jsonl());
  }
  set_result(m, sub,
             {{"policy", policy},
              {"ablation", ablation.name()},
              {"baseline_mean_mae", r.baseline_mean},
              {"mean_mae", r.mean_mae},
              {"improvement_pct", r.improvement_pct},
              {"selected", r.selected_keys},
              {"tasks", tasks_json(r.tasks)}});
  m.timings[sub] = sw.seconds();
  m.save(dir);
  out << report.str();
}

void cmd_report(const std::vector<fs::path>& dirs, std::ostream& out, const fs::path& csv_out) {
  if (dirs.empty()) throw Error(ErrorKind::BadConfig, "report needs at least one run directory");
  struct Row {
    std::string run, entry;
    double mean_mae;
    std::optional<double> improvement;
  };
  std::vector<Row> rows;
  std::vector<double> strict, random;
  for (const fs::path& dir : dirs) {
    const Manifest m = Manifest::load(dir);
    m.verify(dir);
    const json results = json::parse(m.results_json);
    for (const auto& [key, value] : results.items()) {
      if (!value.is_object() || !value.contains("mean_mae")) continue;
      Row r{dir.filename().string().empty() ? dir.string() : dir.filename().string(), key,
            value.at("mean_mae").get<double>(), std::nullopt};
      if (value.contains("improvement_pct")) r.improvement = value.at("improvement_pct").get<double>();
      if (key == "baseline_strict") strict.push_back(r.mean_mae);
      if (key == "baseline_random") random.push_back(r.mean_mae);
      rows.push_back(std::move(r));
    }
  }
  std::ostringstream text, csv;
  text << "run                   entry                          mean_mae    improve%\n";
  csv << "run,entry,mean_mae,improvement_pct\n";
  for (const Row& r : rows) {
    char line[256];
    std::snprintf(line, sizeof line, "%-21s %-30s %10s  %10s\n", r.run.c_str(), r.entry.c_str(),
                  fmt(r.mean_mae).c_str(), r.improvement ? fmt(*r.improvement, 2).c_str() : "-");
    text << line;
    csv << r.run << "," << r.entry << "," << fmt(r.mean_mae) << "," << (r.improvement ? fmt(*r.improvement, 4) : "")
        << "\n";
  }
  if (!strict.empty() && !random.empty()) {
    const double s = std::accumulate(strict.begin(), strict.end(), 0.0) / strict.size();
    const double q = std::accumulate(random.begin(), random.end(), 0.0) / random.size();
    const double factor = q > 0.0 ? s / q : 0.0;
    text << "Degradation factor (strict / random): " << fmt(factor, 2) << "x\n";
    csv << "degradation_factor,strict/random," << fmt(factor, 6) << ",\n";
  }
  out << text.str();
  if (!csv_out.empty()) atomic_write(csv_out, csv.str());
}

}  // namespace oodmol
