#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "oodmol/adapt.hpp"
#include "oodmol/benchgen.hpp"
#include "oodmol/config.hpp"
#include "oodmol/encoder.hpp"
#include "oodmol/error.hpp"
#include "oodmol/grpo.hpp"
#include "oodmol/policy.hpp"

namespace oodmol {

inline constexpr const char* kToolVersion = "oodmol 0.3.0";

// Process exit code for each error class (0 is success).
int exit_code_for(ErrorKind kind);

struct Workspace {
  Dataset data;
  DomainSplit split;
  std::vector<MolInput> inputs;

  LabeledSet labeled(const std::vector<int>& molecules) const;
  UnlabeledSet unlabeled(const std::vector<int>& molecules) const;
};

Workspace make_workspace(Dataset data, DomainSplit split);

enum class SplitKind { Strict, Random };
std::string_view to_string(SplitKind kind);

struct TaskScore {
  std::string key;
  int size = 0;
  double mae = 0.0;
  std::string error;  // non-empty when the task failed
  int collapse_before = 0;
  int collapse_after = 0;
};

struct BaselineResult {
  SplitKind kind = SplitKind::Strict;
  Encoder model;
  Encoder shallow;
  std::vector<TaskScore> tasks;
  double target_mae = 0.0;
  double mean_mae = 0.0;  // mean over tasks (strict with tasks), else target_mae
  AdaptHistory history;
};

BaselineResult train_baseline(const Workspace& ws, const RunConfig& config, SplitKind kind, std::uint64_t seed);

// Per-zero-shot-task MAE of a trained model.
std::vector<TaskScore> score_tasks(const Workspace& ws, const Encoder& model);

struct Ablation {
  bool use_mol = true;
  bool use_sub = true;

  static Ablation parse(const std::string& name);
  std::string name() const;
};

struct PomaResult {
  std::string policy;
  Ablation ablation;
  std::vector<std::string> proxies;
  std::vector<std::string> pool_keys;
  std::vector<int> selected;
  std::vector<std::string> selected_keys;
  std::vector<TaskScore> baseline_tasks;
  std::vector<TaskScore> tasks;
  double baseline_mean = 0.0;
  double mean_mae = 0.0;
  double improvement_pct = 0.0;
  double mae_base = 0.0;
  std::optional<PolicyNet> policy_net;
  std::vector<StepLog> rollouts;
  std::vector<AdaptHistory> histories;
  std::vector<Encoder> adapted;
};

// Picks proxies and the candidate pool, selects sources (GRPO for "grpo",
// otherwise a heuristic), then fine-tunes `baseline` on every zero-shot task. `shallow` is the early baseline snapshot.
PomaResult poma_run(const Workspace& ws, const RunConfig& config, const std::string& policy, const Encoder& baseline,
                    const Encoder& shallow, std::uint64_t seed, Ablation ablation = {},
                    std::ostream* rollout_log = nullptr);

// Split persistence. The JSON keeps roles and membership; graphs,
// descriptors and fingerprints are rebuilt from the dataset on load.
std::string split_to_json(const DomainSplit& split, const Dataset& data, const std::string& dataset_path,
                          const std::string& dataset_sha);
DomainSplit split_from_json(const std::string& text, const Dataset& data, const BenchConfig& config);

std::string format_matrix_csv(const std::vector<double>& values, std::size_t n, const std::vector<std::string>& labels);

// File-level commands behind the CLI. All throw oodmol::Error.
void cmd_bench_synth(const std::filesystem::path& gen_config, const std::filesystem::path& out_csv,
                     std::uint64_t seed, std::ostream& out);
void cmd_bench_build(const std::filesystem::path& dataset, const RunConfig& config, const std::filesystem::path& dir,
                     std::ostream& out);
void cmd_bench_audit(const RunConfig& config, const std::filesystem::path& dir, std::ostream& out);
void cmd_train_baseline(const RunConfig& config, const std::filesystem::path& dir, SplitKind kind, std::ostream& out);
void cmd_poma_run(const RunConfig& config, const std::filesystem::path& dir, const std::string& policy,
                  const Ablation& ablation, std::ostream& out);
void cmd_report(const std::vector<std::filesystem::path>& dirs, std::ostream& out,
                const std::filesystem::path& csv_out = {});

}  // namespace oodmol
