#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#ifdef __GLIBC__
#include <malloc.h>
#endif

#include <CLI11.hpp>

#include "oodmol/config.hpp"
#include "oodmol/error.hpp"
#include "oodmol/pipeline.hpp"

namespace {

oodmol::RunConfig load_config(const std::string& path, const std::optional<std::uint64_t>& seed) {
  const std::filesystem::path resolved = oodmol::resolve_config_path(path);
  oodmol::RunConfig cfg = resolved.empty() ? oodmol::RunConfig{} : oodmol::RunConfig::load(resolved);
  if (seed) {
    cfg.seed = *seed;
    cfg.bench.seed = *seed;
  }
  cfg.validate();
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
#ifdef __GLIBC__
  // the trainer churns through many mid-sized Eigen temporaries
  mallopt(M_MMAP_THRESHOLD, 64 << 20);
  mallopt(M_TRIM_THRESHOLD, 256 << 20);
#endif
  CLI::App app{"Strict scaffold-split benchmarks and target-aware source selection for molecular property models"};
  app.set_version_flag("--version", std::string(oodmol::kToolVersion));
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir = "run";
  auto add_common = [&](CLI::App* cmd, bool with_out) {
    cmd->add_option("--config", config_path, "run config (JSON); OODMOL_CONFIG overrides");
    cmd->add_option("--seed", seed, "master seed (overrides the config)");
    if (with_out) cmd->add_option("--out", out_dir, "run directory")->capture_default_str();
  };

  auto* bench = app.add_subcommand("bench", "benchmark construction");
  bench->require_subcommand(1);

  std::string gen_path, csv_path;
  auto* synth = bench->add_subcommand("synth", "generate a synthetic dataset CSV");
  synth->add_option("generator", gen_path, "generator config (JSON)")->required()->check(CLI::ExistingFile);
  synth->add_option("--csv", csv_path, "output CSV")->required();
  synth->add_option("--seed", seed, "generator seed (default 42)");

  std::string dataset_path;
  auto* build = bench->add_subcommand("build", "cluster scaffolds, assign roles, audit the split");
  build->add_option("dataset", dataset_path, "dataset CSV (id,smiles,property,value)")->required();
  add_common(build, true);

  auto* audit_cmd = bench->add_subcommand("audit", "recompute the audit matrices of an existing split");
  add_common(audit_cmd, true);

  auto* train = app.add_subcommand("train", "model training");
  train->require_subcommand(1);
  std::string split_kind = "strict";
  auto* baseline = train->add_subcommand("baseline", "train the merged-source baseline");
  baseline->add_option("--split", split_kind, "strict or random")
      ->check(CLI::IsMember({"strict", "random"}))
      ->capture_default_str();
  add_common(baseline, true);

  auto* poma = app.add_subcommand("poma", "source selection and adaptation");
  poma->require_subcommand(1);
  std::string policy, ablation = "full";
  auto* run = poma->add_subcommand("run", "select sources and fine-tune on every zero-shot task");
  run->add_option("--policy", policy, "grpo, random, shallow, deep, physical, graph-kernel or mixed")->required();
  run->add_option("--ablation", ablation, "full, no-mol, no-sub or no-align")->capture_default_str();
  add_common(run, true);

  std::vector<std::string> report_dirs;
  std::string report_csv;
  auto* report = app.add_subcommand("report", "merge results of run directories");
  report->add_option("dirs", report_dirs, "run directories")->required();
  report->add_option("--csv", report_csv, "also write the table as CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (synth->parsed()) {
      oodmol::cmd_bench_synth(gen_path, csv_path, seed.value_or(42), std::cout);
    } else if (build->parsed()) {
      oodmol::cmd_bench_build(dataset_path, load_config(config_path, seed), out_dir, std::cout);
    } else if (audit_cmd->parsed()) {
      oodmol::cmd_bench_audit(load_config(config_path, seed), out_dir, std::cout);
    } else if (baseline->parsed()) {
      const auto kind = split_kind == "random" ? oodmol::SplitKind::Random : oodmol::SplitKind::Strict;
      oodmol::cmd_train_baseline(load_config(config_path, seed), out_dir, kind, std::cout);
    } else if (run->parsed()) {
      oodmol::cmd_poma_run(load_config(config_path, seed), out_dir, policy, oodmol::Ablation::parse(ablation),
                           std::cout);
    } else if (report->parsed()) {
      std::vector<std::filesystem::path> dirs(report_dirs.begin(), report_dirs.end());
      oodmol::cmd_report(dirs, std::cout, report_csv);
    }
  } catch (const oodmol::Error& e) {
    std::cerr << "error [" << oodmol::to_string(e.kind()) << "]: " << e.what() << "\n";
    return oodmol::exit_code_for(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 6;
  }
  return 0;
}
