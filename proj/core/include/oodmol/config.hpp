#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "oodmol/adapt.hpp"
#include "oodmol/benchgen.hpp"
#include "oodmol/encoder.hpp"
#include "oodmol/grpo.hpp"
#include "oodmol/retrieval.hpp"

namespace oodmol {

struct TrainSettings {
  double lr = 3e-4;
  int batch_size = 64;
  int baseline_epochs = 200;
  int shallow_epochs = 40;
  int finetune_epochs = 200;
  int proxy_epochs = 5;
  int e_warm = 10;
  double beta_m = 0.9;
  double tau_reg = 0.05;
};

struct SelectorSettings {
  int n_proxies = 3;
  int pool_size = 50;   // M
  int select_k = 5;     // K
  int hidden = 64;
  GrpoConfig grpo;
  RetrievalConfig retrieval;
};

struct RunConfig {
  std::uint64_t seed = 42;
  std::string property;  // empty: first property in the dataset
  BenchConfig bench;
  EncoderConfig encoder;
  TrainSettings train;
  SelectorSettings selector;

  // Unknown keys and out-of-range values throw BadConfig.
  static RunConfig from_json(const std::string& text);
  static RunConfig load(const std::filesystem::path& path);
  std::string to_json() const;
  void validate() const;

  AdaptConfig finetune_config(std::uint64_t run_seed) const;
};

// Config path resolution: OODMOL_CONFIG wins over the command line value.
std::filesystem::path resolve_config_path(const std::string& cli_value);

}  // namespace oodmol
