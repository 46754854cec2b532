#include <benchmark/benchmark.h>

#include <string>
#include <vector>

#include "oodmol/chemsim.hpp"
#include "oodmol/encoder.hpp"
#include "oodmol/grpo.hpp"
#include "oodmol/molgraph.hpp"
#include "oodmol/policy.hpp"
#include "oodmol/retrieval.hpp"
#include "oodmol/rng.hpp"

using namespace oodmol;

namespace {

const std::vector<std::string> kSmiles = {
    "CC(=O)Nc1ccccc1", "c1ccc2ccccc2c1", "OCC1CCN(C)CC1", "c1ccc(-c2ccccc2)cc1", "CCOC(=O)C1CCCCC1",
    "Cc1ccc(S(=O)(=O)N)cc1", "C1CC2CCC1C2", "O=C1CCCCC1", "c1ccsc1CCN", "Clc1ccc(Cc2ccncc2)cc1",
};

std::vector<MolGraph> panel() {
  std::vector<MolGraph> out;
  for (const auto& s : kSmiles) out.push_back(parse_smiles(s));
  return out;
}

void BM_ParseSmiles(benchmark::State& st) {
  for (auto _ : st)
    for (const auto& s : kSmiles) benchmark::DoNotOptimize(parse_smiles(s));
  st.SetItemsProcessed(st.iterations() * kSmiles.size());
}
BENCHMARK(BM_ParseSmiles);

void BM_Morgan(benchmark::State& st) {
  const auto gs = panel();
  for (auto _ : st)
    for (const auto& g : gs) benchmark::DoNotOptimize(morgan_fingerprint(g));
  st.SetItemsProcessed(st.iterations() * gs.size());
}
BENCHMARK(BM_Morgan);

void BM_WlGram(benchmark::State& st) {
  const auto gs = panel();
  for (auto _ : st) benchmark::DoNotOptimize(wl_gram(gs));
}
BENCHMARK(BM_WlGram);

void BM_EncoderForwardBackward(benchmark::State& st) {
  const auto gs = panel();
  std::vector<MolInput> inputs;
  for (const auto& g : gs) inputs.push_back(prepare_input(g));
  Batch batch;
  for (int rep = 0; rep < st.range(0) / static_cast<int>(inputs.size()); ++rep)
    for (const auto& in : inputs) batch.mols.push_back(&in), batch.labels.push_back(1.0);
  Encoder model = init_encoder({}, 1);
  for (auto _ : st) {
    ForwardCache cache;
    const ForwardResult r = forward(model, batch, &cache);
    Eigen::VectorXd dpred;
    mse(r.pred, batch.labels, &dpred);
    benchmark::DoNotOptimize(backward(model, cache, dpred));
  }
  st.SetItemsProcessed(st.iterations() * batch.size());
}
BENCHMARK(BM_EncoderForwardBackward)->Arg(10)->Arg(60);

class NoisyOracle : public RewardOracle {
 public:
  std::optional<double> reward(const std::vector<std::uint8_t>& a, std::uint64_t seed) const override {
    return static_cast<double>(a[0]) - 0.1 * (seed % 3);
  }
};

void BM_GrpoStep(benchmark::State& st) {
  Rng rng(3);
  RowMatrix states(50, kStateDim);
  for (int i = 0; i < states.rows(); ++i)
    for (int j = 0; j < kStateDim; ++j) states(i, j) = rng.uniform();
  GrpoConfig cfg;
  cfg.steps = 1;
  NoisyOracle oracle;
  PolicyState ps(init_policy({}, 1, 0.1));
  std::uint64_t seed = 0;
  for (auto _ : st) train_policy(oracle, states, ps, cfg, ++seed);
}
BENCHMARK(BM_GrpoStep);

}  // namespace
BENCHMARK_MAIN();
