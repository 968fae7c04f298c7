#include <benchmark/benchmark.h>

#include <string>

#include "evorl/algo/cgfpd.hpp"
#include "evorl/algo/factory.hpp"
#include "evorl/env/env.hpp"
#include "evorl/evo/levenshtein.hpp"
#include "evorl/nn/tensor.hpp"
#include "evorl/random.hpp"

using namespace evorl;

namespace {

struct ScoringSetup {
  algo::LatentWorldModel model;
  algo::PlannerConfig config;
  algo::SequenceSet sequences;
  nn::Tensor start;

  explicit ScoringSetup(std::size_t count) {
    Rng rng(3);
    model = algo::LatentWorldModel(64, 2, 64, rng);
    const auto prop = algo::initial_proposal(std::vector<double>{0.2, -0.1}, true, config);
    sequences = algo::sample_sequences(prop, count, rng);
    start = nn::Tensor(count, 64);
    for (double& v : start.values()) v = standard_normal(rng);
  }
};

void BM_ScoreDouble(benchmark::State& state) {
  ScoringSetup s(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(algo::score_sequences(s.model, s.start, s.sequences, s.config));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ScoreDouble)->Arg(64)->Arg(512);

void BM_ScoreSingle(benchmark::State& state) {
  ScoringSetup s(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(s.model.score(s.start, s.sequences, s.config));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ScoreSingle)->Arg(64)->Arg(512);

void BM_Matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(1);
  nn::Tensor a(n, n), b(n, n);
  for (double& v : a.values()) v = standard_normal(rng);
  for (double& v : b.values()) v = standard_normal(rng);
  for (auto _ : state) benchmark::DoNotOptimize(nn::matmul(a, b));
}
BENCHMARK(BM_Matmul)->Arg(64)->Arg(256);

void BM_Levenshtein(benchmark::State& state) {
  Rng rng(2);
  std::string a, b;
  for (int i = 0; i < state.range(0); ++i) {
    a.push_back(static_cast<char>('a' + rng() % 26));
    b.push_back(static_cast<char>('a' + rng() % 26));
  }
  for (auto _ : state) benchmark::DoNotOptimize(evo::lev_distance_norm(a, b));
}
BENCHMARK(BM_Levenshtein)->Arg(64)->Arg(4096);

void BM_AgentStep(benchmark::State& state) {
  const auto spec = env::spec_for(env::kCartPole);
  auto agent = algo::make_agent(state.range(0) == 0 ? "cgfpd" : "dfcwpcp", spec, 0, {});
  env::Environment e(env::kCartPole);
  auto obs = e.reset(0);
  for (auto _ : state) {
    const auto a = agent->act(obs, false);
    auto st = e.step(a);
    obs = st.done || st.truncated ? e.reset(1) : st.observation;
  }
}
BENCHMARK(BM_AgentStep)->Arg(0)->Arg(1);

}  // namespace
BENCHMARK_MAIN();
