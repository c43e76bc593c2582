#include <benchmark/benchmark.h>

#include "dsie/evaluation.hpp"
#include "dsie/trainer.hpp"

using namespace dsie;

namespace {

struct Fixture {
  PreparedCorpus prepared;
  TrainConfig config;
  ModelParams params;
  std::vector<TrainingSample> samples;

  Fixture() {
    auto syn = generate_synthetic({});
    prepared = {syn.corpus, split_users(syn.corpus.catalog, 0)};
    config.dim = 32;
    config.interests = 4;
    config.layers = 2;
    params = init_params(config.dims(static_cast<int>(prepared.corpus.catalog.item_count())), 1);
    samples = training_samples(prepared.corpus, prepared.split, config);
  }
};

const Fixture& fixture() {
  static const Fixture f;
  return f;
}

void BM_BatchObjective(benchmark::State& state) {
  const auto& f = fixture();
  const auto exec = state.range(0) ? Execution::parallel : Execution::serial;
  Rng rng(3);
  auto plan = plan_batch(std::span(f.samples).first(static_cast<std::size_t>(f.config.batch_size)), f.config,
                         f.params.dims.item_count, rng);
  ModelParams grad = zeros_like(f.params.dims);
  for (auto _ : state) {
    set_zero(grad);
    benchmark::DoNotOptimize(batch_objective(plan, f.params, f.config, &grad, exec));
  }
  state.SetLabel(state.range(0) ? "parallel" : "serial");
}

void BM_EvaluateSplit(benchmark::State& state) {
  const auto& f = fixture();
  ModelRecommender rec(f.params, f.config);
  EvalOptions opt;
  opt.exec = state.range(0) ? Execution::parallel : Execution::serial;
  for (auto _ : state)
    benchmark::DoNotOptimize(evaluate_split(rec, f.prepared.corpus, f.prepared.split.valid, "valid", opt));
  state.SetLabel(state.range(0) ? "parallel" : "serial");
}

}  // namespace

BENCHMARK(BM_BatchObjective)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_EvaluateSplit)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
