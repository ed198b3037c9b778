#include <benchmark/benchmark.h>

#include "poisonlab/attack_optimal.hpp"
#include "poisonlab/dataset.hpp"
#include "poisonlab/linear_model.hpp"
#include "poisonlab/outlier.hpp"

using namespace poisonlab;

namespace {

LabeledDataset gaussians(Eigen::Index d, std::size_t per_class, std::uint64_t seed) {
  return gen_gaussian_binary({Vector::Constant(d, 0.5), Vector::Constant(d, -0.5), 1.0, per_class, seed});
}

void BM_TrainLasso(benchmark::State& state) {
  const auto data = gaussians(state.range(0), 100, 1);
  TrainConfig config;
  config.lambda = 0.01;
  for (auto _ : state) benchmark::DoNotOptimize(train_lasso(data, config));
}
BENCHMARK(BM_TrainLasso)->Arg(2)->Arg(54)->Arg(200)->Unit(benchmark::kMillisecond);

void BM_PoisonGradient(benchmark::State& state) {
  const Eigen::Index d = state.range(0);
  const auto train = gaussians(d, 100, 2);
  const auto val = gaussians(d, 200, 3);
  PoisonSet poison{Matrix::Constant(1, d, 0.3), Vector::Constant(1, 1.0)};
  const auto all = concat(train, poison.as_dataset());
  TrainConfig config;
  const auto model = train_lasso(all, config);
  for (auto _ : state) benchmark::DoNotOptimize(poison_gradient(0, poison, model, all, val));
}
BENCHMARK(BM_PoisonGradient)->Arg(2)->Arg(54)->Arg(200)->Unit(benchmark::kMicrosecond);

void BM_DetectorScore(benchmark::State& state) {
  const auto kind = static_cast<ScorerKind>(state.range(0));
  const auto trusted = gaussians(54, 100, 4).features();
  const auto queries = gaussians(54, 50, 5);
  ScorerConfig config;
  config.kind = kind;
  const auto scorer = OutlierScorer::fit(config, trusted);
  for (auto _ : state)
    for (Eigen::Index i = 0; i < queries.size(); ++i)
      benchmark::DoNotOptimize(scorer.score(queries.row(i), static_cast<std::uint64_t>(i)));
  state.SetLabel(std::string(to_string(kind)));
  state.SetItemsProcessed(state.iterations() * queries.size());
}
BENCHMARK(BM_DetectorScore)
    ->DenseRange(static_cast<int>(ScorerKind::knn), static_cast<int>(ScorerKind::lof))
    ->Unit(benchmark::kMicrosecond);

}  // namespace
BENCHMARK_MAIN();
