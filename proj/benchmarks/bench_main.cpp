#include <benchmark/benchmark.h>

#include "smrep/explorer.hpp"
#include "smrep/metrics.hpp"
#include "smrep/neuralnet.hpp"
#include "smrep/world.hpp"

namespace {

using namespace smrep;

void BM_Render(benchmark::State& state) {
  const Scene scene(generate_environment(1));
  Rng rng(2);
  for (auto _ : state) {
    const BasePose base = make_base({rng.uniform(0.0, 10.0), rng.uniform(0.0, 10.0)});
    benchmark::DoNotOptimize(scene.render(base, {rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)}));
  }
}
BENCHMARK(BM_Render);

void BM_Collect(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(collect(ExplorationMode::Nominal, 1, 1000, 3, 1));
  state.SetItemsProcessed(state.iterations() * 1000);
}
BENCHMARK(BM_Collect)->Unit(benchmark::kMillisecond);

struct TrainFixture {
  Dataset data = collect(ExplorationMode::Nominal, 1, 1024, 4, 1);
  SensorimotorNet<float> net = build_networks<float>(5);
  SensorimotorNet<float> grads;
  Batch<float> batch;

  explicit TrainFixture(std::size_t b) {
    std::vector<std::size_t> idx(b);
    for (std::size_t i = 0; i < b; ++i) idx[i] = (i * 7) % data.size();
    batch = make_batch(data, idx);
  }
};

void BM_Forward(benchmark::State& state) {
  TrainFixture f(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(batch_loss(f.net, f.batch));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Forward)->Arg(128);

void BM_LossAndGradient(benchmark::State& state) {
  TrainFixture f(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(loss_and_gradient(f.net, f.batch, f.grads));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_LossAndGradient)->Arg(128);

void BM_AdamUpdate(benchmark::State& state) {
  TrainFixture f(128);
  loss_and_gradient(f.net, f.batch, f.grads);
  AdamState<float> adam(f.net);
  for (auto _ : state) adam_update(f.net, f.grads, adam);
}
BENCHMARK(BM_AdamUpdate);

void BM_MakeBatch(benchmark::State& state) {
  const auto data = collect(ExplorationMode::Nominal, 1, 4096, 6, 1);
  std::vector<std::size_t> idx(128);
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = (i * 997) % data.size();
  for (auto _ : state) benchmark::DoNotOptimize(make_batch(data, idx));
}
BENCHMARK(BM_MakeBatch);

void BM_Dissimilarity(benchmark::State& state) {
  const auto n = state.range(0);
  Rng rng(7);
  PointSet hs(n, 3), qs(n, 3);
  for (Eigen::Index i = 0; i < hs.size(); ++i) {
    hs.data()[i] = rng.uniform(-1.0, 1.0);
    qs.data()[i] = rng.uniform(-1.0, 1.0);
  }
  for (auto _ : state) benchmark::DoNotOptimize(dissimilarities(hs, qs, {0.0, 10.0}));
}
BENCHMARK(BM_Dissimilarity)->Arg(200)->Arg(1000);

void BM_Evaluate(benchmark::State& state) {
  const auto net = build_networks<float>(8);
  const auto encoder = encoder_from(net.encoder);
  for (auto _ : state) benchmark::DoNotOptimize(evaluate(encoder));
}
BENCHMARK(BM_Evaluate)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
