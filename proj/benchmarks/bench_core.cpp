#include <benchmark/benchmark.h>

#include <vector>

#include "semiheal/algebra.hpp"
#include "semiheal/datagen.hpp"
#include "semiheal/forest.hpp"
#include "semiheal/healing.hpp"
#include "semiheal/rng.hpp"
#include "semiheal/trust.hpp"

using namespace semiheal;

namespace {

  CayleyTable table_of(std::size_t n) {
    return generate({n, 1, 7, {}, false}).tables[0];
  }

  std::vector<TablePair> pairs_of(std::size_t n, std::size_t count, std::uint64_t seed) {
    auto const             tables = generate({n, count, seed, {}, false}).tables;
    std::vector<TablePair> out;
    for (std::size_t i = 0; i < tables.size(); ++i) {
      out.push_back(corrupt(tables[i], 0.15, derive_seed(seed, i)));
    }
    return out;
  }

  ForestModel model_of(std::size_t n) {
    std::vector<LabeledCell> data;
    auto const               pairs = pairs_of(n, 70, 11);
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      auto rows = labeled_cells(pairs[i].corrupt, pairs[i].corrupted_cells, i);
      data.insert(data.end(), rows.begin(), rows.end());
    }
    ForestParams params;
    params.seed = 3;
    return train(std::move(data), params);
  }

}  // namespace

static void BM_IsAssociative(benchmark::State& state) {
  auto const t = table_of(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(is_associative(t));
}
BENCHMARK(BM_IsAssociative)->DenseRange(4, 10, 2);

static void BM_TrustMap(benchmark::State& state) {
  auto const t = table_of(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(trust_map(t));
}
BENCHMARK(BM_TrustMap)->DenseRange(4, 10, 2);

static void BM_CanonicalForm(benchmark::State& state) {
  auto const t = table_of(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(canonical_form(t));
}
BENCHMARK(BM_CanonicalForm)->DenseRange(3, 7);

static void BM_Generate(benchmark::State& state) {
  auto const    n    = static_cast<std::size_t>(state.range(0));
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(generate({n, 1, seed++, {}, false}));
}
BENCHMARK(BM_Generate)->DenseRange(4, 10, 2);

static void BM_Train(benchmark::State& state) {
  auto const n = static_cast<std::size_t>(state.range(0));
  std::vector<LabeledCell> data;
  auto const               pairs = pairs_of(n, 70, 11);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    auto rows = labeled_cells(pairs[i].corrupt, pairs[i].corrupted_cells, i);
    data.insert(data.end(), rows.begin(), rows.end());
  }
  ForestParams params;
  for (auto _ : state) benchmark::DoNotOptimize(train(data, params));
}
BENCHMARK(BM_Train)->Arg(5)->Arg(8)->Unit(benchmark::kMillisecond);

static void BM_HealDeterministic(benchmark::State& state) {
  auto const  pairs = pairs_of(static_cast<std::size_t>(state.range(0)), 16, 5);
  std::size_t i     = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(heal_deterministic(pairs[i++ % pairs.size()], {}));
  }
}
BENCHMARK(BM_HealDeterministic)->DenseRange(4, 10, 2)->Unit(benchmark::kMicrosecond);

static void BM_HealHybrid(benchmark::State& state) {
  auto const  n     = static_cast<std::size_t>(state.range(0));
  auto const  model = model_of(n);
  auto const  pairs = pairs_of(n, 16, 5);
  std::size_t i     = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(heal_hybrid(pairs[i++ % pairs.size()], model, {}));
  }
}
BENCHMARK(BM_HealHybrid)->DenseRange(4, 10, 2)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
