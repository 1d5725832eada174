// Serial reference kernels against the OpenMP versions.
//
//   ./bench_kernels --benchmark_counters_tabular=true
//
// The thread count of the parallel variants comes from the benchmark
// argument. Timings are wall clock, so on a single-core machine the
// threaded rows only show scheduling overhead.

#include <benchmark/benchmark.h>
#include <omp.h>

#include <random>
#include <set>
#include <vector>

#include "kgforge/eval.hpp"
#include "kgforge/train.hpp"

using namespace kgforge;

namespace {

struct Fixture {
  Dataset data;
  EmbeddingTable table;
  std::vector<Triple> scored;  // positives followed by their negatives, row-major
  std::size_t cols = 0;
};

/// Synthetic KG of n_e entities with a fixed seed, d = 64 ComplEx.
const Fixture& fixture() {
  static const Fixture f = [] {
    const std::size_t n_e = 4000, n_r = 20, n_train = 40000, n_test = 500;
    std::mt19937_64 rng(1);
    std::uniform_int_distribution<int> ue(0, n_e - 1), ur(0, n_r - 1);
    std::set<Triple> seen;
    std::vector<Triple> train, test;
    while (train.size() < n_train) {
      const Triple t{ue(rng), ur(rng), ue(rng)};
      if (seen.insert(t).second) train.push_back(t);
    }
    while (test.size() < n_test) {
      const Triple t{ue(rng), ur(rng), ue(rng)};
      if (seen.insert(t).second) test.push_back(t);
    }
    Vocab v;
    for (std::size_t e = 0; e < n_e; ++e) v.intern_entity("e" + std::to_string(e));
    for (std::size_t r = 0; r < n_r; ++r) v.intern_relation("r" + std::to_string(r));
    Fixture out;
    out.data = make_dataset(std::move(v), std::move(train), {}, std::move(test));
    out.table = init_table({ModelType::complex, true}, n_e, n_r, 64, 7);
    out.cols = 101;
    NegSpec spec;
    spec.n_neg = 100;
    NegativeSampler s(n_e, out.data.pairs, spec);
    std::span<const Triple> pos(out.data.train.triples.data(), 1000);
    const auto neg = s.make_batch(pos);
    for (std::size_t i = 0; i < pos.size(); ++i) {
      out.scored.push_back(pos[i]);
      for (std::size_t j = 0; j < 100; ++j) out.scored.push_back(neg.negatives[i * 100 + j]);
    }
    return out;
  }();
  return f;
}

void BM_ScoreBatchReference(benchmark::State& state) {
  const auto& f = fixture();
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        reference::score_batch(f.table, f.scored, f.cols, RelationModule::tri));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(f.scored.size()));
}

void BM_ScoreBatchParallel(benchmark::State& state) {
  const auto& f = fixture();
  omp_set_num_threads(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(score_batch(f.table, f.scored, f.cols, RelationModule::tri));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(f.scored.size()));
}

void BM_EvaluateReference(benchmark::State& state) {
  const auto& f = fixture();
  for (auto _ : state) {
    benchmark::DoNotOptimize(reference::evaluate(f.table, f.data.test.triples, f.data.filter,
                                                 RankMode::both_sides, TiePolicy::mean));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(f.data.test.size()));
}

void BM_EvaluateParallel(benchmark::State& state) {
  const auto& f = fixture();
  omp_set_num_threads(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(evaluate(f.table, f.data.test.triples, f.data.filter,
                                      RankMode::both_sides, TiePolicy::mean));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(f.data.test.size()));
}

TrainConfig bench_config(int threads) {
  TrainConfig c;
  c.model = {ModelType::complex, true};
  c.dim = 64;
  c.batch_size = 1000;
  c.n_neg = 100;
  c.threads = threads;
  return c;
}

void BM_GradientsReference(benchmark::State& state) {
  const auto& f = fixture();
  const auto c = bench_config(1);
  std::span<const Triple> pos(f.data.train.triples.data(), c.batch_size);
  NegativeSampler s(f.data.n_entities(), f.data.pairs, c.neg_spec());
  const auto neg = s.make_batch(pos);
  Gradients g(f.table);
  for (auto _ : state) {
    g.clear();
    benchmark::DoNotOptimize(
        reference::batch_gradients(f.table, f.data.pairs, c, pos, neg.negatives, g));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(c.batch_size));
}

// One full training step (sampling, chunked gradients, reduction, Adam).
void BM_TrainerStep(benchmark::State& state) {
  const auto& f = fixture();
  const auto c = bench_config(static_cast<int>(state.range(0)));
  Trainer t(f.data, c, f.table);
  std::span<const Triple> pos(f.data.train.triples.data(), c.batch_size);
  for (auto _ : state) benchmark::DoNotOptimize(t.step(pos));
  state.SetItemsProcessed(state.iterations() * static_cast<long>(c.batch_size));
}

}  // namespace

BENCHMARK(BM_ScoreBatchReference)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_ScoreBatchParallel)
    ->Arg(1)
    ->Arg(2)
    ->Arg(4)
    ->Unit(benchmark::kMillisecond)
    ->UseRealTime();
BENCHMARK(BM_EvaluateReference)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_EvaluateParallel)
    ->Arg(1)
    ->Arg(2)
    ->Arg(4)
    ->Unit(benchmark::kMillisecond)
    ->UseRealTime();
BENCHMARK(BM_GradientsReference)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_TrainerStep)
    ->Arg(1)
    ->Arg(2)
    ->Arg(4)
    ->Unit(benchmark::kMillisecond)
    ->UseRealTime();

BENCHMARK_MAIN();
