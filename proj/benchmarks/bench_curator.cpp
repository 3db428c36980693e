#include <benchmark/benchmark.h>

#include <random>

#include "hoigen/curator.hpp"

using namespace hoigen;

namespace {

void BM_NextSlot(benchmark::State& state) {
  const QuotaMatrix q = init_quota(QuotaConfig::default_table());
  std::mt19937_64 rng(1);
  for (auto _ : state) benchmark::DoNotOptimize(next_slot(q, rng));
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_NextSlot);

// Draw and fill until the table is complete.
void BM_FillTable(benchmark::State& state) {
  const QuotaMatrix base = init_quota(QuotaConfig::default_table());
  for (auto _ : state) {
    QuotaMatrix q = base;
    std::mt19937_64 rng(7);
    while (auto k = next_slot(q, rng)) q.try_increment(*k);
    benchmark::DoNotOptimize(q.total_filled());
  }
  state.SetItemsProcessed(state.iterations() * base.total_target());
}
BENCHMARK(BM_FillTable)->Unit(benchmark::kMillisecond);

}  // namespace
