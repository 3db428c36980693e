#include <benchmark/benchmark.h>

#include <string>
#include <vector>

#include "hoigen/dsl.hpp"
#include "hoigen/rules.hpp"

using namespace hoigen;

namespace {

std::vector<std::string> corpus(std::size_t n) {
  std::vector<std::string> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(serialize_program(random_program(i)));
  return out;
}

void BM_Parse(benchmark::State& state) {
  const auto texts = corpus(256);
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(parse_program(texts[i++ % texts.size()]));
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_Parse);

void BM_Serialize(benchmark::State& state) {
  std::vector<HandProgram> programs;
  for (std::uint64_t i = 0; i < 256; ++i) programs.push_back(random_program(i));
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(serialize_program(programs[i++ % programs.size()]));
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_Serialize);

void BM_Validate(benchmark::State& state) {
  std::vector<HandProgram> programs;
  for (std::uint64_t i = 0; i < 256; ++i) programs.push_back(random_program(i));
  const RuleProfile profile;
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(validate_program(programs[i++ % programs.size()], profile));
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_Validate);

}  // namespace

BENCHMARK_MAIN();
