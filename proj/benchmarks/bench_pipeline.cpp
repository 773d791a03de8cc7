#include <benchmark/benchmark.h>

#include <string>
#include <vector>

#include "reasonkit/kg_pipeline.hpp"
#include "reasonkit/rng.hpp"

namespace {

std::vector<rk::Triple> make_triples(std::size_t n) {
  rk::Rng rng(29);
  std::vector<rk::Triple> triples;
  triples.reserve(n);
  const char* relations[] = {"AtLocation", "UsedFor", "CapableOf", "HasProperty"};
  for (std::size_t i = 0; i < n; ++i) {
    rk::Triple t;
    t.head = "entity " + std::to_string(rng.uniform(500));
    t.relation = relations[rng.uniform(4)];
    t.tail = "target " + std::to_string(rng.uniform(800));
    t.row = i;
    triples.push_back(std::move(t));
  }
  return triples;
}

void BM_Verbalize(benchmark::State& state) {
  const auto& table = rk::TemplateTable::builtin();
  const auto triples = make_triples(std::size_t(state.range(0)));
  for (auto _ : state) {
    for (const auto& t : triples) benchmark::DoNotOptimize(rk::verbalize(t, table));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_BuildCorpus(benchmark::State& state) {
  const auto& table = rk::TemplateTable::builtin();
  const auto triples = make_triples(std::size_t(state.range(0)));
  rk::CorpusBuildOptions options;
  options.seed = 11;
  options.split_ratio = 0.89;
  for (auto _ : state) {
    benchmark::DoNotOptimize(rk::build_corpus(triples, table, options));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

}  // namespace

BENCHMARK(BM_Verbalize)->Arg(1000)->Arg(10000);
BENCHMARK(BM_BuildCorpus)->Arg(1000)->Arg(10000);

BENCHMARK_MAIN();
