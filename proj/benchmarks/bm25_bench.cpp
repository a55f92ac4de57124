#include <benchmark/benchmark.h>

#include "statqa/bm25.hpp"
#include "synthetic.hpp"

namespace {

using namespace statqa;

void BM_IndexBuild(benchmark::State& state) {
  const Corpus corpus = bench::synthetic_corpus(static_cast<std::size_t>(state.range(0)));
  const Analyzer analyzer;
  for (auto _ : state) {
    auto index = InvertedIndex::build(corpus, analyzer);
    benchmark::DoNotOptimize(index.vocabulary_size());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_IndexBuild)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);

void BM_TopK(benchmark::State& state) {
  const Corpus corpus = bench::synthetic_corpus(static_cast<std::size_t>(state.range(0)));
  const Analyzer analyzer;
  const auto index = InvertedIndex::build(corpus, analyzer);
  std::mt19937_64 rng(3);
  std::vector<std::vector<std::string>> queries;
  for (int i = 0; i < 64; ++i) queries.push_back(analyzer.tokens(bench::synthetic_text(rng, 20, 5000)));
  std::size_t i = 0;
  for (auto _ : state) {
    auto hits = index.top_k(queries[i++ % queries.size()], 100);
    benchmark::DoNotOptimize(hits.data());
  }
}
BENCHMARK(BM_TopK)->Arg(1000)->Arg(10000)->Unit(benchmark::kMicrosecond);

}  // namespace
