#include <benchmark/benchmark.h>

#include <string>
#include <vector>

#include "ff/classifier.hpp"
#include "ff/features.hpp"
#include "ff/rng.hpp"
#include "ff/stats.hpp"

namespace {

std::vector<std::vector<std::string>> random_docs(std::size_t n, std::uint64_t seed) {
  static const char* pool[] = {"NN", "NNS", "NNP", "VB", "VBD", "VBZ", "DT", "IN", "JJ", "RB", "PRP", ".", ",", "CC"};
  ff::Rng rng(seed);
  std::vector<std::vector<std::string>> docs(n);
  for (auto& d : docs) {
    d.resize(20 + rng.uniform_index(120));
    for (auto& t : d) t = pool[rng.uniform_index(14)];
  }
  return docs;
}

void BM_Spearman(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  ff::Rng rng(1);
  std::vector<double> x(n), y(n), z(n);
  for (std::size_t i = 0; i < n; ++i) {
    z[i] = rng.normal();
    x[i] = z[i] + rng.normal();
    y[i] = rng.normal() - z[i];
  }
  for (auto _ : state) benchmark::DoNotOptimize(ff::stats::partial_spearman(x, y, z));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_Spearman)->Arg(200)->Arg(5000)->Arg(100000);

void BM_Vectorize(benchmark::State& state) {
  const auto docs = random_docs(static_cast<std::size_t>(state.range(0)), 2);
  for (auto _ : state) {
    ff::TagCodec codec;
    std::vector<ff::GramCounts> grams;
    grams.reserve(docs.size());
    for (const auto& d : docs) grams.push_back(ff::extract_ngrams(d, codec));
    const auto vocab = ff::build_vocabulary(grams, codec);
    const auto idf = ff::fit_idf(grams, vocab);
    benchmark::DoNotOptimize(ff::vectorize_all(grams, vocab, ff::Weighting::tfidf, idf));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Vectorize)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);

void BM_TrainLogistic(benchmark::State& state) {
  const auto docs = random_docs(static_cast<std::size_t>(state.range(0)), 3);
  ff::TagCodec codec;
  std::vector<ff::GramCounts> grams;
  for (const auto& d : docs) grams.push_back(ff::extract_ngrams(d, codec));
  const auto vocab = ff::build_vocabulary(grams, codec);
  const auto X = ff::vectorize_all(grams, vocab, ff::Weighting::tfidf, ff::fit_idf(grams, vocab));
  ff::Rng rng(4);
  std::vector<int> labels(docs.size());
  for (auto& l : labels) l = static_cast<int>(rng.uniform_index(2));
  const std::vector<double> weights(docs.size(), 1.0);
  for (auto _ : state) benchmark::DoNotOptimize(ff::train(X, labels, weights, ff::TrainConfig{}));
}
BENCHMARK(BM_TrainLogistic)->Arg(1000)->Arg(5000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
