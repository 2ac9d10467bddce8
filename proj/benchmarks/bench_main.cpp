#include <random>
#include <string>
#include <vector>

#include <benchmark/benchmark.h>

#include "selfcheck/embeddings.hpp"
#include "selfcheck/metrics.hpp"
#include "selfcheck/semantic.hpp"
#include "selfcheck/textproc.hpp"

namespace {

std::string random_passage(std::mt19937_64& rng, int words, int vocab) {
  std::string s;
  for (int i = 0; i < words; ++i) {
    s += "w" + std::to_string(rng() % static_cast<unsigned>(vocab));
    s += (i % 12 == 11) ? ". " : " ";
  }
  return s;
}

void BM_Tokenize(benchmark::State& state) {
  std::mt19937_64 rng(1);
  const std::string text = random_passage(rng, static_cast<int>(state.range(0)), 500);
  for (auto _ : state) benchmark::DoNotOptimize(selfcheck::tokenize(text));
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * text.size()));
}
BENCHMARK(BM_Tokenize)->Arg(200)->Arg(5000);

void BM_SemanticPassage(benchmark::State& state) {
  std::mt19937_64 rng(2);
  const int vocab = 400;
  std::vector<std::string> samples(20);
  for (auto& s : samples) s = random_passage(rng, 150, vocab);
  const std::string target = random_passage(rng, 150, vocab);
  const auto sentences = selfcheck::split_sentences(target);
  selfcheck::EmbeddingTable table(static_cast<std::size_t>(state.range(0)));
  std::normal_distribution<float> g(0.0f, 1.0f);
  for (int i = 0; i < vocab; ++i) {
    std::vector<float> v(static_cast<std::size_t>(state.range(0)));
    for (auto& x : v) x = g(rng);
    table.add("w" + std::to_string(i), v);
  }
  for (auto _ : state) {
    const auto model = selfcheck::FrequencyModel::build(samples, target);
    benchmark::DoNotOptimize(selfcheck::score_document(model, sentences, &table, 0.5));
  }
}
BENCHMARK(BM_SemanticPassage)->Arg(50)->Arg(300)->Unit(benchmark::kMillisecond);

void BM_AveragePrecision(benchmark::State& state) {
  std::mt19937_64 rng(3);
  const auto n = static_cast<std::size_t>(state.range(0));
  std::vector<double> scores(n);
  std::vector<int> targets(n);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    scores[i] = u(rng);
    targets[i] = u(rng) < 0.6;
  }
  for (auto _ : state) benchmark::DoNotOptimize(selfcheck::average_precision(scores, targets));
}
BENCHMARK(BM_AveragePrecision)->Arg(1908)->Arg(100000);

}  // namespace
