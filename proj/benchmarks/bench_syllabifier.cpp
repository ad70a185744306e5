#include <benchmark/benchmark.h>

#include "verso/corpus.hpp"
#include "verso/syllabifier.hpp"

namespace {

const char* kVerse = "nel mezzo del cammin di nostra vita";

void BM_SyllabifyWord(benchmark::State& state) {
  verso::Syllabifier syl;
  for (auto _ : state) {
    auto bd = syl.syllabify("smarrita");
    benchmark::DoNotOptimize(bd);
  }
}
BENCHMARK(BM_SyllabifyWord);

void BM_SyllabifyVerse(benchmark::State& state) {
  verso::Syllabifier syl;
  for (auto _ : state) {
    auto tokens = syl.syllabify_verse(kVerse);
    benchmark::DoNotOptimize(tokens);
  }
}
BENCHMARK(BM_SyllabifyVerse);

void BM_Normalize(benchmark::State& state) {
  for (auto _ : state) {
    auto s = verso::normalize("Ahi quanto a dir qual era è cosa dura!");
    benchmark::DoNotOptimize(s);
  }
}
BENCHMARK(BM_Normalize);

}  // namespace
