#include <benchmark/benchmark.h>

#include "verso/model.hpp"
#include "verso/training.hpp"

namespace {

verso::TokenSeq make_seq(int len, int vocab, verso::Rng& rng) {
  verso::TokenSeq seq;
  seq.ids.reserve(static_cast<std::size_t>(len));
  for (int i = 0; i < len; ++i) {
    seq.ids.push_back(static_cast<std::int32_t>(rng.index(static_cast<std::size_t>(vocab))));
  }
  return seq;
}

void BM_LmStep(benchmark::State& state) {
  const verso::ModelDims dims{1884, 300, 1024};
  verso::Rng rng(1);
  const auto params = verso::init_params<float>(dims, rng);
  auto s = verso::LmState<float>::zeros(dims.hidden);
  for (auto _ : state) {
    auto out = verso::lm_step(params, s, 17);
    benchmark::DoNotOptimize(out);
  }
}
BENCHMARK(BM_LmStep);

void BM_SequenceLoss(benchmark::State& state) {
  const verso::ModelDims dims{512, 64, 128};
  verso::Rng rng(1);
  const auto params = verso::init_params<float>(dims, rng);
  const auto seq = make_seq(60, dims.vocab, rng);
  for (auto _ : state) {
    auto res = verso::sequence_loss(params, seq, 0.0, 7);
    benchmark::DoNotOptimize(res);
  }
}
BENCHMARK(BM_SequenceLoss);

}  // namespace

BENCHMARK_MAIN();
