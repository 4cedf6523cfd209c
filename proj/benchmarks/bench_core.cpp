#include <benchmark/benchmark.h>

#include "slangdef/decoding.hpp"
#include "slangdef/layers.hpp"
#include "slangdef/matrix.hpp"
#include "slangdef/metrics.hpp"
#include "slangdef/model.hpp"
#include "slangdef/random.hpp"

namespace {

using namespace slangdef;

constexpr std::size_t kWordVocab = 2000;
constexpr std::size_t kCharVocab = 60;

std::vector<TokenId> random_ids(std::size_t n, std::size_t vocab, Rng& rng) {
  std::vector<TokenId> ids(n);
  for (auto& id : ids) id = static_cast<TokenId>(kNumSpecials + rng.below(vocab - kNumSpecials));
  return ids;
}

SequencePair random_pair(Rng& rng, std::size_t context_len, std::size_t output_len) {
  return {random_ids(context_len, kWordVocab, rng), random_ids(8, kCharVocab, rng),
          random_ids(output_len, kWordVocab, rng)};
}

DualEncoderModel model_for(Variant v, std::size_t hidden) {
  ModelConfig c;
  c.variant = v;
  c.hidden = hidden;
  c.word_vocab = kWordVocab;
  c.char_vocab = v == Variant::SingleEncoder ? 0 : kCharVocab;
  return DualEncoderModel::random(c, 17);
}

void BM_MatmulRowVector(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(1);
  const Matrix x = random_uniform(1, 2 * n, -1, 1, rng);
  const Matrix w = random_uniform(2 * n, n, -1, 1, rng);
  for (auto _ : state) benchmark::DoNotOptimize(matmul(x, w));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(2 * n * n));
}
BENCHMARK(BM_MatmulRowVector)->Arg(64)->Arg(256)->Arg(512);

void BM_MatmulSquare(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(2);
  const Matrix a = random_uniform(n, n, -1, 1, rng);
  const Matrix b = random_uniform(n, n, -1, 1, rng);
  for (auto _ : state) benchmark::DoNotOptimize(matmul(a, b));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n * n * n));
}
BENCHMARK(BM_MatmulSquare)->Arg(64)->Arg(256);

void BM_LstmStep(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(3);
  const auto params = LstmCellParams::random(n, n, rng);
  const Matrix x = random_uniform(1, n, -1, 1, rng);
  const auto prev = LstmState::zeros(n);
  for (auto _ : state) benchmark::DoNotOptimize(lstm_step(params, x, prev));
}
BENCHMARK(BM_LstmStep)->Arg(64)->Arg(256)->Arg(512);

void BM_ForwardBackward(benchmark::State& state) {
  const auto variant = static_cast<Variant>(state.range(0));
  const auto hidden = static_cast<std::size_t>(state.range(1));
  const DualEncoderModel model = model_for(variant, hidden);
  Rng rng(4);
  const SequencePair pair = random_pair(rng, 20, 12);
  ModelParams grads = zeros_like(model.params());
  for (auto _ : state) {
    const ForwardResult r = forward(model, pair);
    backward(model, r.cache, grads);
    benchmark::DoNotOptimize(r.loss);
  }
  state.SetLabel(std::string(variant_name(variant)));
}
BENCHMARK(BM_ForwardBackward)
    ->ArgsProduct({{static_cast<int>(Variant::SingleEncoder), static_cast<int>(Variant::DualEncoder)}, {64, 256}})
    ->Unit(benchmark::kMillisecond);

void BM_Decode(benchmark::State& state) {
  const DualEncoderModel model = model_for(Variant::DualEncoder, 128);
  Rng rng(5);
  const SequencePair query = random_pair(rng, 20, 1);
  DecodeConfig cfg;
  cfg.max_len = 16;
  cfg.mode = state.range(0) == 1 ? DecodeMode::Greedy : DecodeMode::Beam;
  cfg.beam_width = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(decode(model, query, cfg));
  state.SetLabel(state.range(0) == 1 ? "greedy" : "beam");
}
BENCHMARK(BM_Decode)->Arg(1)->Arg(4)->Arg(10)->Unit(benchmark::kMillisecond);

void BM_Bleu(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(6);
  std::vector<std::vector<TokenId>> cands, refs;
  for (std::size_t i = 0; i < n; ++i) {
    cands.push_back(random_ids(10, 50, rng));
    refs.push_back(random_ids(12, 50, rng));
  }
  for (auto _ : state) benchmark::DoNotOptimize(bleu(cands, refs));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_Bleu)->Arg(100)->Arg(10000);

}  // namespace

BENCHMARK_MAIN();
