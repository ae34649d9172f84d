#include <benchmark/benchmark.h>

#include <vector>

#include "lscl/boundary.hpp"
#include "lscl/confidence_net.hpp"
#include "lscl/encoder.hpp"
#include "lscl/random.hpp"

using namespace lscl;

static void BM_SearchThresholds(benchmark::State& state) {
    Rng rng(1);
    std::vector<ScoredConfidence> records;
    for (int i = 0; i < state.range(0); ++i)
        records.emplace_back(rng.uniform(), static_cast<KnowledgeLabel>(rng.below(3)));
    for (auto _ : state) benchmark::DoNotOptimize(search_thresholds(records, 100));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_SearchThresholds)->Arg(1000)->Arg(10000)->Arg(100000);

static void BM_Forward(benchmark::State& state) {
    const NetConfig config;
    const EncoderSpec encoder;
    const auto params = init_parameters(config, encoder);
    const auto pair = encode_pair(encoder, "which hormone regulates blood glucose after a meal in healthy adults", "B insulin");
    for (auto _ : state) benchmark::DoNotOptimize(forward(params, config, pair.question, pair.answer, 0.8));
}
BENCHMARK(BM_Forward);

static void BM_ParameterGradients(benchmark::State& state) {
    const NetConfig config;
    const EncoderSpec encoder;
    const auto params = init_parameters(config, encoder);
    const auto pair = encode_pair(encoder, "which hormone regulates blood glucose after a meal in healthy adults", "B insulin");
    const NetInput input{pair.question, pair.answer, 0.8};
    for (auto _ : state) benchmark::DoNotOptimize(parameter_gradients(params, config, input, 0.8));
}
BENCHMARK(BM_ParameterGradients);

static void BM_HashEncode(benchmark::State& state) {
    const EncoderSpec spec;
    const auto encoder = make_encoder(spec);
    for (auto _ : state)
        benchmark::DoNotOptimize(encoder->encode("which hormone regulates blood glucose after a meal in healthy adults", 32));
}
BENCHMARK(BM_HashEncode);

BENCHMARK_MAIN();
