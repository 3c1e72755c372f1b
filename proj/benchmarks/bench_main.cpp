// Microbenchmarks for the hot paths of a streaming step: rotation, cache
// gather, anchor-set updates, the full generation step, and a prompt-switch
// refresh. Representative numbers on one core of the dev container:
//
//   BM_ApplyRope/64          ~0.4 us
//   BM_Gather/64             ~10 us    (9 frames x 4 tokens)
//   BM_GcmUpdate/64          ~1 us     (K = 3, leave-one-out scores)
//   BM_StreamStep/64         ~50 us    (attention + projections + metrics)
//   BM_PromptSwitchRefresh   ~150 us   (recompute 9 frames + blend)

#include <benchmark/benchmark.h>

#include <cstdint>
#include <vector>

#include "streamkv/cache.hpp"
#include "streamkv/config.hpp"
#include "streamkv/generator.hpp"
#include "streamkv/recache.hpp"
#include "streamkv/rope.hpp"
#include "streamkv/simulator.hpp"

namespace {

using namespace streamkv;

StreamConfig bench_config(std::size_t dim) {
    StreamConfig cfg;
    cfg.seed = 1;
    cfg.dim = dim;
    cfg.tokens_per_frame = 4;
    cfg.horizon = 4096;
    return cfg;
}

// A stream advanced past the fill phase, so the cache sits at its
// steady-state footprint of K + W frames.
Stream warm_stream(std::size_t dim) {
    Stream stream(bench_config(dim));
    for (int i = 0; i < 40; ++i) stream.advance();
    return stream;
}

void BM_ApplyRope(benchmark::State& state) {
    const auto dim = static_cast<std::size_t>(state.range(0));
    RotaryTable table(dim);
    SplitMix64 rng(9);
    Vector x(dim);
    for (auto& v : x) v = rng.uniform(-1.0, 1.0);
    std::uint64_t pos = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(apply_rope(x, pos % 22, table));
        ++pos;
    }
    state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_ApplyRope)->Arg(64)->Arg(256)->Arg(1024);

void BM_Gather(benchmark::State& state) {
    const auto dim = static_cast<std::size_t>(state.range(0));
    Stream stream = warm_stream(dim);
    const DualMemoryCache& cache = stream.cache();
    for (auto _ : state) {
        InjectionAudit audit;
        benchmark::DoNotOptimize(gather(cache, stream.table(), &audit));
    }
    // One item per rotated or passed-through token.
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(
        cache.total_frames() * stream.config().tokens_per_frame));
}
BENCHMARK(BM_Gather)->Arg(64)->Arg(256);

// Offer frames to a full anchor set: importance against K anchors,
// leave-one-out redundancy, and the occasional replacement. Candidate
// entries come from a pre-built pool so the projection cost stays out of
// the timed region.
void BM_GcmUpdate(benchmark::State& state) {
    const auto dim = static_cast<std::size_t>(state.range(0));
    Stream stream = warm_stream(dim);
    DualMemoryCache cache = stream.cache();
    SplitMix64 rng(17);
    std::vector<CacheEntry> pool(256);
    std::uint64_t next_step = 1000;
    for (auto& entry : pool) {
        LatentFrame frame;
        frame.frame_index = next_step++;
        frame.tokens.resize(stream.config().tokens_per_frame);
        for (auto& tok : frame.tokens) {
            tok.resize(dim);
            for (auto& v : tok) v = rng.uniform(-1.0, 1.0);
        }
        entry = make_entry(frame, stream.condition(), stream.block(), 0);
    }
    std::size_t i = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(gcm_update(cache, pool[i]));
        i = (i + 1) % pool.size();
    }
    state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_GcmUpdate)->Arg(64)->Arg(256);

// Steady-state cost of one autoregressive step, metrics included. The stream
// is re-created outside the timed region before it runs out of horizon.
void BM_StreamStep(benchmark::State& state) {
    const auto dim = static_cast<std::size_t>(state.range(0));
    Stream stream = warm_stream(dim);
    for (auto _ : state) {
        if (stream.done()) {
            state.PauseTiming();
            stream = warm_stream(dim);
            state.ResumeTiming();
        }
        benchmark::DoNotOptimize(stream.advance());
    }
    state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_StreamStep)->Arg(64)->Arg(256);

// Full prompt-switch refresh: re-project every cached frame under the new
// prompt, then blend by age. This is the one step-time spike the scheme adds.
void BM_PromptSwitchRefresh(benchmark::State& state) {
    Stream stream = warm_stream(64);
    DualMemoryCache cache = stream.cache();
    const ConditionVector new_prompt = encode_prompt(7777, stream.block());
    RecachePolicy policy;  // alpha_max 0.8 over the default K + W horizon
    const std::uint64_t now = stream.next_step() - 1;
    for (auto _ : state) {
        auto entries = recompute_new_entries(cache, new_prompt, stream.block());
        benchmark::DoNotOptimize(recache(cache, entries, policy, now));
    }
    state.SetItemsProcessed(state.iterations() *
                            static_cast<std::int64_t>(cache.total_frames()));
}
BENCHMARK(BM_PromptSwitchRefresh);

}  // namespace

BENCHMARK_MAIN();
