#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "streamkv/cache.hpp"
#include "streamkv/numerics.hpp"
#include "streamkv/rope.hpp"

namespace streamkv {

/// splitmix64: one 64-bit multiply-xor-shift chain per draw. Chosen because
/// its output is fully specified by three published constants, so "same seed,
/// same weights" holds across platforms and standard libraries.
struct SplitMix64 {
    std::uint64_t state = 0;

    explicit SplitMix64(std::uint64_t seed) : state(seed) {}

    std::uint64_t next() {
        state += 0x9E3779B97F4A7C15ULL;
        std::uint64_t z = state;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    /// Uniform in [0, 1) with 53 random bits.
    double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }
};

/// Single-layer, single-head causal attention block standing in for the
/// generation backbone. Immutable after construction; one block can drive
/// any number of concurrent streams.
struct ToyBlock {
    std::size_t dim = 64;
    std::size_t tokens_per_frame = 4;
    std::uint64_t seed = 0;
    Matrix w_q, w_k, w_v, w_o, w_c;          // w_c projects the prompt condition
    std::vector<Vector> token_offsets;        // fixed per-token offsets for the first frame

    ToyBlock(std::size_t dim, std::size_t tokens_per_frame, std::uint64_t seed);
};

/// Prompt condition: a deterministic unit vector derived from a seed.
struct ConditionVector {
    Vector data;
    std::uint64_t prompt_id = 0;
};

ConditionVector encode_prompt(std::uint64_t prompt_seed, const ToyBlock& block);

/// key_i = W_K·(token_i + W_C·condition), value_i = W_V·token_i.
/// Pure; also used to recompute keys under a different prompt.
std::pair<std::vector<Vector>, std::vector<Vector>> project_kv(
    const std::vector<Vector>& latent_tokens, const ConditionVector& condition,
    const ToyBlock& block);

/// Builds a cache entry (raw keys, values, tokens, pooled latent) for a
/// generated frame.
CacheEntry make_entry(const LatentFrame& frame, const ConditionVector& condition,
                      const ToyBlock& block, std::uint64_t shot_id);

struct StepResult {
    LatentFrame frame;
    double gcm_attention_mass = 0.0;    // mean over token queries of anchor-token weight
    UpdateOutcome gcm_outcome;          // anchor decision for this frame's entry
    std::optional<CacheEntry> evicted;  // frame that slid out of the window, if any
};

/// Generation against an empty cache: tokens seeded from the prompt alone
/// (W_O·W_C·condition plus fixed per-token offsets), refined by one round of
/// self-attention, then cached. Used for frame 0, and again whenever a flush
/// leaves a window-only stream with nothing to attend over — `frame_index`
/// keeps the absolute step counting in that case.
StepResult bootstrap_step(const ConditionVector& condition, DualMemoryCache& cache,
                          const ToyBlock& block, const RotaryTable& table,
                          InjectionAudit* audit = nullptr, bool offer_to_gcm = true,
                          std::uint64_t frame_index = 0);

/// One autoregressive step: queries from the previous frame's tokens, scaled
/// dot-product attention over the gathered cache, residual output, and the
/// new frame pushed into the cache. `offer_to_gcm` lets a policy leave the
/// anchor set alone (the pinned-sink baseline).
StepResult step(const LatentFrame& prev_frame, const ConditionVector& condition,
                DualMemoryCache& cache, const ToyBlock& block, const RotaryTable& table,
                InjectionAudit* audit = nullptr, bool offer_to_gcm = true);

}  // namespace streamkv
