#pragma once

#include <cstdint>
#include <vector>

#include "streamkv/cache.hpp"
#include "streamkv/generator.hpp"

namespace streamkv {

/// Proximity-decayed interpolation schedule for prompt switches.
struct RecachePolicy {
    double alpha_max = 0.8;
    std::uint64_t recache_window = 9;  // D, in frames; default K+W is applied at config load
};

enum class RecacheMode { Proximity, Uniform, Flush };

/// Blend coefficient for a frame at temporal distance d_t from the newest
/// generated frame: max(0, min(alpha_max, 1 − d_t/D)). Non-increasing in d_t;
/// exactly 0 once d_t ≥ D.
double alpha(std::uint64_t d_t, const RecachePolicy& policy);

/// Re-runs the key/value projections of every cached frame (anchors first,
/// then window frames) under a different prompt, without advancing the
/// stream. One entry per distinct frame: an anchor that still sits in the
/// window yields a single recomputed entry. Tokens, abs_step and shot_id are
/// carried over unchanged (prompt_id reflects the new prompt), so feeding the
/// generating prompt back in reproduces the cached keys bit-exactly.
std::vector<CacheEntry> recompute_new_entries(const DualMemoryCache& cache,
                                              const ConditionVector& new_prompt,
                                              const ToyBlock& generator);

/// Updates every cached frame toward its recomputed counterpart:
///   x' = x_old + α_t·(x_new − x_old),  d_t = current_step − abs_step.
/// Keys, values, tokens and the pooled latent blend identically; identifiers
/// (abs_step, shot_id, prompt_id) never change. Frames with α_t = 0 are left
/// bit-identical. Uniform mode assigns the recomputed payload outright
/// (the α≡1 full-refresh baseline, bit-exact). Returns the number of cache
/// slots that changed. new_entries must cover the cached frames exactly, one
/// per distinct abs_step; Flush is handled a level up and is rejected here.
std::size_t recache(DualMemoryCache& cache, const std::vector<CacheEntry>& new_entries,
                    const RecachePolicy& policy, std::uint64_t current_step,
                    RecacheMode mode = RecacheMode::Proximity);

}  // namespace streamkv
