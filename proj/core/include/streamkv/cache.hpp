#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <vector>

#include "streamkv/numerics.hpp"
#include "streamkv/rope.hpp"

namespace streamkv {

/// One cached frame. Keys are stored *unrotated*; positional phase is
/// injected at gather time, which is what lets an anchor keep a stable
/// temporal identity no matter how old it gets.
struct CacheEntry {
    std::vector<Vector> raw_keys;   // per token, no rotation applied
    std::vector<Vector> values;     // per token, never rotated
    std::vector<Vector> tokens;     // the frame's output tokens (kept so keys can
                                    // be recomputed under a different prompt)
    Vector latent;                  // mean-pooled tokens; drives all similarity decisions
    std::uint64_t abs_step = 0;
    std::uint64_t shot_id = 0;
    std::uint64_t prompt_id = 0;
};

/// Sliding window of recent frames (capacity W, oldest first) plus a small
/// protected set of anchor frames (capacity K). The window slides; anchors
/// are only ever displaced by the diversity rule in gcm_update.
struct DualMemoryCache {
    std::size_t ltm_window = 6;    // W
    std::size_t gcm_capacity = 3;  // K
    std::deque<CacheEntry> ltm;    // oldest first, strictly increasing abs_step
    std::vector<CacheEntry> gcm;   // insertion/replacement order, unique abs_steps
    std::uint64_t shot_id = 0;

    std::size_t total_frames() const { return ltm.size() + gcm.size(); }
};

/// Audit record of one anchor-replacement decision.
struct UpdateOutcome {
    bool replaced = false;
    std::optional<std::uint64_t> evicted_step;
    double importance = 0.0;         // novelty of the candidate
    double target_redundancy = 0.0;  // redundancy of the chosen replacement target
};

/// Appends a frame to the sliding window; returns the evicted oldest frame
/// once the window is full. Anchors are untouched.
std::optional<CacheEntry> ltm_push(DualMemoryCache& cache, CacheEntry entry);

/// Novelty of a candidate latent against the anchor set:
/// 1 − max cosine similarity. Errors on an empty anchor set.
double importance(const Vector& latent, std::span<const CacheEntry> anchors);

/// Leave-one-out redundancy per anchor: score[i] = max over j≠i of
/// cos(anchor_i, anchor_j). Requires at least two anchors.
std::vector<double> redundancy_scores(std::span<const CacheEntry> anchors);

/// Anchor-set update. While the set is below capacity the entry is appended
/// unconditionally; once full, the most redundant anchor (ties broken toward
/// the smallest abs_step) is replaced iff the candidate's importance strictly
/// exceeds that anchor's redundancy. With capacity 1 the single anchor's
/// redundancy is defined as −1, so any candidate replaces it; with capacity 0
/// the update is inert.
UpdateOutcome gcm_update(DualMemoryCache& cache, const CacheEntry& entry);

/// Empties the sliding window for a scene transition, keeping every anchor.
/// Returns the number of flushed frames. The local index base restarts at 0.
std::size_t ltm_reset(DualMemoryCache& cache, std::uint64_t new_shot_id);

enum class Provenance : std::uint8_t { Gcm, Ltm };

struct GatherResult {
    std::vector<Vector> keys;              // rotated, anchors first then window in step order
    std::vector<Vector> values;            // raw
    std::vector<Provenance> provenance;    // per token
};

/// Assembles the attention key/value lists: anchor keys rotated at the fixed
/// global index 0, window keys at re-based local indices, values passed
/// through unrotated. Stateless over the cache — gathering twice yields
/// identical output.
GatherResult gather(const DualMemoryCache& cache, const RotaryTable& table,
                    InjectionAudit* audit = nullptr);

}  // namespace streamkv
