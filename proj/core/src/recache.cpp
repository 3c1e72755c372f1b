#include "streamkv/recache.hpp"

#include <algorithm>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

namespace streamkv {

double alpha(std::uint64_t d_t, const RecachePolicy& policy) {
    const double linear =
        1.0 - static_cast<double>(d_t) / static_cast<double>(policy.recache_window);
    return std::max(0.0, std::min(policy.alpha_max, linear));
}

std::vector<CacheEntry> recompute_new_entries(const DualMemoryCache& cache,
                                              const ConditionVector& new_prompt,
                                              const ToyBlock& generator) {
    std::vector<CacheEntry> out;
    out.reserve(cache.total_frames());
    // A young anchor can still sit in the window too; the frame is one
    // identity, so it gets one recomputed entry shared by both copies.
    std::unordered_set<std::uint64_t> seen;
    auto recompute = [&](const CacheEntry& old) {
        if (!seen.insert(old.abs_step).second) return;
        CacheEntry fresh = old;
        auto [keys, values] = project_kv(old.tokens, new_prompt, generator);
        fresh.raw_keys = std::move(keys);
        fresh.values = std::move(values);
        fresh.latent = mean_pool(old.tokens);
        fresh.prompt_id = new_prompt.prompt_id;
        out.push_back(std::move(fresh));
    };
    for (const CacheEntry& e : cache.gcm) recompute(e);
    for (const CacheEntry& e : cache.ltm) recompute(e);
    return out;
}

namespace {

void blend_vector(Vector& old_v, const Vector& new_v, double a) {
    if (old_v.size() != new_v.size()) {
        throw std::invalid_argument("recache: recomputed entry has mismatched dimensions");
    }
    for (std::size_t i = 0; i < old_v.size(); ++i) {
        old_v[i] = old_v[i] + a * (new_v[i] - old_v[i]);
    }
}

void blend_tokens(std::vector<Vector>& old_t, const std::vector<Vector>& new_t, double a) {
    if (old_t.size() != new_t.size()) {
        throw std::invalid_argument("recache: recomputed entry has mismatched token count");
    }
    for (std::size_t i = 0; i < old_t.size(); ++i) blend_vector(old_t[i], new_t[i], a);
}

// Payload moves; abs_step/shot_id/prompt_id stay — they record where the
// frame came from, not what the cache currently believes about it.
bool apply_update(CacheEntry& old_e, const CacheEntry& new_e, const RecachePolicy& policy,
                  std::uint64_t current_step, RecacheMode mode) {
    if (mode == RecacheMode::Uniform) {
        old_e.raw_keys = new_e.raw_keys;
        old_e.values = new_e.values;
        old_e.tokens = new_e.tokens;
        old_e.latent = new_e.latent;
        return true;
    }
    if (old_e.abs_step > current_step) {
        throw std::invalid_argument("recache: cached frame is newer than current_step");
    }
    const double a = alpha(current_step - old_e.abs_step, policy);
    if (a == 0.0) return false;  // leave the frame bit-identical
    blend_tokens(old_e.raw_keys, new_e.raw_keys, a);
    blend_tokens(old_e.values, new_e.values, a);
    blend_tokens(old_e.tokens, new_e.tokens, a);
    blend_vector(old_e.latent, new_e.latent, a);
    return true;
}

}  // namespace

std::size_t recache(DualMemoryCache& cache, const std::vector<CacheEntry>& new_entries,
                    const RecachePolicy& policy, std::uint64_t current_step, RecacheMode mode) {
    if (mode == RecacheMode::Flush) {
        throw std::invalid_argument("recache: flush mode resets the window instead of blending");
    }
    struct Pending {
        const CacheEntry* entry;
        bool used = false;
    };
    std::unordered_map<std::uint64_t, Pending> by_step;
    by_step.reserve(new_entries.size());
    for (const CacheEntry& e : new_entries) {
        if (!by_step.emplace(e.abs_step, Pending{&e}).second) {
            throw std::invalid_argument("recache: duplicate abs_step in recomputed entries");
        }
    }
    std::size_t updated = 0;
    // A frame dual-booked as both anchor and window entry consumes the same
    // recomputed entry for both copies, so they stay bit-identical twins.
    auto update_one = [&](CacheEntry& old_e) {
        auto it = by_step.find(old_e.abs_step);
        if (it == by_step.end()) {
            throw std::invalid_argument("recache: missing recomputed entry for a cached frame");
        }
        if (apply_update(old_e, *it->second.entry, policy, current_step, mode)) ++updated;
        it->second.used = true;
    };
    for (CacheEntry& e : cache.gcm) update_one(e);
    for (CacheEntry& e : cache.ltm) update_one(e);
    for (const auto& [step, pending] : by_step) {
        if (!pending.used) {
            throw std::invalid_argument(
                "recache: recomputed entries include frames not in the cache");
        }
    }
    return updated;
}

}  // namespace streamkv
