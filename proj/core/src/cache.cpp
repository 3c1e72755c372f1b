#include "streamkv/cache.hpp"

#include <stdexcept>

#include "streamkv/errors.hpp"

namespace streamkv {

std::optional<CacheEntry> ltm_push(DualMemoryCache& cache, CacheEntry entry) {
    if (!cache.ltm.empty() && entry.abs_step <= cache.ltm.back().abs_step) {
        throw std::invalid_argument("ltm_push: abs_step must be strictly increasing");
    }
    if (entry.shot_id != cache.shot_id) {
        throw std::invalid_argument("ltm_push: entry shot_id does not match cache");
    }
    cache.ltm.push_back(std::move(entry));
    if (cache.ltm.size() > cache.ltm_window) {
        CacheEntry evicted = std::move(cache.ltm.front());
        cache.ltm.pop_front();
        return evicted;
    }
    return std::nullopt;
}

double importance(const Vector& latent, std::span<const CacheEntry> anchors) {
    if (anchors.empty()) {
        throw std::invalid_argument("importance: anchor set is empty (fill path applies)");
    }
    double max_sim = -2.0;
    for (const CacheEntry& a : anchors) {
        const double s = cosine_similarity(latent, a.latent);
        if (s > max_sim) max_sim = s;
    }
    return 1.0 - max_sim;
}

std::vector<double> redundancy_scores(std::span<const CacheEntry> anchors) {
    if (anchors.size() < 2) {
        throw std::invalid_argument("redundancy_scores: need at least two anchors");
    }
    std::vector<double> scores(anchors.size());
    for (std::size_t i = 0; i < anchors.size(); ++i) {
        double max_sim = -2.0;
        for (std::size_t j = 0; j < anchors.size(); ++j) {
            if (j == i) continue;
            const double s = cosine_similarity(anchors[i].latent, anchors[j].latent);
            if (s > max_sim) max_sim = s;
        }
        scores[i] = max_sim;
    }
    return scores;
}

UpdateOutcome gcm_update(DualMemoryCache& cache, const CacheEntry& entry) {
    UpdateOutcome outcome;
    if (cache.gcm_capacity == 0) return outcome;  // anchoring disabled

    if (cache.gcm.size() < cache.gcm_capacity) {
        // Fill phase: the first K frames define the anchor set unconditionally.
        outcome.importance = cache.gcm.empty() ? 1.0 : importance(entry.latent, cache.gcm);
        outcome.target_redundancy = -1.0;
        cache.gcm.push_back(entry);
        return outcome;
    }

    outcome.importance = importance(entry.latent, cache.gcm);

    // Pick the most redundant anchor; on an exact score tie evict the oldest.
    std::size_t target = 0;
    if (cache.gcm.size() == 1) {
        // Leave-one-out is undefined for a single anchor; define its
        // redundancy as -1 so any candidate may replace it.
        outcome.target_redundancy = -1.0;
    } else {
        const std::vector<double> scores = redundancy_scores(cache.gcm);
        for (std::size_t i = 1; i < scores.size(); ++i) {
            if (scores[i] > scores[target] ||
                (scores[i] == scores[target] &&
                 cache.gcm[i].abs_step < cache.gcm[target].abs_step)) {
                target = i;
            }
        }
        outcome.target_redundancy = scores[target];
    }

    if (outcome.importance > outcome.target_redundancy) {
        outcome.replaced = true;
        outcome.evicted_step = cache.gcm[target].abs_step;
        cache.gcm[target] = entry;
    }
    return outcome;
}

std::size_t ltm_reset(DualMemoryCache& cache, std::uint64_t new_shot_id) {
    if (new_shot_id <= cache.shot_id) {
        throw std::invalid_argument("ltm_reset: shot_id must increase");
    }
    const std::size_t flushed = cache.ltm.size();
    cache.ltm.clear();
    cache.shot_id = new_shot_id;
    return flushed;
}

GatherResult gather(const DualMemoryCache& cache, const RotaryTable& table,
                    InjectionAudit* audit) {
    if (cache.total_frames() == 0) {
        throw std::invalid_argument("gather: cache is empty");
    }
    GatherResult out;
    const std::size_t tokens_per_frame =
        cache.gcm.empty() ? cache.ltm.front().raw_keys.size() : cache.gcm.front().raw_keys.size();
    out.keys.reserve(cache.total_frames() * tokens_per_frame);
    out.values.reserve(cache.total_frames() * tokens_per_frame);
    out.provenance.reserve(cache.total_frames() * tokens_per_frame);

    for (const CacheEntry& e : cache.gcm) {
        for (std::size_t t = 0; t < e.raw_keys.size(); ++t) {
            out.keys.push_back(inject_global(e.raw_keys[t], table, audit));
            out.values.push_back(e.values[t]);
            out.provenance.push_back(Provenance::Gcm);
        }
    }
    const std::uint64_t newest_local =
        cache.ltm.empty() ? 0 : static_cast<std::uint64_t>(cache.ltm.size() - 1);
    for (std::size_t slot = 0; slot < cache.ltm.size(); ++slot) {
        const CacheEntry& e = cache.ltm[slot];
        for (std::size_t t = 0; t < e.raw_keys.size(); ++t) {
            out.keys.push_back(inject_local(e.raw_keys[t], slot, newest_local, table, audit));
            out.values.push_back(e.values[t]);
            out.provenance.push_back(Provenance::Ltm);
        }
    }
    return out;
}

}  // namespace streamkv
