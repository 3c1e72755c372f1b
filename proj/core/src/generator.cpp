#include "streamkv/generator.hpp"

#include <cmath>
#include <stdexcept>

namespace streamkv {

namespace {

Matrix draw_matrix(SplitMix64& rng, std::size_t rows, std::size_t cols, double bound) {
    Matrix m(rows, cols);
    for (double& v : m.data) v = rng.uniform(-bound, bound);
    return m;
}

Vector conditioned(const Vector& token, const Vector& projected_condition) {
    return add(token, projected_condition);
}

}  // namespace

ToyBlock::ToyBlock(std::size_t dim_, std::size_t tokens_per_frame_, std::uint64_t seed_)
    : dim(dim_), tokens_per_frame(tokens_per_frame_), seed(seed_) {
    if (dim == 0 || tokens_per_frame == 0) {
        throw std::invalid_argument("ToyBlock: dim and tokens_per_frame must be positive");
    }
    SplitMix64 rng(seed);
    const double bound = 1.0 / std::sqrt(static_cast<double>(dim));
    w_q = draw_matrix(rng, dim, dim, bound);
    w_k = draw_matrix(rng, dim, dim, bound);
    w_v = draw_matrix(rng, dim, dim, bound);
    w_o = draw_matrix(rng, dim, dim, bound);
    w_c = draw_matrix(rng, dim, dim, bound);
    token_offsets.resize(tokens_per_frame);
    for (Vector& off : token_offsets) {
        off.resize(dim);
        for (double& v : off) v = rng.uniform(-bound, bound);
    }
}

ConditionVector encode_prompt(std::uint64_t prompt_seed, const ToyBlock& block) {
    SplitMix64 rng(prompt_seed);
    ConditionVector c;
    c.prompt_id = prompt_seed;
    c.data.resize(block.dim);
    for (double& v : c.data) v = rng.uniform(-1.0, 1.0);
    const double n = norm(c.data);
    if (n == 0.0) {
        c.data[0] = 1.0;  // astronomically unlikely, but keep the unit-norm contract total
    } else {
        for (double& v : c.data) v /= n;
    }
    return c;
}

std::pair<std::vector<Vector>, std::vector<Vector>> project_kv(
    const std::vector<Vector>& latent_tokens, const ConditionVector& condition,
    const ToyBlock& block) {
    if (condition.data.size() != block.dim) {
        throw std::invalid_argument("project_kv: condition dim mismatch");
    }
    const Vector cond_proj = block.w_c.apply(condition.data);
    std::vector<Vector> keys;
    std::vector<Vector> values;
    keys.reserve(latent_tokens.size());
    values.reserve(latent_tokens.size());
    for (const Vector& tok : latent_tokens) {
        if (tok.size() != block.dim) {
            throw std::invalid_argument("project_kv: token dim mismatch");
        }
        keys.push_back(block.w_k.apply(conditioned(tok, cond_proj)));
        values.push_back(block.w_v.apply(tok));
    }
    return {std::move(keys), std::move(values)};
}

CacheEntry make_entry(const LatentFrame& frame, const ConditionVector& condition,
                      const ToyBlock& block, std::uint64_t shot_id) {
    CacheEntry entry;
    auto [keys, values] = project_kv(frame.tokens, condition, block);
    entry.raw_keys = std::move(keys);
    entry.values = std::move(values);
    entry.tokens = frame.tokens;
    entry.latent = mean_pool(frame.tokens);
    entry.abs_step = frame.frame_index;
    entry.shot_id = shot_id;
    entry.prompt_id = condition.prompt_id;
    return entry;
}

namespace {

// Shared tail of both step paths: cache the finished frame and record the
// anchor decision.
void commit_frame(StepResult& result, const ConditionVector& condition, DualMemoryCache& cache,
                  const ToyBlock& block, bool offer_to_gcm) {
    CacheEntry entry = make_entry(result.frame, condition, block, cache.shot_id);
    if (offer_to_gcm) result.gcm_outcome = gcm_update(cache, entry);
    result.evicted = ltm_push(cache, std::move(entry));
}

}  // namespace

StepResult bootstrap_step(const ConditionVector& condition, DualMemoryCache& cache,
                          const ToyBlock& block, const RotaryTable& table,
                          InjectionAudit* audit, bool offer_to_gcm, std::uint64_t frame_index) {
    (void)table;  // all bootstrap tokens share index 0, so no rotation applies
    (void)audit;  // and no positional injection is recorded
    if (cache.total_frames() != 0) {
        throw std::invalid_argument("bootstrap_step: cache must be empty");
    }
    const Vector cond_proj = block.w_c.apply(condition.data);
    const Vector cond_base = block.w_o.apply(cond_proj);

    std::vector<Vector> base(block.tokens_per_frame);
    for (std::size_t i = 0; i < block.tokens_per_frame; ++i) {
        base[i] = add(cond_base, block.token_offsets[i]);
    }

    // One round of self-attention over the frame's own tokens.
    auto [keys, values] = project_kv(base, condition, block);
    const double scale = 1.0 / std::sqrt(static_cast<double>(block.dim));
    StepResult result;
    result.frame.frame_index = frame_index;
    result.frame.tokens.resize(block.tokens_per_frame);
    for (std::size_t i = 0; i < block.tokens_per_frame; ++i) {
        const Vector q = block.w_q.apply(conditioned(base[i], cond_proj));
        const Vector attn = scaled_dot_attention(q, keys, values, scale);
        result.frame.tokens[i] = add(base[i], block.w_o.apply(attn));
    }

    commit_frame(result, condition, cache, block, offer_to_gcm);
    return result;
}

StepResult step(const LatentFrame& prev_frame, const ConditionVector& condition,
                DualMemoryCache& cache, const ToyBlock& block, const RotaryTable& table,
                InjectionAudit* audit, bool offer_to_gcm) {
    if (cache.total_frames() == 0) {
        throw std::invalid_argument("step: cache is empty (use bootstrap_step for frame 0)");
    }
    const GatherResult gathered = gather(cache, table, audit);

    // The incoming frame sits one index past the newest cached window frame,
    // so query-to-key offsets equal true frame gaps.
    const std::uint64_t query_index = static_cast<std::uint64_t>(cache.ltm.size());
    const Vector cond_proj = block.w_c.apply(condition.data);
    const double scale = 1.0 / std::sqrt(static_cast<double>(block.dim));

    StepResult result;
    result.frame.frame_index = prev_frame.frame_index + 1;
    result.frame.tokens.resize(block.tokens_per_frame);
    double mass_acc = 0.0;
    for (std::size_t i = 0; i < block.tokens_per_frame; ++i) {
        const Vector q_raw = block.w_q.apply(conditioned(prev_frame.tokens[i], cond_proj));
        const Vector q = apply_rope(q_raw, query_index, table);
        const Vector weights = attention_weights(q, gathered.keys, scale);
        double gcm_mass = 0.0;
        for (std::size_t k = 0; k < weights.size(); ++k) {
            if (gathered.provenance[k] == Provenance::Gcm) gcm_mass += weights[k];
        }
        mass_acc += gcm_mass;
        const Vector attn = weighted_sum(gathered.values, weights);
        result.frame.tokens[i] = add(prev_frame.tokens[i], block.w_o.apply(attn));
    }
    result.gcm_attention_mass = mass_acc / static_cast<double>(block.tokens_per_frame);

    commit_frame(result, condition, cache, block, offer_to_gcm);
    return result;
}

}  // namespace streamkv
