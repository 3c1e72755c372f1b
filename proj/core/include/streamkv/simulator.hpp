#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "streamkv/cache.hpp"
#include "streamkv/config.hpp"
#include "streamkv/generator.hpp"
#include "streamkv/rope.hpp"

namespace streamkv {

/// Per-step observables of a running stream.
struct MetricsRecord {
    std::uint64_t step = 0;
    double gcm_attention_mass = 0.0;          // weight landing on anchor tokens, in [0,1]
    std::int64_t max_injected_index = -1;     // largest positional index injected this step
    std::uint64_t cache_frames = 0;           // total frames cached after the step
    double latent_drift = 0.0;                // ‖latent_t − latent_{t−1}‖, 0 at t=0
    double gcm_min_pairwise_diversity = 1.0;  // 1 − max pairwise anchor similarity
    std::optional<std::string> event_flag;    // "prompt_switch" | "shot_cut"

    bool operator==(const MetricsRecord&) const = default;
};

/// One stream advanced step by step. Exposes its internals (cache, block,
/// table, last audit) so tests and the snapshot command can probe mid-run
/// state; run_stream is the plain drive-to-horizon wrapper.
class Stream {
  public:
    explicit Stream(const StreamConfig& config);

    /// Applies any event scheduled for the next step, generates one frame,
    /// and returns the step's metrics. Throws InvariantError if a runtime
    /// invariant breaks (or when the fault-injection hook fires).
    MetricsRecord advance();

    bool done() const { return next_step_ >= config_.horizon; }
    std::uint64_t next_step() const { return next_step_; }
    const StreamConfig& config() const { return config_; }
    const DualMemoryCache& cache() const { return cache_; }
    const ToyBlock& block() const { return block_; }
    const RotaryTable& table() const { return table_; }
    const ConditionVector& condition() const { return condition_; }
    const LatentFrame& last_frame() const { return last_frame_; }
    const InjectionAudit& last_audit() const { return last_audit_; }

  private:
    StreamConfig config_;
    ToyBlock block_;
    RotaryTable table_;
    DualMemoryCache cache_;
    ConditionVector condition_;
    LatentFrame last_frame_;
    Vector prev_latent_;
    InjectionAudit last_audit_;
    std::uint64_t next_step_ = 0;
    std::size_t next_event_ = 0;
    std::optional<std::uint64_t> fault_step_;
};

/// Runs the configured stream to its horizon, one record per step.
std::vector<MetricsRecord> run_stream(const StreamConfig& config);

/// Aggregates for one policy/mode variant of a comparison run.
struct VariantReport {
    std::string name;
    double mean_gcm_attention_mass = 0.0;
    std::int64_t max_injected_index = -1;
    double mean_latent_drift = 0.0;
    double switch_drift_mean = 0.0;  // drift at prompt-switch steps only
    double switch_drift_max = 0.0;
    std::uint64_t switch_steps = 0;
};

using ComparisonReport = std::vector<VariantReport>;

/// Runs one variant per name (policy names override the cache policy,
/// recache mode names override the switch handling), each with the base
/// config's seed and schedule, in parallel. Report order follows the input.
ComparisonReport compare_policies(const StreamConfig& base_config,
                                  const std::vector<std::string>& variant_names);

std::string report_to_json(const ComparisonReport& report);

enum class MetricsFormat { Jsonl, Csv };

/// Writes records to path; JSONL has one sorted-key object per line, CSV a
/// header row and floats at 9 significant digits. I/O failures carry the
/// path in the error.
void emit_metrics(const std::vector<MetricsRecord>& records, const std::string& path,
                  MetricsFormat format);

/// Inverse of the JSONL emission; round-trips records exactly.
std::vector<MetricsRecord> parse_metrics_jsonl(const std::string& text);

}  // namespace streamkv
