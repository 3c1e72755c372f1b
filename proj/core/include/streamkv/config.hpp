#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "streamkv/recache.hpp"

namespace streamkv {

struct ScheduleEvent {
    enum class Kind { PromptSwitch, ShotCut };
    std::uint64_t step = 0;
    Kind kind = Kind::PromptSwitch;
    std::uint64_t prompt_seed = 0;  // meaningful for PromptSwitch only
};

enum class CachePolicyKind { DualMemory, SlidingOnly, SingleSink };

struct StreamConfig {
    std::uint64_t seed = 0;
    std::size_t dim = 64;
    std::size_t tokens_per_frame = 4;
    std::uint64_t horizon = 100;
    std::size_t gcm_capacity = 3;
    std::size_t ltm_window = 6;
    std::uint64_t rope_max_index = 21;
    CachePolicyKind policy = CachePolicyKind::DualMemory;
    std::uint64_t initial_prompt_seed = 0;        // resolved to seed when absent from the file
    bool initial_prompt_seed_explicit = false;    // whether the file pinned it
    RecachePolicy recache;                  // recache_window resolved to K+W when absent
    RecacheMode recache_mode = RecacheMode::Proximity;
    std::vector<ScheduleEvent> schedule;
};

/// Anchor capacity the policy actually runs with: the window-only baseline
/// disables anchors, the pinned-sink baseline keeps exactly one.
std::size_t effective_gcm_capacity(const StreamConfig& config);

/// Parses and validates a JSON config. Unknown keys are rejected; every
/// violation is collected and reported at once via ConfigError, and no
/// partially-valid config ever escapes.
StreamConfig parse_config(const std::string& json_text);

/// The config with every default materialized, serialized with sorted keys —
/// the canonical form that gets hashed into run manifests.
std::string canonical_config_json(const StreamConfig& config);

std::string policy_name(CachePolicyKind policy);
std::string recache_mode_name(RecacheMode mode);

/// FNV-1a 64-bit — tiny, dependency-free, stable across platforms.
std::uint64_t fnv1a_64(std::string_view bytes);

/// fnv1a_64 of canonical_config_json, as 16 lowercase hex digits.
std::string config_hash_hex(const StreamConfig& config);

}  // namespace streamkv
