#pragma once

#include <cstdint>
#include <string>

#include "streamkv/cache.hpp"

namespace streamkv {

/// Serializes the full cache state as one line of canonical JSON (sorted
/// keys, shortest-round-trip floats). Identical states produce byte-identical
/// text, which is what the determinism and replay tests compare.
std::string serialize_cache(const DualMemoryCache& cache, std::uint64_t step);

struct CacheSnapshot {
    DualMemoryCache cache;
    std::uint64_t step = 0;
};

/// Inverse of serialize_cache. Window/capacity are not part of the snapshot,
/// so the caller supplies them (normally from the run config); the parsed
/// state is validated against them.
CacheSnapshot parse_cache_snapshot(const std::string& text, std::size_t ltm_window,
                                   std::size_t gcm_capacity);

}  // namespace streamkv
