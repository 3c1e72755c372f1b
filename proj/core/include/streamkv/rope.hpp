#pragma once

#include <cstdint>
#include <vector>

#include "streamkv/numerics.hpp"

namespace streamkv {

/// Precomputed rotary-embedding state. Immutable after construction, so a
/// single table can be shared by any number of streams/threads.
struct RotaryTable {
    std::size_t dim = 0;
    double base = 10000.0;
    std::uint64_t max_index = 21;        // upper bound for local (window) indices
    std::vector<double> frequencies;     // dim/2 inverse frequencies, strictly decreasing

    explicit RotaryTable(std::size_t dim, double base = 10000.0, std::uint64_t max_index = 21);
};

/// Counts positional injections so a stream can prove that every index it
/// ever rotated a cached key at stayed in range. `max_injected` is -1 until
/// the first injection (a bootstrap step performs none).
struct InjectionAudit {
    std::uint64_t global_count = 0;
    std::uint64_t local_count = 0;
    std::int64_t max_injected = -1;  // max over all injections
    std::int64_t max_global = -1;    // max over global injections; 0 once any occurred

    void record_global() {
        ++global_count;
        if (max_injected < 0) max_injected = 0;
        max_global = 0;
    }
    void record_local(std::uint64_t index) {
        ++local_count;
        if (static_cast<std::int64_t>(index) > max_injected) {
            max_injected = static_cast<std::int64_t>(index);
        }
    }
};

/// Rotates consecutive coordinate pairs of x by position·freq_i.
/// Exact identity at position 0; preserves the norm at any position.
Vector apply_rope(const Vector& x, std::uint64_t position, const RotaryTable& table);

/// Positional injection for global anchors: every anchor key is rotated at
/// the same fixed index 0, which makes anchor attention scores independent of
/// when the anchor was captured.
Vector inject_global(const Vector& raw_key, const RotaryTable& table, InjectionAudit* audit = nullptr);

/// Positional injection for the local window. Window slots are re-based so
/// the oldest cached frame sits at index 0 and the newest at
/// `newest_local_index`; consecutive frames are always exactly 1 apart, and
/// every index stays within [0, table.max_index] no matter how long the
/// stream has run.
Vector inject_local(const Vector& raw_key, std::uint64_t slot, std::uint64_t newest_local_index,
                    const RotaryTable& table, InjectionAudit* audit = nullptr);

}  // namespace streamkv
