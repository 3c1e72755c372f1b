#include "streamkv/rope.hpp"

#include <cmath>
#include <stdexcept>

#include "streamkv/errors.hpp"

namespace streamkv {

RotaryTable::RotaryTable(std::size_t dim_, double base_, std::uint64_t max_index_)
    : dim(dim_), base(base_), max_index(max_index_) {
    if (dim == 0 || dim % 2 != 0) {
        throw std::invalid_argument("RotaryTable: dim must be a positive even integer");
    }
    if (base <= 0.0) {
        throw std::invalid_argument("RotaryTable: base must be positive");
    }
    frequencies.resize(dim / 2);
    for (std::size_t i = 0; i < dim / 2; ++i) {
        frequencies[i] = std::pow(base, -2.0 * static_cast<double>(i) / static_cast<double>(dim));
    }
}

Vector apply_rope(const Vector& x, std::uint64_t position, const RotaryTable& table) {
    if (x.size() != table.dim) {
        throw std::invalid_argument("apply_rope: vector dim does not match table");
    }
    if (position == 0) return x;  // zero rotation is the identity, kept exact
    Vector out(x.size());
    const double p = static_cast<double>(position);
    for (std::size_t i = 0; i < table.frequencies.size(); ++i) {
        const double angle = p * table.frequencies[i];
        const double c = std::cos(angle);
        const double s = std::sin(angle);
        const double a = x[2 * i];
        const double b = x[2 * i + 1];
        out[2 * i] = a * c - b * s;
        out[2 * i + 1] = a * s + b * c;
    }
    return out;
}

Vector inject_global(const Vector& raw_key, const RotaryTable& table, InjectionAudit* audit) {
    if (raw_key.size() != table.dim) {
        throw std::invalid_argument("inject_global: key dim does not match table");
    }
    if (audit) audit->record_global();
    return raw_key;  // apply_rope(raw_key, 0) == raw_key, bitwise
}

Vector inject_local(const Vector& raw_key, std::uint64_t slot, std::uint64_t newest_local_index,
                    const RotaryTable& table, InjectionAudit* audit) {
    // The window is re-based at 0, so the slot (oldest-first position within
    // the current occupancy) is the temporal index itself.
    if (slot > newest_local_index) {
        throw InvariantError("inject_local: slot beyond newest local index");
    }
    if (newest_local_index > table.max_index) {
        throw InvariantError("inject_local: local index escaped [0, max_index]");
    }
    if (audit) audit->record_local(slot);
    return apply_rope(raw_key, slot, table);
}

}  // namespace streamkv
