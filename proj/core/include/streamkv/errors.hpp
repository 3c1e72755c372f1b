#pragma once

#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace streamkv {

/// Invalid or inconsistent configuration. Carries every violation found,
/// not just the first one. Maps to process exit code 1.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(std::vector<std::string> violations)
        : std::runtime_error(join(violations)), violations_(std::move(violations)) {}

    const std::vector<std::string>& violations() const { return violations_; }

private:
    static std::string join(const std::vector<std::string>& v) {
        std::string out;
        for (const auto& s : v) {
            if (!out.empty()) out += "; ";
            out += s;
        }
        return out.empty() ? std::string("invalid config") : out;
    }

    std::vector<std::string> violations_;
};

/// A runtime invariant was breached mid-stream (positional bound, memory
/// bound, non-finite value). Maps to process exit code 2.
class InvariantError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Filesystem failure; message carries the offending path. Exit code 3.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace streamkv
