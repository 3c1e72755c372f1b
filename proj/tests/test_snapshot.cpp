#include <doctest.h>

#include <stdexcept>
#include <string>

#include "streamkv/simulator.hpp"
#include "streamkv/snapshot.hpp"

using namespace streamkv;

namespace {

DualMemoryCache cache_after(std::uint64_t steps) {
    StreamConfig cfg;
    cfg.seed = 9;
    cfg.dim = 32;
    cfg.tokens_per_frame = 2;
    cfg.horizon = steps;
    Stream stream(cfg);
    while (!stream.done()) stream.advance();
    return stream.cache();
}

}  // namespace

TEST_CASE("a snapshot is one line of json") {
    const DualMemoryCache cache = cache_after(8);
    const std::string text = serialize_cache(cache, 7);
    CHECK(text.find('\n') == std::string::npos);
    CHECK(text.front() == '{');
    CHECK(text.back() == '}');
    CHECK(text.find("\"gcm\"") != std::string::npos);
    CHECK(text.find("\"ltm\"") != std::string::npos);
    CHECK(text.find("\"step\":7") != std::string::npos);
}

TEST_CASE("snapshots round-trip to equal state and equal bytes") {
    const DualMemoryCache cache = cache_after(12);
    const std::string text = serialize_cache(cache, 11);

    const CacheSnapshot parsed = parse_cache_snapshot(text, cache.ltm_window, cache.gcm_capacity);
    CHECK(parsed.step == 11);
    CHECK(parsed.cache.shot_id == cache.shot_id);
    REQUIRE(parsed.cache.gcm.size() == cache.gcm.size());
    REQUIRE(parsed.cache.ltm.size() == cache.ltm.size());
    for (std::size_t i = 0; i < cache.gcm.size(); ++i) {
        CHECK(parsed.cache.gcm[i].abs_step == cache.gcm[i].abs_step);
        CHECK(parsed.cache.gcm[i].prompt_id == cache.gcm[i].prompt_id);
        for (std::size_t t = 0; t < cache.gcm[i].raw_keys.size(); ++t) {
            for (std::size_t d = 0; d < 32; ++d) {
                CHECK(parsed.cache.gcm[i].raw_keys[t][d] == cache.gcm[i].raw_keys[t][d]);
            }
        }
    }

    // Shortest-round-trip floats make serialize(parse(s)) == s exactly.
    CHECK(serialize_cache(parsed.cache, parsed.step) == text);
}

TEST_CASE("identical runs snapshot to identical bytes") {
    const std::string a = serialize_cache(cache_after(20), 19);
    const std::string b = serialize_cache(cache_after(20), 19);
    CHECK(a == b);
}

TEST_CASE("capacity mismatches and garbage are rejected") {
    const DualMemoryCache cache = cache_after(12);
    const std::string text = serialize_cache(cache, 11);
    CHECK_THROWS_AS(parse_cache_snapshot(text, /*ltm_window=*/2, /*gcm_capacity=*/3),
                    std::invalid_argument);
    CHECK_THROWS_AS(parse_cache_snapshot(text, /*ltm_window=*/6, /*gcm_capacity=*/1),
                    std::invalid_argument);
    CHECK_THROWS_AS(parse_cache_snapshot("not json", 6, 3), std::exception);
    CHECK_THROWS_AS(parse_cache_snapshot("{}", 6, 3), std::exception);
}
