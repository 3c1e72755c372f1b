#include "streamkv/snapshot.hpp"

#include <nlohmann/json.hpp>
#include <stdexcept>

namespace streamkv {

namespace {

using nlohmann::json;

json tokens_to_json(const std::vector<Vector>& rows) {
    json arr = json::array();
    for (const Vector& row : rows) arr.push_back(row);
    return arr;
}

std::vector<Vector> tokens_from_json(const json& arr) {
    std::vector<Vector> rows;
    rows.reserve(arr.size());
    for (const json& row : arr) rows.push_back(row.get<Vector>());
    return rows;
}

json entry_to_json(const CacheEntry& e) {
    return json{{"abs_step", e.abs_step},   {"shot_id", e.shot_id},
                {"prompt_id", e.prompt_id}, {"latent", e.latent},
                {"raw_keys", tokens_to_json(e.raw_keys)},
                {"values", tokens_to_json(e.values)},
                {"tokens", tokens_to_json(e.tokens)}};
}

CacheEntry entry_from_json(const json& j) {
    CacheEntry e;
    e.abs_step = j.at("abs_step").get<std::uint64_t>();
    e.shot_id = j.at("shot_id").get<std::uint64_t>();
    e.prompt_id = j.at("prompt_id").get<std::uint64_t>();
    e.latent = j.at("latent").get<Vector>();
    e.raw_keys = tokens_from_json(j.at("raw_keys"));
    e.values = tokens_from_json(j.at("values"));
    e.tokens = tokens_from_json(j.at("tokens"));
    return e;
}

}  // namespace

std::string serialize_cache(const DualMemoryCache& cache, std::uint64_t step) {
    json j;
    j["shot_id"] = cache.shot_id;
    j["step"] = step;
    j["gcm"] = json::array();
    for (const CacheEntry& e : cache.gcm) j["gcm"].push_back(entry_to_json(e));
    j["ltm"] = json::array();
    for (const CacheEntry& e : cache.ltm) j["ltm"].push_back(entry_to_json(e));
    return j.dump();
}

CacheSnapshot parse_cache_snapshot(const std::string& text, std::size_t ltm_window,
                                   std::size_t gcm_capacity) {
    const json j = json::parse(text);
    CacheSnapshot snap;
    snap.cache.ltm_window = ltm_window;
    snap.cache.gcm_capacity = gcm_capacity;
    snap.cache.shot_id = j.at("shot_id").get<std::uint64_t>();
    snap.step = j.at("step").get<std::uint64_t>();
    for (const json& e : j.at("gcm")) snap.cache.gcm.push_back(entry_from_json(e));
    for (const json& e : j.at("ltm")) snap.cache.ltm.push_back(entry_from_json(e));
    if (snap.cache.gcm.size() > gcm_capacity || snap.cache.ltm.size() > ltm_window) {
        throw std::invalid_argument("cache snapshot exceeds the configured capacities");
    }
    return snap;
}

}  // namespace streamkv
