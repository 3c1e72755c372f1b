#include "streamkv/config.hpp"

#include <nlohmann/json.hpp>
#include <set>
#include <stdexcept>

#include "streamkv/errors.hpp"

namespace streamkv {

namespace {

using nlohmann::json;

constexpr const char* kTopLevelKeys[] = {"seed",          "dim",
                                         "tokens_per_frame", "horizon",
                                         "gcm_capacity",  "ltm_window",
                                         "rope_max_index", "policy",
                                         "initial_prompt_seed", "recache",
                                         "schedule"};
constexpr const char* kRecacheKeys[] = {"alpha_max", "recache_window", "mode"};

class Collector {
  public:
    void add(std::string msg) { violations_.push_back(std::move(msg)); }
    bool clean() const { return violations_.empty(); }
    void throw_if_any() const {
        if (!violations_.empty()) throw ConfigError(violations_);
    }

  private:
    std::vector<std::string> violations_;
};

template <typename Keys>
void reject_unknown_keys(const json& obj, const Keys& known, const char* where, Collector& out) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool found = false;
        for (const char* k : known) {
            if (it.key() == k) {
                found = true;
                break;
            }
        }
        if (!found) out.add(std::string("unknown key '") + it.key() + "' in " + where);
    }
}

bool read_uint(const json& obj, const char* key, std::uint64_t& target, Collector& out) {
    auto it = obj.find(key);
    if (it == obj.end()) return false;
    if (!it->is_number_unsigned()) {
        out.add(std::string(key) + " must be a non-negative integer");
        return false;
    }
    target = it->get<std::uint64_t>();
    return true;
}

bool read_double(const json& obj, const char* key, double& target, Collector& out) {
    auto it = obj.find(key);
    if (it == obj.end()) return false;
    if (!it->is_number()) {
        out.add(std::string(key) + " must be a number");
        return false;
    }
    target = it->get<double>();
    return true;
}

void parse_policy(const json& obj, StreamConfig& cfg, Collector& out) {
    auto it = obj.find("policy");
    if (it == obj.end()) return;
    if (!it->is_string()) {
        out.add("policy must be a string");
        return;
    }
    const std::string v = it->get<std::string>();
    if (v == "dual_memory") {
        cfg.policy = CachePolicyKind::DualMemory;
    } else if (v == "sliding_only") {
        cfg.policy = CachePolicyKind::SlidingOnly;
    } else if (v == "single_sink") {
        cfg.policy = CachePolicyKind::SingleSink;
    } else {
        out.add("policy must be one of dual_memory|sliding_only|single_sink, got '" + v + "'");
    }
}

void parse_recache(const json& obj, StreamConfig& cfg, bool& window_given, Collector& out) {
    auto it = obj.find("recache");
    if (it == obj.end()) return;
    if (!it->is_object()) {
        out.add("recache must be an object");
        return;
    }
    reject_unknown_keys(*it, kRecacheKeys, "recache", out);
    read_double(*it, "alpha_max", cfg.recache.alpha_max, out);
    window_given = read_uint(*it, "recache_window", cfg.recache.recache_window, out);
    auto mode = it->find("mode");
    if (mode != it->end()) {
        if (!mode->is_string()) {
            out.add("recache.mode must be a string");
        } else {
            const std::string v = mode->get<std::string>();
            if (v == "proximity") {
                cfg.recache_mode = RecacheMode::Proximity;
            } else if (v == "uniform") {
                cfg.recache_mode = RecacheMode::Uniform;
            } else if (v == "flush") {
                cfg.recache_mode = RecacheMode::Flush;
            } else {
                out.add("recache.mode must be one of proximity|uniform|flush, got '" + v + "'");
            }
        }
    }
}

void parse_schedule(const json& obj, StreamConfig& cfg, Collector& out) {
    auto it = obj.find("schedule");
    if (it == obj.end()) return;
    if (!it->is_array()) {
        out.add("schedule must be an array");
        return;
    }
    for (std::size_t i = 0; i < it->size(); ++i) {
        const json& ev = (*it)[i];
        const std::string where = "schedule[" + std::to_string(i) + "]";
        if (!ev.is_object()) {
            out.add(where + " must be an object");
            continue;
        }
        ScheduleEvent parsed;
        if (!read_uint(ev, "step", parsed.step, out)) {
            out.add(where + " needs a step");
            continue;
        }
        auto kind = ev.find("kind");
        if (kind == ev.end() || !kind->is_string()) {
            out.add(where + " needs a string kind");
            continue;
        }
        const std::string k = kind->get<std::string>();
        if (k == "prompt_switch") {
            parsed.kind = ScheduleEvent::Kind::PromptSwitch;
            static constexpr const char* keys[] = {"step", "kind", "prompt_seed"};
            reject_unknown_keys(ev, keys, where.c_str(), out);
            if (!read_uint(ev, "prompt_seed", parsed.prompt_seed, out)) {
                out.add(where + ": prompt_switch needs a prompt_seed");
                continue;
            }
        } else if (k == "shot_cut") {
            parsed.kind = ScheduleEvent::Kind::ShotCut;
            static constexpr const char* keys[] = {"step", "kind"};
            reject_unknown_keys(ev, keys, where.c_str(), out);
        } else {
            out.add(where + ": kind must be prompt_switch or shot_cut, got '" + k + "'");
            continue;
        }
        cfg.schedule.push_back(parsed);
    }
}

}  // namespace

std::size_t effective_gcm_capacity(const StreamConfig& config) {
    switch (config.policy) {
        case CachePolicyKind::SlidingOnly: return 0;
        case CachePolicyKind::SingleSink: return 1;
        case CachePolicyKind::DualMemory: break;
    }
    return config.gcm_capacity;
}

StreamConfig parse_config(const std::string& json_text) {
    Collector out;
    json obj;
    try {
        obj = json::parse(json_text);
    } catch (const json::parse_error& e) {
        out.add(std::string("not valid JSON: ") + e.what());
        out.throw_if_any();
    }
    if (!obj.is_object()) {
        out.add("config root must be a JSON object");
        out.throw_if_any();
    }

    StreamConfig cfg;
    reject_unknown_keys(obj, kTopLevelKeys, "config", out);

    read_uint(obj, "seed", cfg.seed, out);
    std::uint64_t u = 0;
    if (read_uint(obj, "dim", u, out)) cfg.dim = static_cast<std::size_t>(u);
    if (read_uint(obj, "tokens_per_frame", u, out)) cfg.tokens_per_frame = static_cast<std::size_t>(u);
    read_uint(obj, "horizon", cfg.horizon, out);
    if (read_uint(obj, "gcm_capacity", u, out)) cfg.gcm_capacity = static_cast<std::size_t>(u);
    if (read_uint(obj, "ltm_window", u, out)) cfg.ltm_window = static_cast<std::size_t>(u);
    read_uint(obj, "rope_max_index", cfg.rope_max_index, out);
    parse_policy(obj, cfg, out);
    cfg.initial_prompt_seed_explicit =
        read_uint(obj, "initial_prompt_seed", cfg.initial_prompt_seed, out);
    bool window_given = false;
    parse_recache(obj, cfg, window_given, out);
    parse_schedule(obj, cfg, out);

    if (!cfg.initial_prompt_seed_explicit) cfg.initial_prompt_seed = cfg.seed;
    if (!window_given) {
        cfg.recache.recache_window =
            static_cast<std::uint64_t>(effective_gcm_capacity(cfg) + cfg.ltm_window);
    }

    // Constraint checks run even when some fields failed to parse; they use
    // the defaults in that case, which keeps the violation list complete.
    if (cfg.dim == 0 || cfg.dim % 2 != 0) out.add("dim must be a positive even integer");
    if (cfg.tokens_per_frame == 0) out.add("tokens_per_frame must be positive");
    if (cfg.horizon == 0) out.add("horizon must be at least 1");
    if (cfg.ltm_window == 0) out.add("ltm_window must be positive");
    if (cfg.ltm_window > cfg.rope_max_index + 1) {
        out.add("window exceeds positional range: ltm_window must be <= rope_max_index + 1");
    }
    if (cfg.recache.alpha_max < 0.0 || cfg.recache.alpha_max > 1.0) {
        out.add("recache.alpha_max must lie in [0, 1]");
    }
    if (cfg.recache.recache_window == 0) out.add("recache.recache_window must be at least 1");

    std::set<std::uint64_t> seen_steps;
    std::uint64_t prev_step = 0;
    bool first = true;
    for (const ScheduleEvent& ev : cfg.schedule) {
        if (!seen_steps.insert(ev.step).second) {
            out.add("duplicate schedule step " + std::to_string(ev.step));
        } else if (!first && ev.step < prev_step) {
            out.add("schedule events must be sorted by step");
        }
        if (ev.step == 0) {
            out.add("schedule step 0 precedes the first generated frame");
        } else if (ev.step >= cfg.horizon) {
            out.add("schedule step " + std::to_string(ev.step) + " is beyond the horizon");
        }
        prev_step = ev.step;
        first = false;
    }

    out.throw_if_any();
    return cfg;
}

std::string policy_name(CachePolicyKind policy) {
    switch (policy) {
        case CachePolicyKind::DualMemory: return "dual_memory";
        case CachePolicyKind::SlidingOnly: return "sliding_only";
        case CachePolicyKind::SingleSink: return "single_sink";
    }
    return "dual_memory";
}

std::string recache_mode_name(RecacheMode mode) {
    switch (mode) {
        case RecacheMode::Proximity: return "proximity";
        case RecacheMode::Uniform: return "uniform";
        case RecacheMode::Flush: return "flush";
    }
    return "proximity";
}

std::string canonical_config_json(const StreamConfig& config) {
    json j;
    j["seed"] = config.seed;
    j["dim"] = config.dim;
    j["tokens_per_frame"] = config.tokens_per_frame;
    j["horizon"] = config.horizon;
    j["gcm_capacity"] = config.gcm_capacity;
    j["ltm_window"] = config.ltm_window;
    j["rope_max_index"] = config.rope_max_index;
    j["policy"] = policy_name(config.policy);
    j["initial_prompt_seed"] = config.initial_prompt_seed;
    j["recache"] = json{{"alpha_max", config.recache.alpha_max},
                        {"recache_window", config.recache.recache_window},
                        {"mode", recache_mode_name(config.recache_mode)}};
    j["schedule"] = json::array();
    for (const ScheduleEvent& ev : config.schedule) {
        json e;
        e["step"] = ev.step;
        if (ev.kind == ScheduleEvent::Kind::PromptSwitch) {
            e["kind"] = "prompt_switch";
            e["prompt_seed"] = ev.prompt_seed;
        } else {
            e["kind"] = "shot_cut";
        }
        j["schedule"].push_back(e);
    }
    return j.dump();  // nlohmann objects keep keys sorted, so this is canonical
}

std::uint64_t fnv1a_64(std::string_view bytes) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    return h;
}

std::string config_hash_hex(const StreamConfig& config) {
    std::uint64_t h = fnv1a_64(canonical_config_json(config));
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = "0123456789abcdef"[h & 0xF];
        h >>= 4;
    }
    return out;
}

}  // namespace streamkv
