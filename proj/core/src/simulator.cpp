#include "streamkv/simulator.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <future>
#include <nlohmann/json.hpp>
#include <sstream>
#include <stdexcept>

#include "streamkv/errors.hpp"
#include "streamkv/recache.hpp"

namespace streamkv {

namespace {

using nlohmann::json;

std::optional<std::uint64_t> fault_step_from_env() {
    const char* v = std::getenv("STREAMKV_INJECT_FAULT");
    if (!v || *v == '\0') return std::nullopt;
    return std::strtoull(v, nullptr, 10);
}

double min_pairwise_diversity(const std::vector<CacheEntry>& anchors) {
    if (anchors.size() < 2) return 1.0;
    double max_sim = -2.0;
    for (std::size_t i = 0; i < anchors.size(); ++i) {
        for (std::size_t j = i + 1; j < anchors.size(); ++j) {
            max_sim = std::max(max_sim, cosine_similarity(anchors[i].latent, anchors[j].latent));
        }
    }
    return 1.0 - max_sim;
}

}  // namespace

Stream::Stream(const StreamConfig& config)
    : config_(config),
      block_(config.dim, config.tokens_per_frame, config.seed),
      table_(config.dim, 10000.0, config.rope_max_index),
      condition_(encode_prompt(config.initial_prompt_seed, block_)),
      fault_step_(fault_step_from_env()) {
    if (config_.horizon == 0) throw ConfigError({"horizon must be at least 1"});
    if (config_.ltm_window == 0) throw ConfigError({"ltm_window must be positive"});
    if (config_.ltm_window > config_.rope_max_index + 1) {
        throw ConfigError({"window exceeds positional range"});
    }
    cache_.ltm_window = config_.ltm_window;
    cache_.gcm_capacity = effective_gcm_capacity(config_);
}

MetricsRecord Stream::advance() {
    if (done()) throw std::logic_error("Stream::advance: stream already finished");
    const std::uint64_t t = next_step_;
    if (fault_step_ && *fault_step_ == t) {
        throw InvariantError("fault injected via STREAMKV_INJECT_FAULT at step " +
                             std::to_string(t));
    }

    MetricsRecord record;
    record.step = t;

    if (next_event_ < config_.schedule.size() && config_.schedule[next_event_].step == t) {
        const ScheduleEvent& ev = config_.schedule[next_event_];
        ++next_event_;
        if (ev.kind == ScheduleEvent::Kind::ShotCut) {
            ltm_reset(cache_, cache_.shot_id + 1);
            record.event_flag = "shot_cut";
        } else {
            const ConditionVector next_prompt = encode_prompt(ev.prompt_seed, block_);
            if (config_.recache_mode == RecacheMode::Flush) {
                ltm_reset(cache_, cache_.shot_id + 1);
            } else {
                const std::vector<CacheEntry> fresh =
                    recompute_new_entries(cache_, next_prompt, block_);
                recache(cache_, fresh, config_.recache, t - 1, config_.recache_mode);
            }
            condition_ = next_prompt;
            record.event_flag = "prompt_switch";
        }
    }

    // The pinned-sink baseline seeds its single anchor with frame 0 and then
    // never lets the replacement rule touch it.
    const bool offer_to_gcm =
        config_.policy == CachePolicyKind::SingleSink ? cache_.gcm.empty() : true;

    // A flush can leave a window-only stream with nothing cached at all;
    // generation then restarts from the prompt exactly like frame 0 does.
    InjectionAudit audit;
    const StepResult result =
        cache_.total_frames() == 0
            ? bootstrap_step(condition_, cache_, block_, table_, &audit, offer_to_gcm, t)
            : step(last_frame_, condition_, cache_, block_, table_, &audit, offer_to_gcm);

    const Vector& latent = cache_.ltm.back().latent;
    record.gcm_attention_mass = std::min(result.gcm_attention_mass, 1.0);
    record.max_injected_index = audit.max_injected;
    record.cache_frames = cache_.total_frames();
    record.latent_drift = t == 0 ? 0.0 : l2_distance(latent, prev_latent_);
    record.gcm_min_pairwise_diversity = min_pairwise_diversity(cache_.gcm);

    const std::uint64_t frame_budget =
        static_cast<std::uint64_t>(effective_gcm_capacity(config_) + config_.ltm_window);
    if (record.cache_frames > frame_budget) {
        throw InvariantError("cache grew past its frame budget at step " + std::to_string(t));
    }
    if (result.gcm_attention_mass < 0.0 || result.gcm_attention_mass > 1.0 + 1e-9) {
        throw InvariantError("anchor attention mass escaped [0,1] at step " + std::to_string(t));
    }
    if (audit.max_injected > static_cast<std::int64_t>(config_.rope_max_index)) {
        throw InvariantError("positional injection escaped its bound at step " + std::to_string(t));
    }
    if (audit.max_global > 0) {
        throw InvariantError("a global injection left index 0 at step " + std::to_string(t));
    }
    if (!all_finite(latent)) {
        throw InvariantError("latent is no longer finite at step " + std::to_string(t));
    }

    prev_latent_ = latent;
    last_frame_ = result.frame;
    last_audit_ = audit;
    ++next_step_;
    return record;
}

std::vector<MetricsRecord> run_stream(const StreamConfig& config) {
    Stream stream(config);
    std::vector<MetricsRecord> records;
    records.reserve(config.horizon);
    while (!stream.done()) records.push_back(stream.advance());
    return records;
}

namespace {

StreamConfig variant_config(const StreamConfig& base, const std::string& name) {
    StreamConfig cfg = base;
    if (name == "dual_memory") {
        cfg.policy = CachePolicyKind::DualMemory;
    } else if (name == "sliding_only") {
        cfg.policy = CachePolicyKind::SlidingOnly;
    } else if (name == "single_sink") {
        cfg.policy = CachePolicyKind::SingleSink;
    } else if (name == "proximity") {
        cfg.recache_mode = RecacheMode::Proximity;
    } else if (name == "uniform") {
        cfg.recache_mode = RecacheMode::Uniform;
    } else if (name == "flush") {
        cfg.recache_mode = RecacheMode::Flush;
    } else {
        throw ConfigError({"unknown comparison variant '" + name +
                           "' (expected a policy or a recache mode)"});
    }
    return cfg;
}

VariantReport summarize(std::string name, const std::vector<MetricsRecord>& records) {
    VariantReport report;
    report.name = std::move(name);
    double mass_sum = 0.0;
    double drift_sum = 0.0;
    double switch_sum = 0.0;
    for (const MetricsRecord& r : records) {
        mass_sum += r.gcm_attention_mass;
        drift_sum += r.latent_drift;
        report.max_injected_index = std::max(report.max_injected_index, r.max_injected_index);
        if (r.event_flag && *r.event_flag == "prompt_switch") {
            ++report.switch_steps;
            switch_sum += r.latent_drift;
            report.switch_drift_max = std::max(report.switch_drift_max, r.latent_drift);
        }
    }
    if (!records.empty()) {
        mass_sum /= static_cast<double>(records.size());
        drift_sum /= static_cast<double>(records.size());
    }
    report.mean_gcm_attention_mass = mass_sum;
    report.mean_latent_drift = drift_sum;
    if (report.switch_steps > 0) {
        report.switch_drift_mean = switch_sum / static_cast<double>(report.switch_steps);
    }
    return report;
}

}  // namespace

ComparisonReport compare_policies(const StreamConfig& base_config,
                                  const std::vector<std::string>& variant_names) {
    // Validate every name up front so a bad list fails before any work runs.
    std::vector<StreamConfig> configs;
    configs.reserve(variant_names.size());
    for (const std::string& name : variant_names) {
        configs.push_back(variant_config(base_config, name));
    }
    std::vector<std::future<std::vector<MetricsRecord>>> runs;
    runs.reserve(configs.size());
    for (const StreamConfig& cfg : configs) {
        runs.push_back(std::async(std::launch::async, [cfg] { return run_stream(cfg); }));
    }
    ComparisonReport report;
    report.reserve(configs.size());
    for (std::size_t i = 0; i < runs.size(); ++i) {
        report.push_back(summarize(variant_names[i], runs[i].get()));
    }
    return report;
}

std::string report_to_json(const ComparisonReport& report) {
    json variants = json::array();
    for (const VariantReport& v : report) {
        variants.push_back(json{{"name", v.name},
                                {"mean_gcm_attention_mass", v.mean_gcm_attention_mass},
                                {"max_injected_index", v.max_injected_index},
                                {"mean_latent_drift", v.mean_latent_drift},
                                {"switch_drift_mean", v.switch_drift_mean},
                                {"switch_drift_max", v.switch_drift_max},
                                {"switch_steps", v.switch_steps}});
    }
    return json{{"variants", variants}}.dump();
}

namespace {

json record_to_json(const MetricsRecord& r) {
    json j;
    j["step"] = r.step;
    j["gcm_attention_mass"] = r.gcm_attention_mass;
    j["max_injected_index"] = r.max_injected_index;
    j["cache_frames"] = r.cache_frames;
    j["latent_drift"] = r.latent_drift;
    j["gcm_min_pairwise_diversity"] = r.gcm_min_pairwise_diversity;
    if (r.event_flag) {
        j["event_flag"] = *r.event_flag;
    } else {
        j["event_flag"] = nullptr;
    }
    return j;
}

std::string csv_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

}  // namespace

void emit_metrics(const std::vector<MetricsRecord>& records, const std::string& path,
                  MetricsFormat format) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    if (format == MetricsFormat::Jsonl) {
        for (const MetricsRecord& r : records) out << record_to_json(r).dump() << '\n';
    } else {
        out << "step,gcm_attention_mass,max_injected_index,cache_frames,latent_drift,"
               "gcm_min_pairwise_diversity,event_flag\n";
        for (const MetricsRecord& r : records) {
            out << r.step << ',' << csv_double(r.gcm_attention_mass) << ','
                << r.max_injected_index << ',' << r.cache_frames << ','
                << csv_double(r.latent_drift) << ',' << csv_double(r.gcm_min_pairwise_diversity)
                << ',' << (r.event_flag ? *r.event_flag : "") << '\n';
        }
    }
    out.flush();
    if (!out) throw IoError("failed writing metrics to '" + path + "'");
}

std::vector<MetricsRecord> parse_metrics_jsonl(const std::string& text) {
    std::vector<MetricsRecord> records;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const json j = json::parse(line);
        MetricsRecord r;
        r.step = j.at("step").get<std::uint64_t>();
        r.gcm_attention_mass = j.at("gcm_attention_mass").get<double>();
        r.max_injected_index = j.at("max_injected_index").get<std::int64_t>();
        r.cache_frames = j.at("cache_frames").get<std::uint64_t>();
        r.latent_drift = j.at("latent_drift").get<double>();
        r.gcm_min_pairwise_diversity = j.at("gcm_min_pairwise_diversity").get<double>();
        if (!j.at("event_flag").is_null()) r.event_flag = j.at("event_flag").get<std::string>();
        records.push_back(std::move(r));
    }
    return records;
}

}  // namespace streamkv
