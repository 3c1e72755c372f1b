// streamkv CLI: run streams, compare policy variants, dump cache snapshots.
//
// Exit codes: 0 success, 1 configuration/validation error, 2 runtime
// invariant breach, 3 I/O failure. Every command that writes an output also
// writes <out>.manifest.json describing the invocation.

#include <CLI11.hpp>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>
#include <optional>
#include <sstream>
#include <string>

#include "streamkv/errors.hpp"
#include "streamkv/simulator.hpp"
#include "streamkv/snapshot.hpp"
#include "streamkv/version.hpp"

namespace {

using namespace streamkv;

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    if (in.bad()) throw IoError("failed reading '" + path + "'");
    return buf.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << content;
    out.flush();
    if (!out) throw IoError("failed writing '" + path + "'");
}

// Honors SOURCE_DATE_EPOCH so reruns can produce byte-identical manifests.
std::string timestamp_utc() {
    std::time_t t = std::time(nullptr);
    if (const char* epoch = std::getenv("SOURCE_DATE_EPOCH"); epoch && *epoch) {
        t = static_cast<std::time_t>(std::strtoll(epoch, nullptr, 10));
    }
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void write_manifest(const std::string& out_path, const std::string& config_hash,
                    const std::string& started_at, int exit_status) {
    nlohmann::json j;
    j["config_hash"] = config_hash;
    j["tool_version"] = std::string(kVersion);
    j["started_at"] = started_at;
    j["finished_at"] = timestamp_utc();
    j["exit_status"] = exit_status;
    write_file(out_path + ".manifest.json", j.dump() + "\n");
}

std::vector<std::string> split_csv(const std::string& list) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(list);
    while (std::getline(in, item, ',')) {
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

struct Invocation {
    std::string config_path;
    std::string out_path;
    std::string format = "jsonl";
    std::string policies;
    std::uint64_t at = 0;
    std::optional<std::uint64_t> seed_override;
    bool validate_only = false;
};

int run_command(const std::string& name, const Invocation& inv, const StreamConfig& config) {
    if (name == "run") {
        const auto records = run_stream(config);
        emit_metrics(records, inv.out_path,
                     inv.format == "csv" ? MetricsFormat::Csv : MetricsFormat::Jsonl);
    } else if (name == "compare") {
        const auto names = split_csv(inv.policies);
        if (names.empty()) {
            throw ConfigError({"--policies needs at least one variant name"});
        }
        write_file(inv.out_path, report_to_json(compare_policies(config, names)) + "\n");
    } else {  // snapshot
        if (inv.at >= config.horizon) {
            throw ConfigError({"snapshot step " + std::to_string(inv.at) +
                               " is beyond the horizon"});
        }
        Stream stream(config);
        while (stream.next_step() <= inv.at) stream.advance();
        write_file(inv.out_path, serialize_cache(stream.cache(), inv.at) + "\n");
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"streaming dual-memory KV-cache engine"};
    app.fallthrough(true);
    app.set_version_flag("--version", std::string(kVersion));
    app.require_subcommand(0, 1);

    Invocation inv;
    app.add_option("--seed", inv.seed_override, "override the config seed");
    app.add_flag("--validate-only", inv.validate_only, "validate the config and exit");

    CLI::App* run = app.add_subcommand("run", "run one stream and emit per-step metrics");
    run->add_option("--config", inv.config_path, "config JSON path")->required();
    run->add_option("--out", inv.out_path, "metrics output path")->required();
    run->add_option("--format", inv.format, "jsonl or csv")
        ->check(CLI::IsMember({"jsonl", "csv"}));

    CLI::App* compare = app.add_subcommand("compare", "run policy variants on one schedule");
    compare->add_option("--config", inv.config_path, "config JSON path")->required();
    compare->add_option("--policies", inv.policies, "comma-separated variant names")->required();
    compare->add_option("--out", inv.out_path, "report output path")->required();

    CLI::App* snapshot = app.add_subcommand("snapshot", "serialize the cache after a given step");
    snapshot->add_option("--config", inv.config_path, "config JSON path")->required();
    snapshot->add_option("--at", inv.at, "step after which to capture the cache")->required();
    snapshot->add_option("--out", inv.out_path, "snapshot output path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    CLI::App* active = nullptr;
    for (CLI::App* sub : {run, compare, snapshot}) {
        if (sub->parsed()) active = sub;
    }
    if (!active) {
        std::cerr << app.help();
        return 1;
    }

    const std::string started_at = timestamp_utc();
    std::string config_hash(16, '0');
    int status = 0;
    try {
        const std::string raw = read_file(inv.config_path);
        config_hash = [&raw] {  // fall back to hashing raw bytes if parsing fails below
            std::uint64_t h = fnv1a_64(raw);
            std::string hex(16, '0');
            for (int i = 15; i >= 0; --i, h >>= 4) hex[static_cast<std::size_t>(i)] = "0123456789abcdef"[h & 0xF];
            return hex;
        }();
        StreamConfig config = parse_config(raw);
        if (inv.seed_override) {
            config.seed = *inv.seed_override;
            // Follow the same resolution the file would get with this seed.
            if (!config.initial_prompt_seed_explicit) {
                config.initial_prompt_seed = *inv.seed_override;
            }
        }
        config_hash = config_hash_hex(config);
        if (inv.validate_only) {
            std::cout << "config ok (hash " << config_hash << ")\n";
            return 0;
        }
        status = run_command(active->get_name(), inv, config);
    } catch (const ConfigError& e) {
        for (const std::string& v : e.violations()) std::cerr << "config error: " << v << "\n";
        status = 1;
    } catch (const IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        status = 3;
    } catch (const std::exception& e) {
        // InvariantError and anything else unexpected: the run broke mid-flight.
        std::cerr << "runtime error: " << e.what() << "\n";
        status = 2;
    }

    if (!inv.out_path.empty()) {
        try {
            write_manifest(inv.out_path, config_hash, started_at, status);
        } catch (const IoError& e) {
            std::cerr << "io error: " << e.what() << "\n";
            if (status == 0) status = 3;
        }
    }
    return status;
}
