#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rtemu/capture.hpp"
#include "rtemu/policy.hpp"
#include "rtemu/time.hpp"
#include "rtemu/topology.hpp"

namespace rtemu {

inline constexpr std::int64_t kDefaultMaxPollNs = 10'000'000;
inline constexpr std::int64_t kDefaultTBatchNs = 10'000'000;
inline constexpr std::size_t kDefaultBufCapBytes = 64 * 1024;
inline constexpr std::size_t kDefaultHandoffCapacity = 256;

/// A resolved run description: topology (preset expanded), scheduler policy
/// and capture settings, and the probe target. Plain data with value
/// semantics; rendering and re-parsing reproduces it exactly.
struct RunConfig {
    std::string topology_preset;  // empty when the topology was given inline
    Topology topology;
    std::optional<Duration> processing_delay;  // per-node override when set
    std::string policy{"corrected"};
    Duration max_poll{Duration(kDefaultMaxPollNs)};
    std::string capture_mode{"immediate"};
    Duration t_batch{Duration(kDefaultTBatchNs)};
    std::size_t buf_cap{kDefaultBufCapBytes};
    std::size_t handoff_capacity{kDefaultHandoffCapacity};
    std::string target;

    bool operator==(const RunConfig&) const = default;

    SchedulerPolicy scheduler_policy() const {
        return policy == "fixed-timeout" ? SchedulerPolicy::fixed_timeout(max_poll)
                                         : SchedulerPolicy::corrected(max_poll);
    }

    CaptureMode capture() const {
        return capture_mode == "batched" ? CaptureMode::batched(t_batch, buf_cap)
                                         : CaptureMode::immediate();
    }
};

/// Parses a run configuration, collecting every violation (unknown keys,
/// wrong types, out-of-range values, topology problems) before throwing
/// ConfigError.
inline RunConfig parse_run_config(const nlohmann::json& j) {
    std::vector<std::string> out;
    RunConfig c;
    if (!j.is_object()) throw ConfigError({"config: expected a JSON object"});
    detail::check_keys(j,
                       {"topology", "policy", "capture_mode", "max_poll_ns", "t_batch_ns",
                        "buf_cap_bytes", "handoff_capacity", "processing_delay_ns", "target"},
                       "config", out);

    if (!j.contains("topology")) {
        out.push_back("config: missing key 'topology'");
    } else if (j["topology"].is_string()) {
        c.topology_preset = j["topology"].get<std::string>();
        try {
            c.topology = preset_topology(c.topology_preset);
        } catch (const std::invalid_argument& e) {
            out.push_back(std::string("config: ") + e.what());
        }
    } else if (j["topology"].is_object()) {
        try {
            c.topology = topology_from_json(j["topology"]);
        } catch (const ConfigError& e) {
            for (const auto& v : e.violations()) out.push_back("config: " + v);
        }
    } else {
        out.push_back("config: key 'topology' must be a preset name or an object");
    }

    auto get_choice = [&](const char* key, std::string& dst,
                          std::initializer_list<const char*> choices) {
        if (!j.contains(key)) return;
        if (!j[key].is_string()) {
            out.push_back(std::string("config: key '") + key + "' must be a string");
            return;
        }
        dst = j[key].get<std::string>();
        for (const char* ch : choices)
            if (dst == ch) return;
        std::string msg = std::string("config: unknown ") + key + " '" + dst + "' (";
        bool first = true;
        for (const char* ch : choices) {
            if (!first) msg += ", ";
            msg += ch;
            first = false;
        }
        out.push_back(msg + ")");
    };
    get_choice("policy", c.policy, {"corrected", "fixed-timeout"});
    get_choice("capture_mode", c.capture_mode, {"immediate", "batched"});

    auto get_positive_ns = [&](const char* key, Duration& dst) {
        if (!j.contains(key)) return;
        if (!j[key].is_number_integer()) {
            out.push_back(std::string("config: key '") + key + "' must be an integer");
            return;
        }
        const auto v = j[key].get<std::int64_t>();
        if (v <= 0)
            out.push_back(std::string("config: key '") + key + "' must be positive");
        else
            dst = Duration(v);
    };
    get_positive_ns("max_poll_ns", c.max_poll);
    get_positive_ns("t_batch_ns", c.t_batch);

    auto get_positive_size = [&](const char* key, std::size_t& dst) {
        if (!j.contains(key)) return;
        if (!j[key].is_number_integer()) {
            out.push_back(std::string("config: key '") + key + "' must be an integer");
            return;
        }
        const auto v = j[key].get<std::int64_t>();
        if (v <= 0)
            out.push_back(std::string("config: key '") + key + "' must be positive");
        else
            dst = static_cast<std::size_t>(v);
    };
    get_positive_size("buf_cap_bytes", c.buf_cap);
    get_positive_size("handoff_capacity", c.handoff_capacity);

    if (j.contains("processing_delay_ns")) {
        if (!j["processing_delay_ns"].is_number_integer()) {
            out.push_back("config: key 'processing_delay_ns' must be an integer");
        } else {
            const auto v = j["processing_delay_ns"].get<std::int64_t>();
            if (v < 0) {
                out.push_back("config: key 'processing_delay_ns' must be non-negative");
            } else {
                c.processing_delay = Duration(v);
                for (auto& n : c.topology.nodes) n.processing_delay = *c.processing_delay;
            }
        }
    }

    if (j.contains("target")) {
        if (!j["target"].is_string())
            out.push_back("config: key 'target' must be a string");
        else
            c.target = j["target"].get<std::string>();
    }
    if (c.target.empty() && !c.topology.ifaces.empty())
        c.target = c.topology.ifaces.front().ingress_dest;
    if (!c.target.empty() && !c.topology.ifaces.empty()) {
        bool matched = false;
        for (const auto& i : c.topology.ifaces) matched = matched || i.ingress_dest == c.target;
        if (!matched)
            out.push_back("config: no external interface sends probes toward target '" +
                          c.target + "'");
    }

    if (!out.empty()) throw ConfigError(std::move(out));
    return c;
}

inline nlohmann::json render_run_config(const RunConfig& c) {
    nlohmann::json j;
    if (!c.topology_preset.empty())
        j["topology"] = c.topology_preset;
    else
        j["topology"] = to_json(c.topology);
    j["policy"] = c.policy;
    j["capture_mode"] = c.capture_mode;
    j["max_poll_ns"] = c.max_poll.count();
    j["t_batch_ns"] = c.t_batch.count();
    j["buf_cap_bytes"] = c.buf_cap;
    j["handoff_capacity"] = c.handoff_capacity;
    if (c.processing_delay) j["processing_delay_ns"] = c.processing_delay->count();
    j["target"] = c.target;
    return j;
}

/// Loads and parses a config file. A missing or unreadable file raises
/// std::runtime_error; malformed JSON raises ConfigError with the parser's
/// line/column diagnostics; semantic problems raise ConfigError listing
/// every violation.
inline RunConfig load_run_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open config file '" + path + "'");
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(f);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError({std::string("config: ") + e.what()});
    }
    return parse_run_config(j);
}

}  // namespace rtemu
