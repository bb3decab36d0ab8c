#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <fstream>

#include "rtemu/config.hpp"

using namespace rtemu;
using namespace std::chrono_literals;

TEST_CASE("a minimal config expands its preset and fills defaults") {
    const auto c = parse_run_config({{"topology", "local-host"}});
    CHECK(c.topology_preset == "local-host");
    CHECK(c.topology == local_host_topology());
    CHECK(c.policy == "corrected");
    CHECK(c.capture_mode == "immediate");
    CHECK(c.max_poll == 10ms);
    CHECK(c.t_batch == 10ms);
    CHECK(c.buf_cap == 64 * 1024);
    CHECK(c.handoff_capacity == 256);
    CHECK_FALSE(c.processing_delay.has_value());
    CHECK(c.target == "10.1.1.1");  // first iface's ingress destination
    CHECK(c.scheduler_policy().kind == PolicyKind::corrected);
    CHECK_FALSE(c.capture().is_batched());
}

TEST_CASE("policy and capture settings map to the right objects") {
    const auto c = parse_run_config({{"topology", "local-host"},
                                     {"policy", "fixed-timeout"},
                                     {"capture_mode", "batched"},
                                     {"max_poll_ns", 5'000'000},
                                     {"t_batch_ns", 7'000'000},
                                     {"buf_cap_bytes", 2048},
                                     {"handoff_capacity", 32}});
    CHECK(c.scheduler_policy().kind == PolicyKind::fixed_timeout);
    CHECK(c.scheduler_policy().max_poll == 5ms);
    REQUIRE(c.capture().is_batched());
    CHECK(c.capture().batched_params().t_batch == 7ms);
    CHECK(c.capture().batched_params().buf_cap == 2048);
    CHECK(c.handoff_capacity == 32);
}

TEST_CASE("processing delay overrides every node") {
    const auto c = parse_run_config({{"topology", "emulated-link"},
                                     {"processing_delay_ns", 250'000}});
    REQUIRE(c.processing_delay.has_value());
    CHECK(*c.processing_delay == Duration{250'000});
    for (const auto& n : c.topology.nodes) CHECK(n.processing_delay == Duration{250'000});
}

TEST_CASE("an inline topology object is accepted") {
    nlohmann::json j;
    j["topology"] = to_json(emulated_link_topology());
    j["target"] = "10.1.2.100";
    const auto c = parse_run_config(j);
    CHECK(c.topology_preset.empty());
    CHECK(c.topology == emulated_link_topology());
    CHECK(c.target == "10.1.2.100");
}

TEST_CASE("violations are collected, not reported one at a time") {
    try {
        parse_run_config({{"topology", "no-such-preset"},
                          {"policy", "psychic"},
                          {"capture_mode", "sometimes"},
                          {"max_poll_ns", -4},
                          {"buf_cap_bytes", 0},
                          {"surprise", 1}});
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        const auto& v = e.violations();
        CHECK(v.size() == 6);
        auto has = [&v](const std::string& needle) {
            for (const auto& s : v)
                if (s.find(needle) != std::string::npos) return true;
            return false;
        };
        CHECK(has("unknown key 'surprise'"));
        CHECK(has("unknown topology preset 'no-such-preset'"));
        CHECK(has("unknown policy 'psychic' (corrected, fixed-timeout)"));
        CHECK(has("unknown capture_mode 'sometimes' (immediate, batched)"));
        CHECK(has("'max_poll_ns' must be positive"));
        CHECK(has("'buf_cap_bytes' must be positive"));
    }
}

TEST_CASE("the target must be served by some external interface") {
    CHECK_THROWS_AS(parse_run_config({{"topology", "local-host"}, {"target", "8.8.8.8"}}),
                    ConfigError);
    const auto c =
        parse_run_config({{"topology", "emulated-link"}, {"target", "10.1.1.100"}});
    CHECK(c.target == "10.1.1.100");  // the far iface serves this one
}

TEST_CASE("missing topology and non-object configs are rejected") {
    CHECK_THROWS_AS(parse_run_config(nlohmann::json::object()), ConfigError);
    CHECK_THROWS_AS(parse_run_config(nlohmann::json::array()), ConfigError);
    CHECK_THROWS_AS(parse_run_config({{"topology", 17}}), ConfigError);
}

TEST_CASE("render and parse are inverse operations") {
    for (const char* preset : {"local-host", "emulated-link"}) {
        auto j = nlohmann::json{{"topology", preset},
                                {"policy", "fixed-timeout"},
                                {"capture_mode", "batched"},
                                {"t_batch_ns", 12'345'678}};
        const auto c = parse_run_config(j);
        const auto back = parse_run_config(render_run_config(c));
        CHECK(back == c);
    }
    // Inline topology survives the trip too.
    nlohmann::json j;
    j["topology"] = to_json(local_host_topology());
    j["processing_delay_ns"] = 1'000'000;
    const auto c = parse_run_config(j);
    const auto back = parse_run_config(render_run_config(c));
    CHECK(back == c);
}

TEST_CASE("config files load from disk with helpful failure modes") {
    const std::string path = "test_config_tmp.json";
    {
        std::ofstream f(path);
        f << R"({"topology": "local-host", "policy": "corrected"})";
    }
    const auto c = load_run_config(path);
    CHECK(c.topology_preset == "local-host");

    {
        std::ofstream f(path);
        f << "{ this is not json";
    }
    try {
        load_run_config(path);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK_THAT(e.what(), Catch::Matchers::ContainsSubstring("parse error"));
    }
    std::remove(path.c_str());

    CHECK_THROWS_AS(load_run_config("definitely-not-here.json"), std::runtime_error);
    CHECK_THROWS_WITH(load_run_config("definitely-not-here.json"),
                      Catch::Matchers::ContainsSubstring("cannot open config file"));
}
