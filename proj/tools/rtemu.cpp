#include <csignal>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rtemu/rtemu.hpp"

namespace {

rtemu::RealTimeScheduler* g_scheduler = nullptr;

void on_signal(int) {
    if (g_scheduler) g_scheduler->request_stop();
}

rtemu::Duration ms_to_duration(double ms) {
    return rtemu::Duration(static_cast<std::int64_t>(std::llround(ms * 1e6)));
}

std::map<std::string, std::string> parse_name_addr(const std::vector<std::string>& entries,
                                                   const char* what) {
    std::map<std::string, std::string> out;
    for (const auto& e : entries) {
        const auto pos = e.find('=');
        if (pos == std::string::npos || pos == 0 || pos + 1 == e.size())
            throw rtemu::ConfigError({std::string(what) + ": expected NAME=HOST:PORT, got '" + e +
                                      "'"});
        out[e.substr(0, pos)] = e.substr(pos + 1);
    }
    return out;
}

int cmd_emulate(const rtemu::RunConfig& cfg, const std::vector<std::string>& source_binds,
                const std::vector<std::string>& sink_dests) {
    using namespace rtemu;
    const auto src_addrs = parse_name_addr(source_binds, "--source");
    const auto sink_addrs = parse_name_addr(sink_dests, "--sink");
    for (const auto& [name, addr] : src_addrs)
        if (!cfg.topology.find_iface_by_name(name))
            throw ConfigError({"--source: topology has no interface named '" + name + "'"});
    for (const auto& [name, addr] : sink_addrs)
        if (!cfg.topology.find_sink_by_name(name))
            throw ConfigError({"--sink: topology has no sink named '" + name + "'"});
    std::vector<std::string> missing;
    for (const auto& sink : cfg.topology.sinks)
        if (!sink_addrs.count(sink.name))
            missing.push_back("--sink: no destination given for sink '" + sink.name + "'");
    if (!missing.empty()) throw ConfigError(std::move(missing));

    SystemClock clock;
    Engine engine(cfg.topology, clock, cfg.scheduler_policy());
    std::vector<std::shared_ptr<SocketSource>> sources;
    for (const auto& iface : cfg.topology.ifaces) {
        UdpAddr bind{"127.0.0.1", 0};
        if (const auto it = src_addrs.find(iface.name); it != src_addrs.end())
            bind = parse_udp_addr(it->second);
        auto src = std::make_shared<SocketSource>(cfg.capture(), cfg.handoff_capacity, clock, bind);
        engine.bind_source(iface.id, src);
        sources.push_back(src);
    }
    for (const auto& sink : cfg.topology.sinks)
        engine.bind_sink(sink.id,
                         std::make_shared<SocketSink>(parse_udp_addr(sink_addrs.at(sink.name))));

    std::cout << "topology " << cfg.topology.name << ", policy " << cfg.scheduler_policy().name()
              << ", capture " << cfg.capture().name() << "\n";
    for (std::size_t i = 0; i < cfg.topology.ifaces.size(); ++i)
        std::cout << "listening on " << sources[i]->local_addr().str() << " for iface '"
                  << cfg.topology.ifaces[i].name << "'\n";
    std::cout << "press Ctrl-C to stop\n" << std::flush;

    for (auto& s : sources) s->start();
    g_scheduler = &engine.scheduler();
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    rtemu::RealtimeScope rt;
    engine.run_until_wall(WallTime{std::numeric_limits<std::int64_t>::max()});
    g_scheduler = nullptr;
    for (auto& s : sources) s->stop();

    const auto& counters = engine.model().counters();
    std::cout << "injected " << engine.injected() << ", emitted " << engine.emitted()
              << ", echoed " << counters.echoed << ", routing_dropped "
              << counters.routing_dropped << ", malformed_dropped "
              << counters.malformed_dropped << "\n";
    const auto lat = lateness_summary(engine.scheduler().lateness_log());
    if (!lat.empty)
        std::cout << "dispatch lateness: max " << format_ns(lat.max.count()) << ", p99 "
                  << format_ns(static_cast<std::int64_t>(lat.p99_ns)) << "\n";
    return 0;
}

void print_loss_report(std::ostream& os, const rtemu::LossReport& rep) {
    os << "sent " << rep.sent << '\n'
       << "echoed " << rep.echoed << '\n'
       << "lost " << rep.lost << '\n'
       << "loss_rate "
       << (rep.capture_loss.empty ? std::string("n/a") : rtemu::fmt_fixed3(rep.capture_loss.rate))
       << '\n'
       << "capture_offered " << rep.capture.offered << '\n'
       << "capture_delivered " << rep.capture.delivered << '\n'
       << "capture_dropped " << rep.capture.dropped << '\n'
       << "capture_buffered " << rep.capture.buffered << '\n'
       << "batches_flushed " << rep.capture.batches_flushed << '\n'
       << "conserved " << (rep.conserved ? "yes" : "no") << '\n';
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"soft real-time network emulation engine"};
    app.require_subcommand(1);

    std::string config_path;
    std::string policy_override;
    std::string capture_override;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "run configuration (JSON)")->required();
        cmd->add_option("--policy", policy_override, "override scheduler policy")
            ->check(CLI::IsMember({"corrected", "fixed-timeout"}));
        cmd->add_option("--capture-mode", capture_override, "override capture mode")
            ->check(CLI::IsMember({"immediate", "batched"}));
    };

    auto* emulate = app.add_subcommand("emulate", "run the emulator until interrupted");
    std::vector<std::string> source_binds, sink_dests;
    add_common(emulate);
    emulate->add_option("--source", source_binds,
                        "NAME=HOST:PORT bind address for an interface (repeatable)");
    emulate->add_option("--sink", sink_dests,
                        "NAME=HOST:PORT emission destination for a sink (repeatable)");

    auto* bench = app.add_subcommand("bench", "round-trip and loss experiments");
    bench->require_subcommand(1);

    auto* ping = bench->add_subcommand("ping", "probe round-trip times through the emulator");
    std::size_t ping_count = 100;
    double ping_interval_ms = 50.0;
    double ping_jitter_ms = 0.0;
    double ping_timeout_ms = 1000.0;
    std::size_t ping_size = 100;
    std::uint64_t seed = 1;
    bool use_virtual = false;
    std::string out_path;
    add_common(ping);
    ping->add_option("--count", ping_count, "number of probes")->check(CLI::PositiveNumber);
    ping->add_option("--interval", ping_interval_ms, "base send interval in ms")
        ->check(CLI::PositiveNumber);
    ping->add_option("--jitter", ping_jitter_ms, "extra uniform send jitter in ms")
        ->check(CLI::NonNegativeNumber);
    ping->add_option("--timeout", ping_timeout_ms, "drain window after the last send in ms")
        ->check(CLI::PositiveNumber);
    ping->add_option("--size", ping_size, "probe size in bytes");
    ping->add_option("--seed", seed, "send schedule seed");
    ping->add_flag("--virtual", use_virtual, "run on the deterministic virtual clock");
    ping->add_option("--out", out_path, "write sample CSV here instead of stdout");

    auto* loss = bench->add_subcommand("loss", "capture loss under load");
    double loss_rate = 100.0;
    double loss_duration_s = 1.0;
    std::size_t loss_size = 100;
    double loss_drain_ms = 500.0;
    std::size_t handoff_override = 0;
    std::vector<std::string> stall_specs;
    add_common(loss);
    loss->add_option("--rate", loss_rate, "probe rate in packets per second")
        ->check(CLI::PositiveNumber);
    loss->add_option("--size", loss_size, "probe size in bytes");
    loss->add_option("--duration", loss_duration_s, "send duration in seconds")
        ->check(CLI::PositiveNumber);
    loss->add_option("--drain", loss_drain_ms, "drain window after the last send in ms")
        ->check(CLI::PositiveNumber);
    loss->add_option("--handoff", handoff_override, "handoff queue capacity override");
    loss->add_option("--stall", stall_specs,
                     "AT_MS:DUR_MS consumer stall while capture keeps running (repeatable)");
    loss->add_flag("--virtual", use_virtual, "run on the deterministic virtual clock");

    auto* report = app.add_subcommand("report", "summarize a probe sample CSV");
    std::string input_path;
    std::string format = "text";
    report->add_option("--input", input_path, "sample CSV produced by bench ping")->required();
    report->add_option("--format", format, "output format")
        ->check(CLI::IsMember({"csv", "text"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (report->parsed()) {
            std::ifstream in(input_path);
            if (!in) {
                std::cerr << "rtemu: cannot open '" << input_path << "'\n";
                return 1;
            }
            const auto samples = rtemu::read_rtt_csv(in);
            const auto st = rtemu::boxplot_stats(rtemu::rtt_values(samples));
            if (format == "csv")
                rtemu::write_summary_csv(std::cout, st);
            else
                rtemu::write_summary_text(std::cout, st);
            return 0;
        }

        rtemu::RunConfig cfg = rtemu::load_run_config(config_path);
        if (!policy_override.empty()) cfg.policy = policy_override;
        if (!capture_override.empty()) cfg.capture_mode = capture_override;

        if (emulate->parsed()) return cmd_emulate(cfg, source_binds, sink_dests);

        if (ping->parsed()) {
            rtemu::PingOptions opt;
            opt.count = ping_count;
            opt.interval = ms_to_duration(ping_interval_ms);
            opt.send_jitter = ms_to_duration(ping_jitter_ms);
            opt.timeout = ms_to_duration(ping_timeout_ms);
            opt.probe_size = ping_size;
            opt.handoff_capacity = cfg.handoff_capacity;
            opt.target = cfg.target;
            opt.seed = seed;
            const rtemu::PingReport rep =
                use_virtual
                    ? rtemu::run_ping_virtual(cfg.topology, cfg.scheduler_policy(), cfg.capture(),
                                              opt)
                    : rtemu::run_ping_real(cfg.topology, cfg.scheduler_policy(), cfg.capture(),
                                           opt);
            if (out_path.empty()) {
                rtemu::write_rtt_csv(std::cout, rep.samples);
            } else {
                std::ofstream out(out_path);
                if (!out) {
                    std::cerr << "rtemu: cannot write '" << out_path << "'\n";
                    return 1;
                }
                rtemu::write_rtt_csv(out, rep.samples);
            }
            std::cerr << "sent " << rep.sent << ", received " << rep.received << ", lost "
                      << rep.lost << "\n";
            if (!rep.samples.empty())
                rtemu::write_summary_text(std::cerr, rtemu::ping_rtt_stats(rep));
            return rep.received > 0 ? 0 : 1;
        }

        if (loss->parsed()) {
            rtemu::LossOptions opt;
            opt.rate_pps = loss_rate;
            opt.count = static_cast<std::size_t>(std::llround(loss_rate * loss_duration_s));
            if (opt.count == 0) opt.count = 1;
            opt.probe_size = loss_size;
            opt.handoff_capacity =
                handoff_override > 0 ? handoff_override : cfg.handoff_capacity;
            opt.target = cfg.target;
            opt.drain = ms_to_duration(loss_drain_ms);
            for (const auto& s : stall_specs) {
                const auto pos = s.find(':');
                if (pos == std::string::npos)
                    throw rtemu::ConfigError({"--stall: expected AT_MS:DUR_MS, got '" + s + "'"});
                rtemu::StallSpec spec;
                spec.at = ms_to_duration(std::stod(s.substr(0, pos)));
                spec.duration = ms_to_duration(std::stod(s.substr(pos + 1)));
                opt.stalls.push_back(spec);
            }
            const rtemu::LossReport rep =
                use_virtual
                    ? rtemu::run_loss_virtual(cfg.topology, cfg.scheduler_policy(), cfg.capture(),
                                              opt)
                    : rtemu::run_loss_real(cfg.topology, cfg.scheduler_policy(), cfg.capture(),
                                           opt);
            print_loss_report(std::cout, rep);
            return rep.conserved ? 0 : 1;
        }
    } catch (const rtemu::ConfigError& e) {
        std::cerr << "rtemu: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "rtemu: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
