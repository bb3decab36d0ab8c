#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "rtemu/capture.hpp"
#include "rtemu/engine.hpp"
#include "rtemu/packet.hpp"
#include "rtemu/policy.hpp"
#include "rtemu/report.hpp"
#include "rtemu/socket_io.hpp"
#include "rtemu/test_clock.hpp"
#include "rtemu/time.hpp"
#include "rtemu/topology.hpp"

namespace rtemu {

// ---------------------------------------------------------------------------
// Experiment wiring helpers

/// Follows forwarding tables from `node_id` toward `dest` and returns the
/// sink the packet would leave through, or nullopt if the path terminates
/// inside the simulation (delivered, echoed, or unroutable).
inline std::optional<std::uint32_t> trace_to_sink(const Topology& t, std::uint32_t node_id,
                                                  const std::string& dest) {
    std::set<std::uint32_t> seen;
    const Node* n = t.find_node(node_id);
    while (n && seen.insert(n->id).second) {
        if (n->address == dest) return std::nullopt;
        const auto it = n->forwarding.find(dest);
        if (it == n->forwarding.end()) return std::nullopt;
        const Channel* ch = t.find_channel(it->second);
        if (!ch) return std::nullopt;
        if (const auto* se = std::get_if<SinkEndpoint>(&ch->dest)) return se->sink_id;
        n = t.find_node(std::get<NodeEndpoint>(ch->dest).node_id);
    }
    return std::nullopt;
}

/// Where probes enter, where replies come back out, and — when the target
/// is echoed outside the simulation — where outbound probes leave and
/// reflected packets re-enter.
struct PingEndpoints {
    const ExternalIface* probe_iface{nullptr};
    std::uint32_t reply_sink{0};
    const ExternalIface* echo_iface{nullptr};
    std::optional<std::uint32_t> echo_sink;
};

inline PingEndpoints resolve_ping_endpoints(const Topology& t, const std::string& target) {
    PingEndpoints ep;
    for (const auto& i : t.ifaces)
        if (i.ingress_dest == target) ep.probe_iface = &i;
    if (!ep.probe_iface)
        throw std::invalid_argument("no external interface sends probes toward '" + target + "'");
    const auto reply = trace_to_sink(t, ep.probe_iface->node, ep.probe_iface->ingress_src);
    if (!reply)
        throw std::invalid_argument("replies to '" + ep.probe_iface->ingress_src +
                                    "' have no path out of the simulation");
    ep.reply_sink = *reply;
    ep.echo_sink = trace_to_sink(t, ep.probe_iface->node, target);
    if (ep.echo_sink) {
        for (const auto& i : t.ifaces)
            if (i.ingress_src == target) ep.echo_iface = &i;
        if (!ep.echo_iface)
            throw std::invalid_argument("probes toward '" + target +
                                        "' leave the simulation but reflected packets have no "
                                        "interface back in");
    }
    return ep;
}

/// Emission sink that plays the far-end responder on the virtual clock:
/// each emitted packet is posted back, bytes unchanged, into a synthetic
/// source after a fixed turnaround.
class ReflectorSink final : public EmissionSink {
public:
    ReflectorSink(std::shared_ptr<SyntheticSource> target, Duration turnaround)
        : target_(std::move(target)), turnaround_(turnaround) {
        if (!target_) throw std::invalid_argument("ReflectorSink: null target source");
    }

    void emit(const Packet& pkt, WallTime at) override {
        target_->post(at + turnaround_, pkt.payload);
        ++reflected_;
    }

    std::uint64_t reflected() const { return reflected_; }

private:
    std::shared_ptr<SyntheticSource> target_;
    Duration turnaround_;
    std::uint64_t reflected_{0};
};

/// Probe send offsets from the run start: the i-th gap is `interval` plus a
/// uniform draw from [0, jitter]. Seeded, so a schedule is reproducible and
/// the same schedule can drive paired experiment arms.
inline std::vector<Duration> send_schedule(std::size_t count, Duration interval, Duration jitter,
                                           std::uint64_t seed) {
    std::vector<Duration> out;
    out.reserve(count);
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::int64_t> dist(
        0, jitter > Duration::zero() ? jitter.count() : 0);
    Duration t{0};
    for (std::size_t i = 0; i < count; ++i) {
        t += interval;
        if (jitter > Duration::zero()) t += Duration(dist(rng));
        out.push_back(t);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Ping experiment

struct PingOptions {
    std::size_t count{100};
    Duration interval{std::chrono::milliseconds(50)};
    Duration send_jitter{Duration::zero()};
    Duration timeout{std::chrono::seconds(1)};
    std::size_t probe_size{100};
    std::size_t handoff_capacity{256};
    std::string target{"10.1.1.1"};
    std::uint64_t seed{1};

    void validate() const {
        if (count == 0) throw std::invalid_argument("ping: count must be positive");
        if (interval <= Duration::zero())
            throw std::invalid_argument("ping: interval must be positive");
        if (send_jitter < Duration::zero())
            throw std::invalid_argument("ping: send jitter must be non-negative");
        if (timeout <= Duration::zero())
            throw std::invalid_argument("ping: timeout must be positive");
        if (probe_size < kProbeHeaderSize)
            throw std::invalid_argument("ping: probe size must fit the probe header");
        if (handoff_capacity == 0)
            throw std::invalid_argument("ping: handoff capacity must be positive");
        if (target.empty()) throw std::invalid_argument("ping: target must be non-empty");
    }
};

struct PingReport {
    std::uint64_t sent{0};
    std::uint64_t received{0};
    std::uint64_t lost{0};
    std::vector<RttSample> samples;
    LatenessSummary lateness;
    CaptureStats probe_capture;
    bool conserved{false};
};

inline BoxplotStats ping_rtt_stats(const PingReport& r) {
    return boxplot_stats(rtt_values(r.samples));
}

namespace detail {

/// Deduplicates received payloads by probe sequence number (first wins)
/// and returns samples ordered by sequence.
inline std::vector<RttSample> match_probes(
    const std::vector<std::pair<std::vector<std::uint8_t>, WallTime>>& received) {
    std::map<std::uint64_t, RttSample> by_seq;
    for (const auto& [payload, at] : received) {
        const auto hdr = decode_probe(payload);
        if (!hdr) continue;
        by_seq.emplace(hdr->seq,
                       RttSample{hdr->seq, hdr->send_ns, at.ns});
    }
    std::vector<RttSample> out;
    out.reserve(by_seq.size());
    for (const auto& [seq, s] : by_seq) out.push_back(s);
    return out;
}

}  // namespace detail

/// Runs the ping experiment entirely on the virtual clock: probe arrivals
/// are scripted at the send schedule, the reply stream is recorded at its
/// emission instants, and — if the target sits beyond the simulation — a
/// zero-turnaround reflector plays the far end. Fully deterministic.
inline PingReport run_ping_virtual(const Topology& topo, SchedulerPolicy policy, CaptureMode mode,
                                   const PingOptions& opt) {
    opt.validate();
    TestClock clock;
    Engine engine(topo, clock, policy);
    const PingEndpoints ep = resolve_ping_endpoints(engine.model().topology(), opt.target);
    const auto schedule = send_schedule(opt.count, opt.interval, opt.send_jitter, opt.seed);

    const WallTime start = clock.now();
    std::vector<ScriptEntry> script;
    script.reserve(schedule.size());
    for (std::size_t i = 0; i < schedule.size(); ++i) {
        const WallTime at = start + schedule[i];
        script.push_back(ScriptEntry{at, encode_probe(i, at.ns, opt.probe_size)});
    }
    auto probe_src =
        std::make_shared<SyntheticSource>(mode, opt.handoff_capacity, std::move(script));
    engine.bind_source(ep.probe_iface->id, probe_src);
    clock.attach(probe_src);

    auto replies = std::make_shared<RecordingSink>();
    engine.bind_sink(ep.reply_sink, replies);

    if (ep.echo_sink) {
        auto echo_src = std::make_shared<SyntheticSource>(mode, opt.handoff_capacity);
        engine.bind_source(ep.echo_iface->id, echo_src);
        clock.attach(echo_src);
        engine.bind_sink(*ep.echo_sink,
                         std::make_shared<ReflectorSink>(echo_src, Duration::zero()));
    }

    engine.run_until_wall(start + schedule.back() + opt.timeout);

    std::vector<std::pair<std::vector<std::uint8_t>, WallTime>> received;
    received.reserve(replies->count());
    for (const auto& e : replies->emissions()) received.emplace_back(e.pkt.payload, e.at);

    PingReport rep;
    rep.sent = opt.count;
    rep.samples = detail::match_probes(received);
    rep.received = rep.samples.size();
    rep.lost = rep.sent - rep.received;
    rep.lateness = lateness_summary(engine.scheduler().lateness_log());
    rep.probe_capture = probe_src->stats();
    rep.conserved = engine.packets_conserved() && rep.probe_capture.conserved();
    return rep;
}

/// Sleeps until the clock reads `target` (within OS sleep granularity).
inline void sleep_until_wall(ClockSource& clock, WallTime target) {
    for (;;) {
        const Duration remain = target - clock.now();
        if (remain <= Duration::zero()) return;
        std::this_thread::sleep_for(remain);
    }
}

/// Runs the ping experiment against the system clock over UDP loopback:
/// a sender thread injects timestamped probes into the capture socket, the
/// engine emulates the path, emissions leave over UDP, and a receiver
/// thread timestamps what comes back. When the target is echoed outside
/// the simulation a reflector thread bounces packets straight back in.
inline PingReport run_ping_real(const Topology& topo, SchedulerPolicy policy, CaptureMode mode,
                                const PingOptions& opt) {
    opt.validate();
    SystemClock clock;
    Engine engine(topo, clock, policy);
    const PingEndpoints ep = resolve_ping_endpoints(engine.model().topology(), opt.target);
    const UdpAddr any_loopback{"127.0.0.1", 0};

    auto probe_src =
        std::make_shared<SocketSource>(mode, opt.handoff_capacity, clock, any_loopback);
    engine.bind_source(ep.probe_iface->id, probe_src);

    UdpSocket receiver;
    receiver.bind(any_loopback);
    engine.bind_sink(ep.reply_sink, std::make_shared<SocketSink>(receiver.local_addr()));

    std::atomic<bool> stop{false};
    std::shared_ptr<SocketSource> echo_src;
    UdpSocket reflector_sock;
    std::thread reflector;
    if (ep.echo_sink) {
        echo_src = std::make_shared<SocketSource>(mode, opt.handoff_capacity, clock, any_loopback);
        engine.bind_source(ep.echo_iface->id, echo_src);
        reflector_sock.bind(any_loopback);
        engine.bind_sink(*ep.echo_sink,
                         std::make_shared<SocketSink>(reflector_sock.local_addr()));
        const UdpAddr back_in = echo_src->local_addr();
        reflector = std::thread([&reflector_sock, back_in, &stop] {
            try_realtime_priority();
            while (!stop.load(std::memory_order_relaxed)) {
                auto data = reflector_sock.recv_with_timeout(std::chrono::milliseconds(5));
                if (!data.empty()) reflector_sock.send_to(data, back_in);
            }
        });
    }
    probe_src->start();
    if (echo_src) echo_src->start();

    std::vector<std::pair<std::vector<std::uint8_t>, WallTime>> received;
    std::thread rx_thread([&receiver, &received, &clock, &stop] {
        try_realtime_priority();
        while (!stop.load(std::memory_order_relaxed)) {
            auto data = receiver.recv_with_timeout(std::chrono::milliseconds(5));
            if (!data.empty()) received.emplace_back(std::move(data), clock.now());
        }
    });

    const auto schedule = send_schedule(opt.count, opt.interval, opt.send_jitter, opt.seed);
    const WallTime start = clock.now();
    const UdpAddr probe_dst = probe_src->local_addr();
    std::thread sender([&clock, &schedule, &opt, start, probe_dst] {
        UdpSocket snd;
        for (std::size_t i = 0; i < schedule.size(); ++i) {
            sleep_until_wall(clock, start + schedule[i]);
            const WallTime ts = clock.now();
            snd.send_to(encode_probe(i, ts.ns, opt.probe_size), probe_dst);
        }
    });

    RealtimeScope rt;
    engine.run_until_wall(start + schedule.back() + opt.timeout);
    sender.join();
    stop.store(true, std::memory_order_relaxed);
    rx_thread.join();
    if (reflector.joinable()) reflector.join();
    probe_src->stop();
    if (echo_src) echo_src->stop();

    PingReport rep;
    rep.sent = opt.count;
    rep.samples = detail::match_probes(received);
    rep.received = rep.samples.size();
    rep.lost = rep.sent - rep.received;
    rep.lateness = lateness_summary(engine.scheduler().lateness_log());
    rep.probe_capture = probe_src->stats();
    rep.conserved = engine.packets_conserved() && rep.probe_capture.conserved();
    return rep;
}

// ---------------------------------------------------------------------------
// Loss experiment

/// Consumer stall: at offset `at` from the start of the run, the event loop
/// goes unresponsive for `duration` while capture keeps running.
struct StallSpec {
    Duration at{Duration::zero()};
    Duration duration{Duration::zero()};
};

struct LossOptions {
    double rate_pps{100.0};
    std::size_t count{100};
    Duration start_offset{Duration::zero()};  // first send; zero means one period in
    std::size_t probe_size{100};
    std::size_t handoff_capacity{256};
    std::string target{"10.1.1.1"};
    Duration drain{std::chrono::milliseconds(500)};
    std::vector<StallSpec> stalls;

    Duration period() const {
        return Duration(static_cast<std::int64_t>(std::llround(1e9 / rate_pps)));
    }
    Duration first_send() const { return start_offset > Duration::zero() ? start_offset : period(); }

    void validate() const {
        if (!(rate_pps > 0.0)) throw std::invalid_argument("loss: rate must be positive");
        if (period() <= Duration::zero())
            throw std::invalid_argument("loss: rate is too high to schedule");
        if (count == 0) throw std::invalid_argument("loss: count must be positive");
        if (start_offset < Duration::zero())
            throw std::invalid_argument("loss: start offset must be non-negative");
        if (probe_size < kProbeHeaderSize)
            throw std::invalid_argument("loss: probe size must fit the probe header");
        if (handoff_capacity == 0)
            throw std::invalid_argument("loss: handoff capacity must be positive");
        if (target.empty()) throw std::invalid_argument("loss: target must be non-empty");
        if (drain <= Duration::zero()) throw std::invalid_argument("loss: drain must be positive");
        for (const auto& s : stalls) {
            if (s.at < Duration::zero() || s.duration <= Duration::zero())
                throw std::invalid_argument("loss: stall offsets must be non-negative and "
                                            "durations positive");
        }
    }

    std::vector<Duration> arrival_offsets() const {
        std::vector<Duration> out;
        out.reserve(count);
        const Duration first = first_send();
        const Duration p = period();
        for (std::size_t k = 0; k < count; ++k)
            out.push_back(first + Duration(static_cast<std::int64_t>(k) * p.count()));
        return out;
    }
};

struct LossReport {
    std::uint64_t sent{0};
    std::uint64_t echoed{0};
    std::uint64_t lost{0};
    CaptureStats capture;
    CaptureLossRate capture_loss;
    std::uint64_t conservation_checks{0};
    std::uint64_t conservation_violations{0};
    bool conserved{false};
};

namespace detail {

inline LossReport finish_loss_report(std::uint64_t sent, std::uint64_t echoed,
                                     const CaptureStats& capture, std::uint64_t checks,
                                     std::uint64_t violations, bool engine_conserved) {
    LossReport rep;
    rep.sent = sent;
    rep.echoed = echoed;
    rep.lost = sent - echoed;
    rep.capture = capture;
    rep.capture_loss = capture_loss_rate(capture);
    rep.conservation_checks = checks;
    rep.conservation_violations = violations;
    rep.conserved = engine_conserved && capture.conserved() && violations == 0;
    return rep;
}

}  // namespace detail

/// Runs the loss experiment on the virtual clock: probes arrive at a fixed
/// rate, optional consumer stalls freeze the event loop while capture keeps
/// accepting, and conservation of the capture counters and of in-flight
/// packets is checked after every dispatched event.
inline LossReport run_loss_virtual(const Topology& topo, SchedulerPolicy policy, CaptureMode mode,
                                   const LossOptions& opt) {
    opt.validate();
    TestClock clock;
    Engine engine(topo, clock, policy);
    const PingEndpoints ep = resolve_ping_endpoints(engine.model().topology(), opt.target);
    if (ep.echo_sink)
        throw std::invalid_argument("loss: target must be echoed inside the simulation");

    const WallTime start = clock.now();
    std::vector<ScriptEntry> script;
    script.reserve(opt.count);
    const auto offsets = opt.arrival_offsets();
    for (std::size_t k = 0; k < offsets.size(); ++k) {
        const WallTime at = start + offsets[k];
        script.push_back(ScriptEntry{at, encode_probe(k, at.ns, opt.probe_size)});
    }
    auto probe_src =
        std::make_shared<SyntheticSource>(mode, opt.handoff_capacity, std::move(script));
    engine.bind_source(ep.probe_iface->id, probe_src);
    clock.attach(probe_src);

    auto replies = std::make_shared<RecordingSink>();
    engine.bind_sink(ep.reply_sink, replies);

    engine.set_timer_callback(
        [&clock, &opt](std::uint64_t id) { clock.advance(opt.stalls.at(id).duration); });
    for (std::size_t i = 0; i < opt.stalls.size(); ++i)
        engine.schedule_timer(wall_to_sim(engine.epoch(), start + opt.stalls[i].at), i);

    std::uint64_t checks = 0;
    std::uint64_t violations = 0;
    engine.set_observer([&engine, &probe_src, &checks, &violations](const Event&) {
        ++checks;
        if (!engine.packets_conserved() || !probe_src->stats().conserved()) ++violations;
    });

    engine.run_until_wall(start + offsets.back() + opt.drain);

    return detail::finish_loss_report(opt.count, replies->count(), probe_src->stats(), checks,
                                      violations, engine.packets_conserved());
}

/// Loss experiment against the system clock over UDP loopback. Stalls are
/// real: a timer event blocks the engine thread for the stall duration.
inline LossReport run_loss_real(const Topology& topo, SchedulerPolicy policy, CaptureMode mode,
                                const LossOptions& opt) {
    opt.validate();
    SystemClock clock;
    Engine engine(topo, clock, policy);
    const PingEndpoints ep = resolve_ping_endpoints(engine.model().topology(), opt.target);
    if (ep.echo_sink)
        throw std::invalid_argument("loss: target must be echoed inside the simulation");
    const UdpAddr any_loopback{"127.0.0.1", 0};

    auto probe_src =
        std::make_shared<SocketSource>(mode, opt.handoff_capacity, clock, any_loopback);
    engine.bind_source(ep.probe_iface->id, probe_src);

    UdpSocket receiver;
    receiver.bind(any_loopback);
    engine.bind_sink(ep.reply_sink, std::make_shared<SocketSink>(receiver.local_addr()));

    std::atomic<bool> stop{false};
    std::atomic<std::uint64_t> echoed{0};
    std::thread rx_thread([&receiver, &echoed, &stop] {
        try_realtime_priority();
        while (!stop.load(std::memory_order_relaxed)) {
            auto data = receiver.recv_with_timeout(std::chrono::milliseconds(5));
            if (!data.empty()) echoed.fetch_add(1, std::memory_order_relaxed);
        }
    });

    engine.set_timer_callback([&opt](std::uint64_t id) {
        std::this_thread::sleep_for(opt.stalls.at(id).duration);
    });

    std::uint64_t checks = 0;
    std::uint64_t violations = 0;
    engine.set_observer([&engine, &probe_src, &checks, &violations](const Event&) {
        ++checks;
        if (!engine.packets_conserved() || !probe_src->stats().conserved()) ++violations;
    });

    probe_src->start();

    const auto offsets = opt.arrival_offsets();
    const WallTime start = clock.now();
    for (std::size_t i = 0; i < opt.stalls.size(); ++i)
        engine.schedule_timer(wall_to_sim(engine.epoch(), start + opt.stalls[i].at), i);
    const UdpAddr probe_dst = probe_src->local_addr();
    std::thread sender([&clock, &offsets, &opt, start, probe_dst] {
        UdpSocket snd;
        for (std::size_t k = 0; k < offsets.size(); ++k) {
            sleep_until_wall(clock, start + offsets[k]);
            snd.send_to(encode_probe(k, clock.now().ns, opt.probe_size), probe_dst);
        }
    });

    RealtimeScope rt;
    engine.run_until_wall(start + offsets.back() + opt.drain);
    sender.join();
    stop.store(true, std::memory_order_relaxed);
    rx_thread.join();
    probe_src->stop();

    return detail::finish_loss_report(opt.count, echoed.load(), probe_src->stats(), checks,
                                      violations, engine.packets_conserved());
}

}  // namespace rtemu
