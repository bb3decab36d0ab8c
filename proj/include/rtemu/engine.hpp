#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <utility>
#include <variant>

#include "rtemu/capture.hpp"
#include "rtemu/clock.hpp"
#include "rtemu/event.hpp"
#include "rtemu/kernel.hpp"
#include "rtemu/log.hpp"
#include "rtemu/netmodel.hpp"
#include "rtemu/policy.hpp"
#include "rtemu/scheduler.hpp"
#include "rtemu/time.hpp"
#include "rtemu/topology.hpp"

namespace rtemu {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

/// Ties the pieces together: capture sources feed packets in through the
/// scheduler, the kernel orders events, the network model decides each
/// packet's next hop, and emissions leave through bound sinks. Timer and
/// probe events call back into user code (the bench harness).
class Engine {
public:
    Engine(Topology t, ClockSource& clock, SchedulerPolicy policy)
        : model_(std::move(t)), clock_(clock), scheduler_(kernel_, clock, policy) {
        scheduler_.set_handler([this](const Event& ev) { handle(ev); });
    }

    Engine(const Engine&) = delete;
    Engine& operator=(const Engine&) = delete;

    /// Attaches a capture source to an external interface of the topology.
    void bind_source(std::uint32_t iface_id, std::shared_ptr<CaptureSource> src) {
        const ExternalIface* iface = model_.topology().find_iface(iface_id);
        if (!iface) throw std::invalid_argument("Engine: unknown iface id");
        scheduler_.add_source(SourceBinding{std::move(src), iface->node, iface->id,
                                            iface->ingress_src, iface->ingress_dest});
    }

    /// Attaches an emission sink to an exit point of the topology.
    void bind_sink(std::uint32_t sink_id, std::shared_ptr<EmissionSink> sink) {
        if (!model_.topology().find_sink(sink_id))
            throw std::invalid_argument("Engine: unknown sink id");
        sinks_[sink_id] = std::move(sink);
    }

    void set_timer_callback(std::function<void(std::uint64_t)> fn) { on_timer_ = std::move(fn); }
    void set_probe_callback(std::function<void(std::uint64_t)> fn) { on_probe_ = std::move(fn); }

    /// Called after every dispatched event; used by tests to checkpoint
    /// conservation counters mid-run.
    void set_observer(std::function<void(const Event&)> fn) { observer_ = std::move(fn); }

    std::uint64_t schedule_timer(SimTime due, std::uint64_t timer_id) {
        return kernel_.schedule(due, TimerFire{timer_id});
    }
    std::uint64_t schedule_probe(SimTime due, std::uint64_t probe_id) {
        return kernel_.schedule(due, ProbeSend{probe_id});
    }

    std::optional<LatenessRecord> next_dispatch(std::optional<WallTime> until = std::nullopt) {
        return scheduler_.next_dispatch(until);
    }
    void run_until_wall(WallTime deadline) { scheduler_.run_until_wall(deadline); }

    SimKernel& kernel() { return kernel_; }
    const SimKernel& kernel() const { return kernel_; }
    RealTimeScheduler& scheduler() { return scheduler_; }
    NetModel& model() { return model_; }
    const NetModel& model() const { return model_; }
    WallTime epoch() const { return scheduler_.epoch(); }

    std::uint64_t emitted() const { return emitted_; }
    std::uint64_t injected() const { return scheduler_.injected(); }

    /// Packet-carrying events still queued in the future event set.
    std::uint64_t in_flight_packets() const {
        std::uint64_t n = 0;
        for (const auto& ev : kernel_.fes().items())
            if (carries_packet(ev)) ++n;
        return n;
    }

    /// Every packet that entered the simulation is either still traveling,
    /// left through a sink, or was dropped by the model.
    bool packets_conserved() const {
        const auto& c = model_.counters();
        return injected() == emitted_ + c.routing_dropped + c.malformed_dropped +
                                 c.local_delivered + in_flight_packets();
    }

private:
    void handle(const Event& ev) {
        std::visit(
            overloaded{
                [&](const TimerFire& t) {
                    if (on_timer_) on_timer_(t.timer_id);
                },
                [&](const ProbeSend& p) {
                    if (on_probe_) on_probe_(p.probe_id);
                },
                [&](const PacketArrival& a) {
                    for (auto& req : model_.on_arrival(kernel_.now(), a.packet, a.node_id))
                        kernel_.schedule(req.due, std::move(req.kind));
                },
                [&](const PacketDeparture& d) {
                    auto req = model_.on_departure(kernel_.now(), d.packet, d.channel_id);
                    kernel_.schedule(req.due, std::move(req.kind));
                },
                [&](const EmitExternal& e) {
                    ++emitted_;
                    const auto it = sinks_.find(e.sink_id);
                    if (it == sinks_.end()) {
                        log_msg(LogLevel::warn, "emission on unbound sink %u dropped",
                                static_cast<unsigned>(e.sink_id));
                    } else {
                        // Actual emission instant: late dispatch shows up in
                        // what the outside world observes.
                        it->second->emit(e.packet, clock_.now());
                    }
                },
            },
            ev.kind);
        if (observer_) observer_(ev);
    }

    NetModel model_;
    ClockSource& clock_;
    SimKernel kernel_;
    RealTimeScheduler scheduler_;
    std::map<std::uint32_t, std::shared_ptr<EmissionSink>> sinks_;
    std::function<void(std::uint64_t)> on_timer_;
    std::function<void(std::uint64_t)> on_probe_;
    std::function<void(const Event&)> observer_;
    std::uint64_t emitted_{0};
};

}  // namespace rtemu
