#pragma once

#include <cstdint>
#include <variant>

#include "rtemu/packet.hpp"
#include "rtemu/time.hpp"

namespace rtemu {

struct TimerFire {
    std::uint64_t timer_id{0};
};

struct PacketArrival {
    Packet packet;
    std::uint32_t node_id{0};
    std::uint32_t iface_id{0};  // external iface for injections, channel for hops
};

struct PacketDeparture {
    Packet packet;
    std::uint32_t channel_id{0};
};

struct EmitExternal {
    Packet packet;
    std::uint32_t sink_id{0};
};

struct ProbeSend {
    std::uint64_t probe_id{0};
};

using EventKind = std::variant<TimerFire, PacketArrival, PacketDeparture, EmitExternal, ProbeSend>;

/// A scheduled simulation event. `id` is unique per run; `seq` is the
/// insertion counter used to break ties between events with equal due times.
struct Event {
    std::uint64_t id{0};
    SimTime due{0};
    std::uint64_t seq{0};
    EventKind kind;
};

inline bool carries_packet(const Event& ev) {
    return std::holds_alternative<PacketArrival>(ev.kind) ||
           std::holds_alternative<PacketDeparture>(ev.kind) ||
           std::holds_alternative<EmitExternal>(ev.kind);
}

inline const char* kind_name(const Event& ev) {
    struct Visitor {
        const char* operator()(const TimerFire&) const { return "timer-fire"; }
        const char* operator()(const PacketArrival&) const { return "packet-arrival"; }
        const char* operator()(const PacketDeparture&) const { return "packet-departure"; }
        const char* operator()(const EmitExternal&) const { return "emit-external"; }
        const char* operator()(const ProbeSend&) const { return "probe-send"; }
    };
    return std::visit(Visitor{}, ev.kind);
}

}  // namespace rtemu
