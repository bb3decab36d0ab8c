#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "rtemu/channel.hpp"
#include "rtemu/event.hpp"
#include "rtemu/log.hpp"
#include "rtemu/packet.hpp"
#include "rtemu/time.hpp"
#include "rtemu/topology.hpp"

namespace rtemu {

/// Follow-up event the model wants scheduled.
struct ScheduleRequest {
    SimTime due{0};
    EventKind kind;
};

struct RoutingCounters {
    std::uint64_t routing_dropped{0};
    std::uint64_t malformed_dropped{0};
    std::uint64_t local_delivered{0};
    std::uint64_t echoed{0};
};

/// Receives packets that leave the simulation. `at` is the wall-clock
/// instant the emission actually happened, so late dispatch is visible to
/// whatever sits outside.
class EmissionSink {
public:
    virtual ~EmissionSink() = default;
    virtual void emit(const Packet& pkt, WallTime at) = 0;
};

/// Stores emissions for inspection; used by tests and the loopback bench.
class RecordingSink final : public EmissionSink {
public:
    struct Emission {
        Packet pkt;
        WallTime at{0};
    };

    void emit(const Packet& pkt, WallTime at) override { emissions_.push_back({pkt, at}); }

    const std::vector<Emission>& emissions() const { return emissions_; }
    std::size_t count() const { return emissions_.size(); }
    void clear() { emissions_.clear(); }

private:
    std::vector<Emission> emissions_;
};

/// Packet behavior over a topology: forwarding by destination address,
/// per-node processing delay, per-channel transit time, and echo replies.
/// The model does not own simulation time; it answers "what happens next"
/// with schedule requests and the engine places them.
class NetModel {
public:
    explicit NetModel(Topology t) : topo_(validate_topology(std::move(t))) {}

    const Topology& topology() const { return topo_; }
    const RoutingCounters& counters() const { return counters_; }

    /// Echo reply: identical bytes, source and destination swapped.
    static Packet echo_reply(const Packet& pkt) {
        Packet reply = pkt;
        std::swap(reply.src_addr, reply.dest_addr);
        return reply;
    }

    /// Packet present at a node (injected there or arrived over a channel).
    /// Echo responders answer probes addressed to them; everything else is
    /// forwarded by destination address or dropped.
    std::vector<ScheduleRequest> on_arrival(SimTime now, const Packet& pkt,
                                            std::uint32_t node_id) {
        std::vector<ScheduleRequest> out;
        const Node* node = topo_.find_node(node_id);
        if (!node) throw std::logic_error("NetModel: arrival at unknown node");
        if (pkt.payload.empty() || pkt.dest_addr.empty()) {
            ++counters_.malformed_dropped;
            log_msg(LogLevel::debug, "dropping malformed packet at node '%s'",
                    node->name.c_str());
            return out;
        }
        if (pkt.dest_addr == node->address) {
            if (node->kind == NodeKind::echo_responder) {
                ++counters_.echoed;
                forward(now, *node, echo_reply(pkt), out);
            } else {
                ++counters_.local_delivered;
            }
            return out;
        }
        forward(now, *node, pkt, out);
        return out;
    }

    /// Packet entered a channel; it reaches the far end (or leaves the
    /// simulation through a sink) after the channel's transit time.
    ScheduleRequest on_departure(SimTime now, Packet pkt, std::uint32_t channel_id) const {
        const Channel* ch = topo_.find_channel(channel_id);
        if (!ch) throw std::logic_error("NetModel: departure on unknown channel");
        const SimTime at = now + transit_time(pkt.size(), ch->params);
        if (const auto* ne = std::get_if<NodeEndpoint>(&ch->dest))
            return ScheduleRequest{at, PacketArrival{std::move(pkt), ne->node_id, ch->id}};
        return ScheduleRequest{at, EmitExternal{std::move(pkt), std::get<SinkEndpoint>(ch->dest).sink_id}};
    }

private:
    void forward(SimTime now, const Node& node, Packet pkt, std::vector<ScheduleRequest>& out) {
        const auto it = node.forwarding.find(pkt.dest_addr);
        if (it == node.forwarding.end()) {
            ++counters_.routing_dropped;
            log_msg(LogLevel::debug, "node '%s' has no route for '%s'", node.name.c_str(),
                    pkt.dest_addr.c_str());
            return;
        }
        out.push_back(ScheduleRequest{now + node.processing_delay,
                                      PacketDeparture{std::move(pkt), it->second}});
    }

    Topology topo_;
    RoutingCounters counters_;
};

}  // namespace rtemu
