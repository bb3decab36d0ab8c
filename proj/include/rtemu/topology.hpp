#pragma once

#include <algorithm>
#include <cstdint>
#include <initializer_list>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "rtemu/channel.hpp"
#include "rtemu/time.hpp"

namespace rtemu {

enum class NodeKind { host, router, echo_responder };

inline const char* node_kind_name(NodeKind k) {
    switch (k) {
        case NodeKind::host: return "host";
        case NodeKind::router: return "router";
        case NodeKind::echo_responder: return "echo";
    }
    return "?";
}

inline std::optional<NodeKind> node_kind_from_name(const std::string& s) {
    if (s == "host") return NodeKind::host;
    if (s == "router") return NodeKind::router;
    if (s == "echo") return NodeKind::echo_responder;
    return std::nullopt;
}

/// A simulated network element. Echo responders answer probes addressed to
/// them; hosts and routers only forward. The forwarding table maps a
/// destination address to the outgoing channel id.
struct Node {
    std::uint32_t id{0};
    std::string name;
    NodeKind kind{NodeKind::router};
    std::string address;
    Duration processing_delay{Duration::zero()};
    std::map<std::string, std::uint32_t> forwarding;

    bool operator==(const Node&) const = default;
};

/// Entry point for externally captured packets: which node they appear at
/// and the addresses stamped on them (the probe wire format carries none).
struct ExternalIface {
    std::uint32_t id{0};
    std::string name;
    std::uint32_t node{0};
    std::string ingress_src;
    std::string ingress_dest;

    bool operator==(const ExternalIface&) const = default;
};

/// Exit point where packets leave the simulation for the real world.
struct Sink {
    std::uint32_t id{0};
    std::string name;

    bool operator==(const Sink&) const = default;
};

struct NodeEndpoint {
    std::uint32_t node_id{0};
    bool operator==(const NodeEndpoint&) const = default;
};
struct SinkEndpoint {
    std::uint32_t sink_id{0};
    bool operator==(const SinkEndpoint&) const = default;
};
using ChannelDest = std::variant<NodeEndpoint, SinkEndpoint>;

/// Unidirectional link from a node to either another node or an external
/// sink. Links to sinks are stubs in the presets: zero delay and a datarate
/// high enough that serialization rounds to zero, so emission happens at
/// the instant the packet clears the last modeled hop.
struct Channel {
    std::uint32_t id{0};
    std::string name;
    std::uint32_t from_node{0};
    ChannelDest dest{NodeEndpoint{}};
    ChannelParams params;

    bool operator==(const Channel&) const = default;
};

struct Topology {
    std::string name;
    std::vector<Node> nodes;
    std::vector<Channel> channels;
    std::vector<ExternalIface> ifaces;
    std::vector<Sink> sinks;

    bool operator==(const Topology&) const = default;

    const Node* find_node(std::uint32_t id) const { return find_by_id(nodes, id); }
    const Channel* find_channel(std::uint32_t id) const { return find_by_id(channels, id); }
    const ExternalIface* find_iface(std::uint32_t id) const { return find_by_id(ifaces, id); }
    const Sink* find_sink(std::uint32_t id) const { return find_by_id(sinks, id); }

    const ExternalIface* find_iface_by_name(const std::string& n) const {
        for (const auto& i : ifaces)
            if (i.name == n) return &i;
        return nullptr;
    }
    const Sink* find_sink_by_name(const std::string& n) const {
        for (const auto& s : sinks)
            if (s.name == n) return &s;
        return nullptr;
    }

private:
    template <class V>
    static const typename V::value_type* find_by_id(const V& v, std::uint32_t id) {
        for (const auto& e : v)
            if (e.id == id) return &e;
        return nullptr;
    }
};

/// Carries every violation found, not just the first.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(std::vector<std::string> violations)
        : std::runtime_error(join(violations)), violations_(std::move(violations)) {}

    const std::vector<std::string>& violations() const { return violations_; }

private:
    static std::string join(const std::vector<std::string>& v) {
        std::ostringstream os;
        os << "invalid configuration (" << v.size() << " problem" << (v.size() == 1 ? "" : "s")
           << "):";
        for (const auto& s : v) os << "\n  - " << s;
        return os.str();
    }
    std::vector<std::string> violations_;
};

/// Checks structural consistency and returns every violation found.
inline std::vector<std::string> topology_violations(const Topology& t) {
    std::vector<std::string> out;
    auto dup_check = [&out](const auto& items, const char* what) {
        std::set<std::uint32_t> ids;
        std::set<std::string> names;
        for (const auto& e : items) {
            if (!ids.insert(e.id).second)
                out.push_back(std::string(what) + " id " + std::to_string(e.id) + " is duplicated");
            if (e.name.empty())
                out.push_back(std::string(what) + " " + std::to_string(e.id) + " has an empty name");
            else if (!names.insert(e.name).second)
                out.push_back(std::string(what) + " name '" + e.name + "' is duplicated");
        }
    };
    dup_check(t.nodes, "node");
    dup_check(t.channels, "channel");
    dup_check(t.ifaces, "iface");
    dup_check(t.sinks, "sink");

    std::set<std::string> addrs;
    for (const auto& n : t.nodes) {
        if (n.address.empty())
            out.push_back("node '" + n.name + "' has an empty address");
        else if (!addrs.insert(n.address).second)
            out.push_back("node address '" + n.address + "' is duplicated");
        if (n.processing_delay < Duration::zero())
            out.push_back("node '" + n.name + "' has a negative processing delay");
        for (const auto& [dest, ch_id] : n.forwarding) {
            const Channel* ch = t.find_channel(ch_id);
            if (!ch) {
                out.push_back("node '" + n.name + "' forwards '" + dest +
                              "' to unknown channel " + std::to_string(ch_id));
            } else if (ch->from_node != n.id) {
                out.push_back("node '" + n.name + "' forwards '" + dest + "' to channel '" +
                              ch->name + "' which does not originate there");
            }
        }
    }
    for (const auto& c : t.channels) {
        if (!t.find_node(c.from_node))
            out.push_back("channel '" + c.name + "' originates at unknown node " +
                          std::to_string(c.from_node));
        if (const auto* ne = std::get_if<NodeEndpoint>(&c.dest)) {
            if (!t.find_node(ne->node_id))
                out.push_back("channel '" + c.name + "' targets unknown node " +
                              std::to_string(ne->node_id));
        } else {
            const auto sink_id = std::get<SinkEndpoint>(c.dest).sink_id;
            if (!t.find_sink(sink_id))
                out.push_back("channel '" + c.name + "' targets unknown sink " +
                              std::to_string(sink_id));
        }
        if (c.params.delay < Duration::zero())
            out.push_back("channel '" + c.name + "' has a negative delay");
        if (c.params.datarate_bps == 0)
            out.push_back("channel '" + c.name + "' has a zero datarate");
    }
    for (const auto& i : t.ifaces) {
        if (!t.find_node(i.node))
            out.push_back("iface '" + i.name + "' is attached to unknown node " +
                          std::to_string(i.node));
        if (i.ingress_src.empty())
            out.push_back("iface '" + i.name + "' has an empty ingress source address");
        if (i.ingress_dest.empty())
            out.push_back("iface '" + i.name + "' has an empty ingress destination address");
    }
    return out;
}

/// Validates and returns the topology; throws ConfigError listing every
/// violation if any check fails.
inline Topology validate_topology(Topology t) {
    auto v = topology_violations(t);
    if (!v.empty()) throw ConfigError(std::move(v));
    return t;
}

// ---------------------------------------------------------------------------
// Presets

/// Stub parameters: zero delay, datarate high enough that serialization of
/// any packet below ~600 kB rounds to zero nanoseconds.
inline ChannelParams stub_channel_params() {
    return ChannelParams{Duration::zero(), 10'000'000'000'000'000ull};
}

/// Single in-simulation echo responder reached directly from the external
/// interface; replies leave through a stub channel. Models pinging a
/// service on the local machine through the emulator.
inline Topology local_host_topology() {
    using namespace std::chrono_literals;
    Topology t;
    t.name = "local-host";
    Node echo;
    echo.id = 0;
    echo.name = "echo0";
    echo.kind = NodeKind::echo_responder;
    echo.address = "10.1.1.1";
    echo.forwarding = {{"10.1.1.100", 0}};
    t.nodes.push_back(echo);
    Channel out;
    out.id = 0;
    out.name = "to-ext";
    out.from_node = 0;
    out.dest = SinkEndpoint{0};
    out.params = stub_channel_params();
    t.channels.push_back(out);
    t.ifaces.push_back(ExternalIface{0, "ext-in", 0, "10.1.1.100", "10.1.1.1"});
    t.sinks.push_back(Sink{0, "ext-out"});
    return validate_topology(std::move(t));
}

/// Two routers joined by a pair of emulated 10 ms / 1 Gbit/s links, with a
/// stub exit channel on each side: probes enter at r1, cross the forward
/// link, and leave toward the far-end responder; replies enter at r2 and
/// cross the reverse link back. Round trips see both emulated links.
inline Topology emulated_link_topology() {
    using namespace std::chrono_literals;
    Topology t;
    t.name = "emulated-link";
    const ChannelParams wan{std::chrono::milliseconds(10), 1'000'000'000ull};

    Node r1;
    r1.id = 0;
    r1.name = "r1";
    r1.kind = NodeKind::router;
    r1.address = "10.1.1.1";
    r1.forwarding = {{"10.1.2.100", 0}, {"10.1.1.100", 2}};
    Node r2;
    r2.id = 1;
    r2.name = "r2";
    r2.kind = NodeKind::router;
    r2.address = "10.1.2.1";
    r2.forwarding = {{"10.1.1.100", 1}, {"10.1.2.100", 3}};
    t.nodes = {r1, r2};

    Channel fwd;
    fwd.id = 0;
    fwd.name = "wan-fwd";
    fwd.from_node = 0;
    fwd.dest = NodeEndpoint{1};
    fwd.params = wan;
    Channel rev;
    rev.id = 1;
    rev.name = "wan-rev";
    rev.from_node = 1;
    rev.dest = NodeEndpoint{0};
    rev.params = wan;
    Channel stub1;
    stub1.id = 2;
    stub1.name = "exit-near";
    stub1.from_node = 0;
    stub1.dest = SinkEndpoint{0};
    stub1.params = stub_channel_params();
    Channel stub2;
    stub2.id = 3;
    stub2.name = "exit-far";
    stub2.from_node = 1;
    stub2.dest = SinkEndpoint{1};
    stub2.params = stub_channel_params();
    t.channels = {fwd, rev, stub1, stub2};

    t.ifaces.push_back(ExternalIface{0, "near-in", 0, "10.1.1.100", "10.1.2.100"});
    t.ifaces.push_back(ExternalIface{1, "far-in", 1, "10.1.2.100", "10.1.1.100"});
    t.sinks.push_back(Sink{0, "near-out"});
    t.sinks.push_back(Sink{1, "far-out"});
    return validate_topology(std::move(t));
}

inline Topology preset_topology(const std::string& name) {
    if (name == "local-host") return local_host_topology();
    if (name == "emulated-link") return emulated_link_topology();
    throw std::invalid_argument("unknown topology preset '" + name +
                                "' (known: local-host, emulated-link)");
}

// ---------------------------------------------------------------------------
// JSON serialization

namespace detail {

inline void check_keys(const nlohmann::json& j, std::initializer_list<const char*> allowed,
                       const std::string& ctx, std::vector<std::string>& out) {
    for (const auto& [key, value] : j.items()) {
        (void)value;
        if (std::find_if(allowed.begin(), allowed.end(),
                         [&key](const char* a) { return key == a; }) == allowed.end())
            out.push_back(ctx + ": unknown key '" + key + "'");
    }
}

}  // namespace detail

inline nlohmann::json to_json(const Topology& t) {
    nlohmann::json j;
    j["name"] = t.name;
    j["nodes"] = nlohmann::json::array();
    for (const auto& n : t.nodes) {
        nlohmann::json jn;
        jn["id"] = n.id;
        jn["name"] = n.name;
        jn["kind"] = node_kind_name(n.kind);
        jn["address"] = n.address;
        jn["processing_delay_ns"] = n.processing_delay.count();
        jn["forwarding"] = n.forwarding;
        j["nodes"].push_back(jn);
    }
    j["channels"] = nlohmann::json::array();
    for (const auto& c : t.channels) {
        nlohmann::json jc;
        jc["id"] = c.id;
        jc["name"] = c.name;
        jc["from"] = c.from_node;
        if (const auto* ne = std::get_if<NodeEndpoint>(&c.dest))
            jc["to_node"] = ne->node_id;
        else
            jc["to_sink"] = std::get<SinkEndpoint>(c.dest).sink_id;
        jc["delay_ns"] = c.params.delay.count();
        jc["datarate_bps"] = c.params.datarate_bps;
        j["channels"].push_back(jc);
    }
    j["ifaces"] = nlohmann::json::array();
    for (const auto& i : t.ifaces) {
        nlohmann::json ji;
        ji["id"] = i.id;
        ji["name"] = i.name;
        ji["node"] = i.node;
        ji["ingress_src"] = i.ingress_src;
        ji["ingress_dest"] = i.ingress_dest;
        j["ifaces"].push_back(ji);
    }
    j["sinks"] = nlohmann::json::array();
    for (const auto& s : t.sinks) {
        nlohmann::json js;
        js["id"] = s.id;
        js["name"] = s.name;
        j["sinks"].push_back(js);
    }
    return j;
}

/// Parses a topology, collecting every problem (unknown keys, wrong types,
/// missing fields, structural violations) before throwing ConfigError.
inline Topology topology_from_json(const nlohmann::json& j) {
    std::vector<std::string> out;
    Topology t;
    if (!j.is_object()) throw ConfigError({"topology: expected a JSON object"});
    detail::check_keys(j, {"name", "nodes", "channels", "ifaces", "sinks"}, "topology", out);

    auto get_str = [&out](const nlohmann::json& o, const char* key, const std::string& ctx,
                          std::string& dst) {
        if (!o.contains(key))
            out.push_back(ctx + ": missing key '" + key + "'");
        else if (!o[key].is_string())
            out.push_back(ctx + ": key '" + key + "' must be a string");
        else
            dst = o[key].get<std::string>();
    };
    auto get_uint = [&out](const nlohmann::json& o, const char* key, const std::string& ctx,
                           auto& dst) {
        if (!o.contains(key))
            out.push_back(ctx + ": missing key '" + key + "'");
        else if (!o[key].is_number_unsigned())
            out.push_back(ctx + ": key '" + key + "' must be a non-negative integer");
        else
            dst = o[key].get<std::decay_t<decltype(dst)>>();
    };
    auto get_int64 = [&out](const nlohmann::json& o, const char* key, const std::string& ctx,
                            std::int64_t& dst) {
        if (!o.contains(key))
            out.push_back(ctx + ": missing key '" + key + "'");
        else if (!o[key].is_number_integer())
            out.push_back(ctx + ": key '" + key + "' must be an integer");
        else
            dst = o[key].get<std::int64_t>();
    };

    get_str(j, "name", "topology", t.name);
    if (j.contains("nodes") && j["nodes"].is_array()) {
        for (const auto& jn : j["nodes"]) {
            const std::string ctx = "node[" + std::to_string(t.nodes.size()) + "]";
            detail::check_keys(
                jn, {"id", "name", "kind", "address", "processing_delay_ns", "forwarding"}, ctx,
                out);
            Node n;
            get_uint(jn, "id", ctx, n.id);
            get_str(jn, "name", ctx, n.name);
            std::string kind;
            get_str(jn, "kind", ctx, kind);
            if (auto k = node_kind_from_name(kind))
                n.kind = *k;
            else if (!kind.empty())
                out.push_back(ctx + ": unknown kind '" + kind + "' (host, router, echo)");
            get_str(jn, "address", ctx, n.address);
            std::int64_t pd = 0;
            get_int64(jn, "processing_delay_ns", ctx, pd);
            n.processing_delay = Duration(pd);
            if (jn.contains("forwarding")) {
                if (!jn["forwarding"].is_object()) {
                    out.push_back(ctx + ": key 'forwarding' must be an object");
                } else {
                    for (const auto& [dest, ch] : jn["forwarding"].items()) {
                        if (!ch.is_number_unsigned())
                            out.push_back(ctx + ": forwarding['" + dest +
                                          "'] must be a channel id");
                        else
                            n.forwarding[dest] = ch.get<std::uint32_t>();
                    }
                }
            } else {
                out.push_back(ctx + ": missing key 'forwarding'");
            }
            t.nodes.push_back(std::move(n));
        }
    } else {
        out.push_back("topology: missing or non-array key 'nodes'");
    }
    if (j.contains("channels") && j["channels"].is_array()) {
        for (const auto& jc : j["channels"]) {
            const std::string ctx = "channel[" + std::to_string(t.channels.size()) + "]";
            detail::check_keys(
                jc, {"id", "name", "from", "to_node", "to_sink", "delay_ns", "datarate_bps"}, ctx,
                out);
            Channel c;
            get_uint(jc, "id", ctx, c.id);
            get_str(jc, "name", ctx, c.name);
            get_uint(jc, "from", ctx, c.from_node);
            const bool has_node = jc.contains("to_node");
            const bool has_sink = jc.contains("to_sink");
            if (has_node == has_sink) {
                out.push_back(ctx + ": exactly one of 'to_node' or 'to_sink' is required");
            } else if (has_node) {
                NodeEndpoint ne;
                get_uint(jc, "to_node", ctx, ne.node_id);
                c.dest = ne;
            } else {
                SinkEndpoint se;
                get_uint(jc, "to_sink", ctx, se.sink_id);
                c.dest = se;
            }
            std::int64_t delay = 0;
            get_int64(jc, "delay_ns", ctx, delay);
            c.params.delay = Duration(delay);
            get_uint(jc, "datarate_bps", ctx, c.params.datarate_bps);
            t.channels.push_back(std::move(c));
        }
    } else {
        out.push_back("topology: missing or non-array key 'channels'");
    }
    if (j.contains("ifaces") && j["ifaces"].is_array()) {
        for (const auto& ji : j["ifaces"]) {
            const std::string ctx = "iface[" + std::to_string(t.ifaces.size()) + "]";
            detail::check_keys(ji, {"id", "name", "node", "ingress_src", "ingress_dest"}, ctx,
                               out);
            ExternalIface i;
            get_uint(ji, "id", ctx, i.id);
            get_str(ji, "name", ctx, i.name);
            get_uint(ji, "node", ctx, i.node);
            get_str(ji, "ingress_src", ctx, i.ingress_src);
            get_str(ji, "ingress_dest", ctx, i.ingress_dest);
            t.ifaces.push_back(std::move(i));
        }
    } else {
        out.push_back("topology: missing or non-array key 'ifaces'");
    }
    if (j.contains("sinks") && j["sinks"].is_array()) {
        for (const auto& js : j["sinks"]) {
            const std::string ctx = "sink[" + std::to_string(t.sinks.size()) + "]";
            detail::check_keys(js, {"id", "name"}, ctx, out);
            Sink s;
            get_uint(js, "id", ctx, s.id);
            get_str(js, "name", ctx, s.name);
            t.sinks.push_back(std::move(s));
        }
    } else {
        out.push_back("topology: missing or non-array key 'sinks'");
    }

    auto structural = topology_violations(t);
    out.insert(out.end(), structural.begin(), structural.end());
    if (!out.empty()) throw ConfigError(std::move(out));
    return t;
}

}  // namespace rtemu
