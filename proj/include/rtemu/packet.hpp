#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "rtemu/time.hpp"

namespace rtemu {

/// A datagram travelling through the emulation. Payload bytes are carried
/// verbatim; addresses are model-level metadata attached at the ingress
/// interface (the wire format has no address fields).
struct Packet {
    std::vector<std::uint8_t> payload;
    WallTime capture_ts{0};
    std::uint64_t source_seq{0};
    std::string src_addr;
    std::string dest_addr;

    std::size_t size() const { return payload.size(); }
};

/// Probe wire format: the first 16 bytes of the payload are a big-endian
/// 8-byte sequence number followed by a big-endian 8-byte sender wall
/// timestamp in nanoseconds; the rest is zero padding up to the configured
/// probe size. Echo responders preserve these bytes bit for bit, which is
/// what lets the sender attribute replies and compute RTTs on its own clock.
inline constexpr std::size_t kProbeHeaderSize = 16;

struct ProbeHeader {
    std::uint64_t seq{0};
    std::int64_t send_ns{0};
};

inline std::vector<std::uint8_t> encode_probe(std::uint64_t seq, std::int64_t send_ns,
                                              std::size_t total_size) {
    if (total_size < kProbeHeaderSize)
        throw std::invalid_argument("encode_probe: size below 16-byte header");
    std::vector<std::uint8_t> out(total_size, 0);
    for (int i = 0; i < 8; ++i) {
        out[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(seq >> (56 - 8 * i));
        out[static_cast<std::size_t>(8 + i)] =
            static_cast<std::uint8_t>(static_cast<std::uint64_t>(send_ns) >> (56 - 8 * i));
    }
    return out;
}

inline std::optional<ProbeHeader> decode_probe(std::span<const std::uint8_t> payload) {
    if (payload.size() < kProbeHeaderSize) return std::nullopt;
    std::uint64_t seq = 0;
    std::uint64_t ts = 0;
    for (int i = 0; i < 8; ++i) {
        seq = (seq << 8) | payload[static_cast<std::size_t>(i)];
        ts = (ts << 8) | payload[static_cast<std::size_t>(8 + i)];
    }
    return ProbeHeader{seq, static_cast<std::int64_t>(ts)};
}

}  // namespace rtemu
