#pragma once

#include <cstdint>
#include <limits>
#include <stdexcept>

#include "rtemu/time.hpp"

namespace rtemu {

/// A unidirectional link: constant propagation delay plus a serialization
/// time proportional to packet size at the given datarate.
struct ChannelParams {
    Duration delay{Duration::zero()};
    std::uint64_t datarate_bps{0};

    void validate() const {
        if (delay < Duration::zero())
            throw std::invalid_argument("ChannelParams: delay must be non-negative");
        if (datarate_bps == 0)
            throw std::invalid_argument("ChannelParams: datarate must be positive");
    }

    bool operator==(const ChannelParams&) const = default;
};

/// Serialization time for `size_bytes` at `datarate_bps`, rounded to the
/// nearest nanosecond (half up). Exact integer arithmetic throughout.
inline Duration serialization_time(std::size_t size_bytes, std::uint64_t datarate_bps) {
    if (datarate_bps == 0)
        throw std::invalid_argument("serialization_time: datarate must be positive");
    using u128 = unsigned __int128;
    const u128 bits_ns = static_cast<u128>(size_bytes) * 8u * 1'000'000'000u;
    const u128 ns = (bits_ns + datarate_bps / 2) / datarate_bps;
    if (ns > static_cast<u128>(std::numeric_limits<std::int64_t>::max()))
        throw std::overflow_error("serialization_time: result exceeds representable range");
    return Duration(static_cast<std::int64_t>(ns));
}

/// Total time a packet of `size_bytes` occupies the channel:
/// propagation delay + serialization time.
inline Duration transit_time(std::size_t size_bytes, const ChannelParams& params) {
    params.validate();
    const Duration ser = serialization_time(size_bytes, params.datarate_bps);
    if (params.delay.count() > std::numeric_limits<std::int64_t>::max() - ser.count())
        throw std::overflow_error("transit_time: result exceeds representable range");
    return params.delay + ser;
}

}  // namespace rtemu
