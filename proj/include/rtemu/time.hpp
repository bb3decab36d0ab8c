#pragma once

#include <chrono>
#include <compare>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace rtemu {

/// All timekeeping is integer nanoseconds. Durations span sub-microsecond
/// serialization times up to multi-millisecond link delays, so a single
/// nanosecond base unit covers everything without rounding.
using Duration = std::chrono::nanoseconds;

/// A point on the simulation clock. Starts at zero, never decreases
/// within a run.
struct SimTime {
    std::int64_t ns{0};

    friend auto operator<=>(const SimTime&, const SimTime&) = default;
    friend SimTime operator+(SimTime t, Duration d) { return SimTime{t.ns + d.count()}; }
    friend Duration operator-(SimTime a, SimTime b) { return Duration{a.ns - b.ns}; }
};

/// A point on the wall clock (monotone source, see ClockSource).
struct WallTime {
    std::int64_t ns{0};

    friend auto operator<=>(const WallTime&, const WallTime&) = default;
    friend WallTime operator+(WallTime t, Duration d) { return WallTime{t.ns + d.count()}; }
    friend Duration operator-(WallTime a, WallTime b) { return Duration{a.ns - b.ns}; }
};

/// Maps a wall instant onto the simulation clock anchored at `epoch`
/// (sim 0 == epoch). Throws if `w` precedes the epoch.
inline SimTime wall_to_sim(WallTime epoch, WallTime w) {
    if (w < epoch)
        throw std::invalid_argument("wall_to_sim: wall time precedes epoch");
    return SimTime{(w - epoch).count()};
}

/// Inverse of wall_to_sim; exact for all representable values.
inline WallTime sim_to_wall(WallTime epoch, SimTime s) {
    return WallTime{epoch.ns + s.ns};
}

/// "12.345678ms" style rendering for reports and diagnostics.
inline std::string format_ns(std::int64_t ns) {
    if (ns % 1'000'000 == 0) return std::to_string(ns / 1'000'000) + "ms";
    if (ns % 1'000 == 0) return std::to_string(ns / 1'000) + "us";
    return std::to_string(ns) + "ns";
}

}  // namespace rtemu
