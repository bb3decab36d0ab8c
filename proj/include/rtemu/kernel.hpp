#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>

#include "rtemu/fes.hpp"

namespace rtemu {

/// Thrown when an event is scheduled with a due time before the current
/// simulation time. That is always a scheduler logic bug, so it is an error
/// rather than a clamp.
class PastDueError : public std::logic_error {
public:
    PastDueError(SimTime due, SimTime now)
        : std::logic_error("schedule: due " + format_ns(due.ns) +
                           " is before current simtime " + format_ns(now.ns)) {}
};

/// Discrete-event core: owns the future event set and the current
/// simulation time. Single-threaded; only the dispatch loop touches it.
class SimKernel {
public:
    SimTime now() const { return now_; }
    bool empty() const { return fes_.empty(); }
    std::optional<SimTime> peek_due() const { return fes_.peek_due(); }
    const FutureEventSet& fes() const { return fes_; }

    std::uint64_t schedule(SimTime due, EventKind kind) {
        if (due < now_) throw PastDueError(due, now_);
        const std::uint64_t id = next_id_++;
        Event ev;
        ev.id = id;
        ev.due = due;
        ev.kind = std::move(kind);
        fes_.insert(std::move(ev));
        return id;
    }

    Event pop_next() {
        Event ev = fes_.pop_next();
        if (ev.due > now_) now_ = ev.due;
        return ev;
    }

    /// Non-real-time mode: dispatches every event due at or before `t_end`
    /// as fast as possible. The handler may schedule new events; simtime
    /// advances only to the due times actually processed.
    template <typename Handler>
    std::size_t run_until(SimTime t_end, Handler&& handler) {
        if (t_end < now_)
            throw std::invalid_argument("run_until: t_end before current simtime");
        std::size_t dispatched = 0;
        while (auto due = fes_.peek_due()) {
            if (*due > t_end) break;
            Event ev = pop_next();
            handler(ev);
            ++dispatched;
        }
        return dispatched;
    }

private:
    FutureEventSet fes_;
    SimTime now_{0};
    std::uint64_t next_id_{1};
};

}  // namespace rtemu
