#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "rtemu/capture.hpp"
#include "rtemu/clock.hpp"
#include "rtemu/event.hpp"
#include "rtemu/kernel.hpp"
#include "rtemu/log.hpp"
#include "rtemu/policy.hpp"
#include "rtemu/time.hpp"

namespace rtemu {

/// Where packets drained from a capture source enter the simulation, and
/// the addresses stamped on them (the probe wire format carries none).
struct SourceBinding {
    std::shared_ptr<CaptureSource> source;
    std::uint32_t node{0};
    std::uint32_t iface{0};
    std::string ingress_src;
    std::string ingress_dest;
};

/// Synchronizes event dispatch with a wall clock. The scheduler repeatedly
/// checks the earliest pending event: anything already due is dispatched at
/// once (and its lateness recorded); otherwise it waits for external packet
/// arrivals with a policy-chosen poll timeout. The corrected policy caps
/// the wait at the time remaining until the event; the fixed-timeout policy
/// always waits the full poll interval, so a sole event due sooner than
/// that is dispatched late by the unused remainder.
class RealTimeScheduler {
public:
    RealTimeScheduler(SimKernel& kernel, ClockSource& clock, SchedulerPolicy policy)
        : kernel_(kernel), clock_(clock), policy_(policy), epoch_(clock.now()) {}

    WallTime epoch() const { return epoch_; }
    const SchedulerPolicy& policy() const { return policy_; }

    void set_handler(std::function<void(const Event&)> h) { handler_ = std::move(h); }

    void add_source(SourceBinding binding) {
        if (!binding.source) throw std::invalid_argument("RealTimeScheduler: null source");
        binding.source->set_wakeup([this](std::size_t n) { clock_.notify_arrival(n); });
        bindings_.push_back(std::move(binding));
    }

    /// Blocks until one simulation event has been dispatched, returning its
    /// lateness record, or until `until` is reached with nothing due
    /// (nullopt). External arrivals are drained and injected while waiting.
    /// Without `until` this blocks until an event becomes dispatchable.
    std::optional<LatenessRecord> next_dispatch(std::optional<WallTime> until = std::nullopt) {
        for (;;) {
            if (stop_.load(std::memory_order_relaxed)) return std::nullopt;
            const WallTime now = clock_.now();
            const std::optional<SimTime> due = kernel_.peek_due();
            std::optional<WallTime> target;
            if (due && (!until || sim_to_wall(epoch_, *due) <= *until))
                target = sim_to_wall(epoch_, *due);

            if (target && now >= *target) return dispatch_one(*target);

            // Nothing dispatchable right now. Pick what we are waiting for:
            // the event's due instant, else the caller's bound, else one
            // poll slice for external traffic.
            WallTime wake{0};
            if (target) {
                wake = *target;
            } else if (until) {
                if (now >= *until) return std::nullopt;
                wake = *until;
            } else {
                wake = now + policy_.max_poll;
            }
            const Duration timeout = compute_poll_timeout(now, wake, policy_);
            const WaitResult r = clock_.wait_for_external(timeout);
            if (arrived(r)) drain_sources();
        }
    }

    /// Dispatches everything that becomes due up to the wall deadline.
    void run_until_wall(WallTime deadline) {
        for (;;) {
            const auto rec = next_dispatch(deadline);
            if (!rec && (clock_.now() >= deadline || stop_.load(std::memory_order_relaxed)))
                return;
        }
    }

    /// Moves every handed-off captured packet into the simulation as a
    /// packet-arrival event. The event is stamped with the drain instant,
    /// not the capture timestamp: simulation time cannot move backwards, so
    /// delivery delay at the capture boundary becomes injection lateness.
    std::size_t drain_sources() {
        std::size_t injected = 0;
        for (auto& b : bindings_) {
            for (auto& pkt : b.source->drain()) {
                pkt.src_addr = b.ingress_src;
                pkt.dest_addr = b.ingress_dest;
                const SimTime at = inject_time();
                kernel_.schedule(at, PacketArrival{std::move(pkt), b.node, b.iface});
                ++injected;
            }
        }
        injected_ += injected;
        return injected;
    }

    void request_stop() { stop_.store(true, std::memory_order_relaxed); }
    bool stop_requested() const { return stop_.load(std::memory_order_relaxed); }

    const std::vector<LatenessRecord>& lateness_log() const { return lateness_log_; }
    void clear_lateness_log() { lateness_log_.clear(); }
    std::uint64_t injected() const { return injected_; }

private:
    SimTime inject_time() const {
        const SimTime wall_now = wall_to_sim(epoch_, clock_.now());
        return std::max(wall_now, kernel_.now());
    }

    std::optional<LatenessRecord> dispatch_one(WallTime due_wall) {
        const Event ev = kernel_.pop_next();
        const WallTime actual = clock_.now();
        const LatenessRecord rec{ev.id, due_wall, actual};
        lateness_log_.push_back(rec);
        if (rec.lateness() > Duration::zero())
            log_msg(LogLevel::debug, "event %llu (%s) dispatched %s late",
                    static_cast<unsigned long long>(ev.id), kind_name(ev),
                    format_ns(rec.lateness().count()).c_str());
        if (handler_) handler_(ev);
        return rec;
    }

    SimKernel& kernel_;
    ClockSource& clock_;
    SchedulerPolicy policy_;
    WallTime epoch_;
    std::function<void(const Event&)> handler_;
    std::vector<SourceBinding> bindings_;
    std::vector<LatenessRecord> lateness_log_;
    std::uint64_t injected_{0};
    std::atomic<bool> stop_{false};
};

}  // namespace rtemu
