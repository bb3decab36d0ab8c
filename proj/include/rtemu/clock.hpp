#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <mutex>
#include <variant>

#include "rtemu/time.hpp"

#if defined(__linux__)
#include <sys/prctl.h>
#endif

namespace rtemu {

struct ExternalArrived {
    std::size_t count{0};
};
struct TimedOut {};

using WaitResult = std::variant<ExternalArrived, TimedOut>;

inline bool arrived(const WaitResult& r) { return std::holds_alternative<ExternalArrived>(r); }
inline std::size_t arrival_count(const WaitResult& r) {
    if (const auto* a = std::get_if<ExternalArrived>(&r)) return a->count;
    return 0;
}

/// Behavioral contract shared by the real clock and the deterministic test
/// clock. now() is monotone nondecreasing. wait_for_external(timeout) blocks
/// until external packets become drainable or the timeout elapses, whichever
/// comes first; capture backends report handed-off packets through
/// notify_arrival. On the test clock the wait advances virtual time by
/// exactly min(timeout, time to the next scripted action) and never
/// overshoots.
class ClockSource {
public:
    virtual ~ClockSource() = default;
    virtual WallTime now() const = 0;
    virtual WaitResult wait_for_external(Duration timeout) = 0;
    virtual void notify_arrival(std::size_t count) = 0;
};

/// Monotone wall clock backed by std::chrono::steady_clock. Waits ride on a
/// condition variable signalled by capture producers, so the wake-up latency
/// on packet arrival is far below the 1 ms contract bound.
class SystemClock final : public ClockSource {
public:
    SystemClock() : t0_(std::chrono::steady_clock::now()) {
#if defined(__linux__)
        // Tighten the kernel's timer slack for this (scheduler) thread so
        // timed waits land close to their deadlines.
        ::prctl(PR_SET_TIMERSLACK, 1UL, 0UL, 0UL, 0UL);
#endif
    }

    WallTime now() const override {
        auto d = std::chrono::steady_clock::now() - t0_;
        return WallTime{std::chrono::duration_cast<Duration>(d).count()};
    }

    WaitResult wait_for_external(Duration timeout) override {
        std::unique_lock<std::mutex> lk(mu_);
        if (pending_ == 0 && timeout.count() > 0) {
            cv_.wait_for(lk, timeout, [&] { return pending_ > 0; });
        }
        if (pending_ > 0) {
            std::size_t n = pending_;
            pending_ = 0;
            return ExternalArrived{n};
        }
        return TimedOut{};
    }

    void notify_arrival(std::size_t count) override {
        {
            std::lock_guard<std::mutex> lk(mu_);
            pending_ += count;
        }
        cv_.notify_one();
    }

private:
    std::chrono::steady_clock::time_point t0_;
    std::mutex mu_;
    std::condition_variable cv_;
    std::size_t pending_{0};
};

}  // namespace rtemu
