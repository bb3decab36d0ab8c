#pragma once

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "rtemu/stats.hpp"
#include "rtemu/time.hpp"

namespace rtemu {

using namespace std::chrono_literals;

enum class PolicyKind { corrected, fixed_timeout };

/// The two poll-timeout policies under comparison. `max_poll` is the
/// capture library's read timeout (10 ms reference value); the fixed-timeout
/// variant always waits that long regardless of when the next event is due,
/// which is exactly the defect being reproduced. The corrected variant clamps
/// the wait to the time remaining until the next event.
struct SchedulerPolicy {
    PolicyKind kind{PolicyKind::corrected};
    Duration max_poll{10ms};

    static SchedulerPolicy corrected(Duration max_poll = 10ms) {
        return make(PolicyKind::corrected, max_poll);
    }
    static SchedulerPolicy fixed_timeout(Duration max_poll = 10ms) {
        return make(PolicyKind::fixed_timeout, max_poll);
    }

    const char* name() const {
        return kind == PolicyKind::corrected ? "corrected" : "fixed-timeout";
    }

private:
    static SchedulerPolicy make(PolicyKind kind, Duration max_poll) {
        if (max_poll <= Duration::zero())
            throw std::invalid_argument("SchedulerPolicy: max_poll must be positive");
        return SchedulerPolicy{kind, max_poll};
    }
};

/// How long to block waiting for external packets before the next event.
/// Corrected: clamp(target - now, 0, max_poll). Fixed-timeout: max_poll,
/// unconditionally.
inline Duration compute_poll_timeout(WallTime now, WallTime target, const SchedulerPolicy& policy) {
    if (policy.kind == PolicyKind::fixed_timeout) return policy.max_poll;
    return std::clamp(target - now, Duration::zero(), policy.max_poll);
}

/// One record per dispatched event: when it was due on the wall clock and
/// when it actually ran. Lateness is never negative because the scheduler
/// never dispatches early.
struct LatenessRecord {
    std::uint64_t event_id{0};
    WallTime due_wall{0};
    WallTime actual_wall{0};

    Duration lateness() const { return actual_wall - due_wall; }
};

struct LatenessSummary {
    bool empty{true};
    Duration max{0};
    double mean_ns{0.0};
    double p99_ns{0.0};
};

inline LatenessSummary lateness_summary(const std::vector<LatenessRecord>& records) {
    LatenessSummary s;
    if (records.empty()) return s;
    std::vector<std::int64_t> vals;
    vals.reserve(records.size());
    double sum = 0.0;
    for (const auto& r : records) {
        vals.push_back(r.lateness().count());
        sum += static_cast<double>(vals.back());
    }
    std::sort(vals.begin(), vals.end());
    s.empty = false;
    s.max = Duration{vals.back()};
    s.mean_ns = sum / static_cast<double>(vals.size());
    s.p99_ns = quantile(vals, 0.99);
    return s;
}

}  // namespace rtemu
