// Acceptance gate: one line per criterion, nonzero exit if any fails.
// Criteria 1, 2 and 4 run against the system clock over UDP loopback;
// everything else runs on the deterministic test clock.

#include <algorithm>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "rtemu/rtemu.hpp"

using namespace rtemu;
using namespace std::chrono_literals;

namespace {

bool g_all_ok = true;

void report(int crit, bool ok, const char* fmt, ...) {
    if (!ok) g_all_ok = false;
    std::va_list ap;
    va_start(ap, fmt);
    char buf[512];
    std::vsnprintf(buf, sizeof(buf), fmt, ap);
    va_end(ap);
    std::printf("[%s] criterion %d: %s\n", ok ? "PASS" : "FAIL", crit, buf);
    std::fflush(stdout);
}

double to_ms(double ns) { return ns / 1e6; }

// ---------------------------------------------------------------------------
// 1. Real-clock rtt through the emulated 2x10ms link.

void criterion_1() {
    PingOptions opt;
    opt.count = 300;
    opt.interval = 50ms;  // 20 probes per second
    opt.target = "10.1.2.100";
    const auto rep = run_ping_real(emulated_link_topology(), SchedulerPolicy::corrected(),
                                   CaptureMode::immediate(), opt);
    if (rep.received != rep.sent) {
        report(1, false, "emulated-link rtt: only %llu/%llu probes answered",
               static_cast<unsigned long long>(rep.received),
               static_cast<unsigned long long>(rep.sent));
        return;
    }
    const auto st = ping_rtt_stats(rep);
    const bool median_ok = st.median >= 20e6 && st.median <= 22.5e6;
    const bool iqr_ok = st.iqr() <= 1.5e6;
    const bool floor_ok = st.min >= 20'000'000;
    report(1, median_ok && iqr_ok && floor_ok,
           "emulated-link rtt over %llu probes: median %.3f ms (want [20, 22.5]), "
           "iqr %.3f ms (want <= 1.5), min %.3f ms (want >= 20)",
           static_cast<unsigned long long>(rep.received), to_ms(st.median), to_ms(st.iqr()),
           to_ms(static_cast<double>(st.min)));
}

// ---------------------------------------------------------------------------
// 2. Real-clock rtt through the all-stub local echo.

void criterion_2() {
    PingOptions opt;
    opt.count = 300;
    opt.interval = 50ms;
    const auto rep = run_ping_real(local_host_topology(), SchedulerPolicy::corrected(),
                                   CaptureMode::immediate(), opt);
    if (rep.received != rep.sent) {
        report(2, false, "local-host rtt: only %llu/%llu probes answered",
               static_cast<unsigned long long>(rep.received),
               static_cast<unsigned long long>(rep.sent));
        return;
    }
    const auto st = ping_rtt_stats(rep);
    report(2, st.max <= 2'000'000,
           "local-host rtt over %llu probes: max %.3f ms (want <= 2), median %.3f ms",
           static_cast<unsigned long long>(rep.received), to_ms(static_cast<double>(st.max)),
           to_ms(st.median));
}

// ---------------------------------------------------------------------------
// 3. Fixed-timeout lateness on the test clock.

void criterion_3() {
    const auto lateness_for_gap = [](std::int64_t gap_ns) {
        TestClock clock;
        SimKernel kernel;
        RealTimeScheduler sched(kernel, clock, SchedulerPolicy::fixed_timeout(10ms));
        kernel.schedule(SimTime{gap_ns}, TimerFire{0});
        const auto rec = sched.next_dispatch();
        return rec ? rec->lateness().count() : -1;
    };

    const std::int64_t late3 = lateness_for_gap(3'000'000);
    const bool exact = late3 == 7'000'000;

    std::mt19937_64 rng(2026);
    std::uniform_int_distribution<std::int64_t> gap(1, 9'999'999);
    int matched = 0;
    for (int i = 0; i < 100; ++i) {
        const std::int64_t g = gap(rng);
        if (lateness_for_gap(g) == 10'000'000 - g) ++matched;
    }
    report(3, exact && matched == 100,
           "fixed-timeout lateness: sole event due +3 ms dispatched %.3f ms late "
           "(want exactly 7), %d/100 random gaps matched 10 ms - gap exactly",
           to_ms(static_cast<double>(late3)), matched);
}

// ---------------------------------------------------------------------------
// 4. Paired real runs: buggy pipeline vs corrected pipeline.

void criterion_4() {
    PingOptions opt;
    opt.count = 500;
    opt.interval = 7ms;
    opt.send_jitter = 10ms;  // randomizes the send phase against batch windows
    opt.seed = 424242;       // shared by both arms
    opt.timeout = 500ms;

    const auto buggy = run_ping_real(local_host_topology(), SchedulerPolicy::fixed_timeout(),
                                     CaptureMode::batched(10ms, 64 * 1024), opt);
    const auto fixed = run_ping_real(local_host_topology(), SchedulerPolicy::corrected(),
                                     CaptureMode::immediate(), opt);
    if (buggy.received != buggy.sent || fixed.received != fixed.sent) {
        report(4, false, "paired pipelines: incomplete replies (buggy %llu/500, corrected %llu/500)",
               static_cast<unsigned long long>(buggy.received),
               static_cast<unsigned long long>(fixed.received));
        return;
    }
    const auto bs = ping_rtt_stats(buggy);
    const auto fs = ping_rtt_stats(fixed);
    const double buggy_spread = static_cast<double>(bs.max - bs.min);
    const double fixed_spread = static_cast<double>(fs.max - fs.min);
    const bool ok = buggy_spread >= 8e6 && bs.stdev >= 2e6 && fixed_spread <= 2e6;
    report(4, ok,
           "buggy pipeline rtt spread %.3f ms (want >= 8) stdev %.3f ms (want >= 2); "
           "corrected pipeline spread %.3f ms (want <= 2)",
           to_ms(buggy_spread), to_ms(bs.stdev), to_ms(fixed_spread));
}

// ---------------------------------------------------------------------------
// 5. Consumer stall vs an independent shadow-queue replay.

struct ShadowCounts {
    std::uint64_t delivered{0};
    std::uint64_t dropped{0};
};

// Replays the capture boundary from first principles: packets are pushed at
// known instants into a bounded queue; the consumer empties it at any push
// instant outside a stall and at every stall end.
ShadowCounts shadow_queue(std::vector<std::int64_t> pushes, std::size_t cap,
                          const std::vector<std::pair<std::int64_t, std::int64_t>>& stalls) {
    const auto active = [&stalls](std::int64_t t) {
        for (const auto& [s, e] : stalls)
            if (s < t && t < e) return false;
        return true;
    };
    std::vector<std::int64_t> times = pushes;
    for (const auto& [s, e] : stalls) times.push_back(e);
    std::sort(times.begin(), times.end());
    times.erase(std::unique(times.begin(), times.end()), times.end());
    std::sort(pushes.begin(), pushes.end());

    ShadowCounts out;
    std::size_t q = 0;
    std::size_t i = 0;
    for (const std::int64_t t : times) {
        while (i < pushes.size() && pushes[i] == t) {
            if (q < cap) {
                ++q;
                ++out.delivered;
            } else {
                ++out.dropped;
            }
            ++i;
        }
        if (active(t)) q = 0;
    }
    return out;
}

// Push instants for batched capture: packets ride their batch's flush, a
// batch holds every arrival up to and including its deadline.
std::vector<std::int64_t> batched_push_times(const std::vector<std::int64_t>& arrivals,
                                             std::int64_t t_batch) {
    std::vector<std::int64_t> out;
    std::size_t i = 0;
    while (i < arrivals.size()) {
        const std::int64_t flush = arrivals[i] + t_batch;
        std::size_t j = i;
        while (j < arrivals.size() && arrivals[j] <= flush) ++j;
        for (std::size_t k = i; k < j; ++k) out.push_back(flush);
        i = j;
    }
    return out;
}

struct StallOutcome {
    LossReport immediate;
    LossReport batched;
    bool oracle_exact{false};
};

StallOutcome run_stall_scenario(const LossOptions& opt) {
    std::vector<std::int64_t> arrivals;
    for (const auto& off : opt.arrival_offsets()) arrivals.push_back(off.count());
    std::vector<std::pair<std::int64_t, std::int64_t>> stalls;
    for (const auto& s : opt.stalls)
        stalls.emplace_back(s.at.count(), s.at.count() + s.duration.count());

    StallOutcome out;
    out.immediate = run_loss_virtual(local_host_topology(), SchedulerPolicy::corrected(),
                                     CaptureMode::immediate(), opt);
    const auto imm_oracle = shadow_queue(arrivals, opt.handoff_capacity, stalls);

    out.batched = run_loss_virtual(local_host_topology(), SchedulerPolicy::corrected(),
                                   CaptureMode::batched(10ms, 64 * 1024), opt);
    const auto bat_oracle =
        shadow_queue(batched_push_times(arrivals, 10'000'000), opt.handoff_capacity, stalls);

    out.oracle_exact = out.immediate.capture.dropped == imm_oracle.dropped &&
                       out.immediate.capture.delivered == imm_oracle.delivered &&
                       out.batched.capture.dropped == bat_oracle.dropped &&
                       out.batched.capture.delivered == bat_oracle.delivered &&
                       out.immediate.conserved && out.batched.conserved;
    return out;
}

void criterion_5() {
    LossOptions opt;
    opt.rate_pps = 1000.0;
    opt.count = 40;
    opt.handoff_capacity = 8;
    opt.drain = 100ms;
    opt.stalls.push_back(StallSpec{5ms, Duration{34'500'000}});
    const auto canon = run_stall_scenario(opt);
    bool ok = canon.oracle_exact && canon.immediate.capture.dropped > 0 &&
              canon.batched.capture.dropped > 0 &&
              canon.immediate.capture.dropped >= canon.batched.capture.dropped;

    // Randomized scenarios check only the universal invariant: both modes
    // must match the shadow-queue replay exactly. (The drop ordering between
    // modes is a property of the canonical scenario, not of arbitrary
    // parameters: a batch burst larger than the handoff overflows it even
    // without a stall.)
    std::mt19937_64 rng(55);
    int random_ok = 0;
    const int random_total = 10;
    for (int iter = 0; iter < random_total; ++iter) {
        LossOptions r;
        const std::int64_t period_us = 500 + static_cast<std::int64_t>(rng() % 3) * 500;
        r.rate_pps = 1e6 / static_cast<double>(period_us);
        r.count = 40 + rng() % 40;
        r.handoff_capacity = 4 + rng() % 9;
        r.drain = 200ms;
        const std::int64_t p = period_us * 1000;
        const auto at = static_cast<std::int64_t>(3 * p + rng() % (4 * p));
        const auto max_dur = static_cast<std::int64_t>(r.count - 12) * p - at;
        const auto min_dur = static_cast<std::int64_t>(r.handoff_capacity + 4) * p;
        const auto dur = min_dur + static_cast<std::int64_t>(rng() % (max_dur - min_dur));
        r.stalls.push_back(StallSpec{Duration{at}, Duration{dur}});
        if (run_stall_scenario(r).oracle_exact) ++random_ok;
    }
    ok = ok && random_ok == random_total;
    report(5, ok,
           "consumer stall: immediate %llu dropped, batched %llu dropped, both exactly the "
           "shadow-queue replay; %d/%d randomized scenarios matched the oracle exactly",
           static_cast<unsigned long long>(canon.immediate.capture.dropped),
           static_cast<unsigned long long>(canon.batched.capture.dropped), random_ok,
           random_total);
}

// ---------------------------------------------------------------------------
// 6. Channel transit arithmetic.

void criterion_6() {
    const Duration ref = transit_time(100, ChannelParams{10ms, 1'000'000'000ull});
    const bool ref_ok = ref == Duration{10'000'800};

    // Series additivity against an independent integer recomputation.
    std::mt19937_64 rng(66);
    std::uniform_int_distribution<std::int64_t> delay_ns(0, 50'000'000);
    std::uniform_int_distribution<std::uint64_t> rate(1'000'000, 100'000'000'000ull);
    std::uniform_int_distribution<std::size_t> size(0, 9000);
    int matched = 0;
    const int total = 1000;
    for (int iter = 0; iter < total; ++iter) {
        const std::size_t bytes = size(rng);
        const std::size_t hops = 1 + rng() % 5;
        Duration sum{0};
        std::int64_t expect = 0;
        for (std::size_t h = 0; h < hops; ++h) {
            const ChannelParams params{Duration{delay_ns(rng)}, rate(rng)};
            sum += transit_time(bytes, params);
            const auto bits_ns = static_cast<unsigned __int128>(bytes) * 8u * 1'000'000'000u;
            expect += params.delay.count() +
                      static_cast<std::int64_t>((bits_ns + params.datarate_bps / 2) /
                                                params.datarate_bps);
        }
        if (sum.count() == expect) ++matched;
    }
    report(6, ref_ok && matched == total,
           "transit(100 B, 1 Gbps, 10 ms) = %lld ns (want 10000800); %d/%d random series "
           "added exactly",
           static_cast<long long>(ref.count()), matched, total);
}

// ---------------------------------------------------------------------------
// 7. Quantile and boxplot statistics vs brute force.

void criterion_7() {
    std::mt19937_64 rng(77);
    std::uniform_int_distribution<std::size_t> len(1, 500);
    std::uniform_int_distribution<std::int64_t> val(0, 50'000'000'000ll);
    int matched = 0;
    const int total = 1000;
    for (int iter = 0; iter < total; ++iter) {
        std::vector<std::int64_t> vals(len(rng));
        for (auto& v : vals) v = val(rng);
        const auto st = boxplot_stats(vals);

        auto sorted = vals;
        std::sort(sorted.begin(), sorted.end());
        const auto brute_q = [&sorted](double q) {
            const double h = q * static_cast<double>(sorted.size() - 1);
            const auto lo = static_cast<std::size_t>(h);
            const auto hi = std::min(lo + 1, sorted.size() - 1);
            const double a = static_cast<double>(sorted[lo]);
            return a + (h - static_cast<double>(lo)) * (static_cast<double>(sorted[hi]) - a);
        };
        double mean = 0.0;
        for (auto v : sorted) mean += static_cast<double>(v);
        mean /= static_cast<double>(sorted.size());
        double sq = 0.0;
        for (auto v : sorted) sq += (static_cast<double>(v) - mean) * (static_cast<double>(v) - mean);
        const double stdev = std::sqrt(sq / static_cast<double>(sorted.size()));

        const bool ok = st.min == sorted.front() && st.max == sorted.back() &&
                        std::abs(st.q1 - brute_q(0.25)) <= 1.0 &&
                        std::abs(st.median - brute_q(0.5)) <= 1.0 &&
                        std::abs(st.q3 - brute_q(0.75)) <= 1.0 &&
                        std::abs(st.mean - mean) <= 1.0 && std::abs(st.stdev - stdev) <= 1.0;
        if (ok) ++matched;
    }
    report(7, matched == total, "summary statistics: %d/%d random sets matched brute force "
           "within 1 ns", matched, total);
}

// ---------------------------------------------------------------------------
// 8. Determinism of test-clock runs.

void criterion_8() {
    const auto run_once = [](const char* preset, SchedulerPolicy pol, CaptureMode mode,
                             const std::string& target) {
        PingOptions opt;
        opt.count = 120;
        opt.interval = 7ms;
        opt.send_jitter = 10ms;
        opt.seed = 99;
        opt.target = target;
        const auto rep = run_ping_virtual(preset_topology(preset), pol, mode, opt);
        std::ostringstream csv;
        write_rtt_csv(csv, rep.samples);
        std::ostringstream summary;
        write_summary_csv(summary, ping_rtt_stats(rep));
        write_summary_text(summary, ping_rtt_stats(rep));
        return csv.str() + "\n---\n" + summary.str();
    };

    const auto buggy_a = run_once("local-host", SchedulerPolicy::fixed_timeout(),
                                  CaptureMode::batched(10ms, 64 * 1024), "10.1.1.1");
    const auto buggy_b = run_once("local-host", SchedulerPolicy::fixed_timeout(),
                                  CaptureMode::batched(10ms, 64 * 1024), "10.1.1.1");
    const auto wan_a = run_once("emulated-link", SchedulerPolicy::corrected(),
                                CaptureMode::immediate(), "10.1.2.100");
    const auto wan_b = run_once("emulated-link", SchedulerPolicy::corrected(),
                                CaptureMode::immediate(), "10.1.2.100");
    const bool ok = buggy_a == buggy_b && wan_a == wan_b && buggy_a != wan_a;
    report(8, ok,
           "determinism: repeated virtual runs produced byte-identical csv and summaries "
           "(%zu bytes buggy arm, %zu bytes emulated-link arm)",
           buggy_a.size(), wan_a.size());
}

// ---------------------------------------------------------------------------
// 9. 10,000-packet stress with stalls, conservation at every dispatch.

void criterion_9() {
    LossOptions opt;
    opt.rate_pps = 10'000.0;
    opt.count = 10'000;
    opt.handoff_capacity = 256;
    opt.drain = 500ms;
    opt.stalls = {StallSpec{100ms, 30ms}, StallSpec{400ms, 25ms}, StallSpec{700ms, 40ms}};

    bool ok = true;
    std::uint64_t checks_total = 0;
    std::ostringstream os;
    const CaptureMode modes[] = {CaptureMode::immediate(), CaptureMode::batched(10ms, 64 * 1024)};
    for (const auto& mode : modes) {
        const auto rep = run_loss_virtual(local_host_topology(), SchedulerPolicy::corrected(),
                                          mode, opt);
        const bool mode_ok = rep.conservation_violations == 0 && rep.conservation_checks > 0 &&
                             rep.conserved && rep.sent == rep.echoed + rep.lost &&
                             rep.echoed == rep.capture.delivered && rep.capture.buffered == 0 &&
                             rep.sent == 10'000;
        ok = ok && mode_ok;
        checks_total += rep.conservation_checks;
        os << mode.name() << " " << rep.echoed << " echoed / " << rep.lost << " lost, "
           << rep.conservation_violations << " violations; ";
    }
    report(9, ok, "stress 10000 packets x 2 modes: %sconservation held at all %llu checkpoints",
           os.str().c_str(), static_cast<unsigned long long>(checks_total));
}

}  // namespace

int main() {
    struct NamedStep {
        int n;
        void (*fn)();
    };
    const NamedStep steps[] = {{1, criterion_1}, {2, criterion_2}, {3, criterion_3},
                               {4, criterion_4}, {5, criterion_5}, {6, criterion_6},
                               {7, criterion_7}, {8, criterion_8}, {9, criterion_9}};
    for (const auto& s : steps) {
        try {
            s.fn();
        } catch (const std::exception& e) {
            report(s.n, false, "unexpected error: %s", e.what());
        }
    }
    return g_all_ok ? 0 : 1;
}
