#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <utility>
#include <variant>
#include <vector>

#include "rtemu/packet.hpp"
#include "rtemu/time.hpp"

namespace rtemu {

struct ImmediateMode {};

struct BatchedMode {
    Duration t_batch{std::chrono::milliseconds(10)};
    std::size_t buf_cap{64 * 1024};
};

/// Delivery mode of a capture source. Immediate hands each packet to the
/// consumer as it is captured; batched collects packets until a timeout
/// elapses or the buffer fills, whichever comes first, then delivers the
/// whole batch. Immediate mode bypasses the batch buffer entirely, so its
/// only buffering is the bounded handoff queue.
class CaptureMode {
public:
    static CaptureMode immediate() { return CaptureMode{ImmediateMode{}}; }

    static CaptureMode batched(Duration t_batch, std::size_t buf_cap) {
        if (t_batch <= Duration::zero())
            throw std::invalid_argument("CaptureMode: t_batch must be positive");
        if (buf_cap == 0) throw std::invalid_argument("CaptureMode: buf_cap must be positive");
        return CaptureMode{BatchedMode{t_batch, buf_cap}};
    }

    bool is_batched() const { return std::holds_alternative<BatchedMode>(mode_); }
    const BatchedMode& batched_params() const { return std::get<BatchedMode>(mode_); }
    const char* name() const { return is_batched() ? "batched" : "immediate"; }

private:
    explicit CaptureMode(std::variant<ImmediateMode, BatchedMode> m) : mode_(m) {}
    std::variant<ImmediateMode, BatchedMode> mode_;
};

/// Flush rule for a non-empty batch: deliver once the buffered bytes reach
/// the buffer capacity or the oldest packet has aged past the batch timeout,
/// whichever occurs first.
inline bool batch_flush_due(std::size_t buffered_bytes, std::size_t buf_cap,
                            Duration first_pkt_age, Duration t_batch) {
    return buffered_bytes >= buf_cap || first_pkt_age >= t_batch;
}

/// Counts at the capture boundary. Every packet offered to a source is
/// eventually delivered (pushed into the handoff queue), dropped at the
/// full queue, or still sitting in the batch buffer:
/// offered == delivered + dropped + buffered at every observation point.
struct CaptureStats {
    std::uint64_t offered{0};
    std::uint64_t delivered{0};
    std::uint64_t dropped{0};
    std::uint64_t batches_flushed{0};
    std::uint64_t buffered{0};
    std::uint64_t buffered_bytes{0};

    bool conserved() const { return offered == delivered + dropped + buffered; }
};

struct CaptureLossRate {
    double rate{0.0};
    bool empty{true};
};

/// dropped / (delivered + dropped); flagged empty when nothing reached the
/// drop point yet.
inline CaptureLossRate capture_loss_rate(const CaptureStats& s) {
    const std::uint64_t seen = s.delivered + s.dropped;
    if (seen == 0) return CaptureLossRate{0.0, true};
    return CaptureLossRate{static_cast<double>(s.dropped) / static_cast<double>(seen), false};
}

/// A source of external packets. Backends ingest via on_packet (possibly
/// from a producer thread); the scheduler loop is the single consumer and
/// takes everything with drain(). The handoff queue is bounded and
/// drop-tail: a producer never blocks, it drops and counts. The wakeup
/// callback fires after packets are pushed toward the handoff so the
/// scheduler's wait can return promptly.
class CaptureSource {
public:
    explicit CaptureSource(CaptureMode mode, std::size_t handoff_capacity = 256)
        : mode_(mode), handoff_capacity_(handoff_capacity) {
        if (handoff_capacity_ == 0)
            throw std::invalid_argument("CaptureSource: handoff capacity must be positive");
    }
    virtual ~CaptureSource() = default;

    CaptureSource(const CaptureSource&) = delete;
    CaptureSource& operator=(const CaptureSource&) = delete;

    void set_wakeup(std::function<void(std::size_t)> fn) {
        std::lock_guard<std::mutex> lk(mu_);
        wakeup_ = std::move(fn);
    }

    /// Ingest one captured packet with its capture timestamp.
    void on_packet(std::vector<std::uint8_t> raw, WallTime ts) {
        std::size_t pushes = 0;
        {
            std::lock_guard<std::mutex> lk(mu_);
            if (closed_) throw std::logic_error("CaptureSource: on_packet after close");
            Packet pkt;
            pkt.payload = std::move(raw);
            pkt.capture_ts = ts;
            pkt.source_seq = next_seq_++;
            ++offered_;
            if (!mode_.is_batched()) {
                push_handoff_locked(std::move(pkt));
                pushes = 1;
            } else {
                batch_bytes_ += pkt.size();
                if (batch_.empty()) batch_first_ts_ = ts;
                batch_.push_back(std::move(pkt));
                const auto& p = mode_.batched_params();
                if (batch_flush_due(batch_bytes_, p.buf_cap, ts - batch_first_ts_, p.t_batch))
                    pushes = flush_locked();
            }
        }
        if (pushes > 0) wake(pushes);
    }

    /// Time-driven flush check for batched mode; no-op when the batch is
    /// empty or not yet due.
    void maybe_flush(WallTime now) {
        std::size_t pushes = 0;
        {
            std::lock_guard<std::mutex> lk(mu_);
            if (!mode_.is_batched() || batch_.empty()) return;
            const auto& p = mode_.batched_params();
            if (now - batch_first_ts_ >= p.t_batch) pushes = flush_locked();
        }
        if (pushes > 0) wake(pushes);
    }

    /// Wall instant at which the current batch must be delivered, if any.
    std::optional<WallTime> batch_deadline() const {
        std::lock_guard<std::mutex> lk(mu_);
        if (!mode_.is_batched() || batch_.empty()) return std::nullopt;
        return batch_first_ts_ + mode_.batched_params().t_batch;
    }

    /// Removes and returns all handed-off packets in FIFO order.
    std::vector<Packet> drain() {
        std::lock_guard<std::mutex> lk(mu_);
        std::vector<Packet> out;
        out.reserve(handoff_.size());
        while (!handoff_.empty()) {
            out.push_back(std::move(handoff_.front()));
            handoff_.pop_front();
        }
        return out;
    }

    CaptureStats stats() const {
        std::lock_guard<std::mutex> lk(mu_);
        CaptureStats s;
        s.offered = offered_;
        s.delivered = delivered_;
        s.dropped = dropped_;
        s.batches_flushed = batches_flushed_;
        s.buffered = batch_.size();
        s.buffered_bytes = batch_bytes_;
        return s;
    }

    const CaptureMode& mode() const { return mode_; }
    std::size_t handoff_capacity() const { return handoff_capacity_; }

    void close() {
        std::lock_guard<std::mutex> lk(mu_);
        closed_ = true;
    }
    bool closed() const {
        std::lock_guard<std::mutex> lk(mu_);
        return closed_;
    }

protected:
    // Push one packet into the bounded handoff queue; drop-tail when full.
    void push_handoff_locked(Packet pkt) {
        if (handoff_.size() < handoff_capacity_) {
            handoff_.push_back(std::move(pkt));
            ++delivered_;
        } else {
            ++dropped_;
        }
    }

    std::size_t flush_locked() {
        const std::size_t n = batch_.size();
        for (auto& pkt : batch_) push_handoff_locked(std::move(pkt));
        batch_.clear();
        batch_bytes_ = 0;
        ++batches_flushed_;
        return n;
    }

    void wake(std::size_t n) {
        std::function<void(std::size_t)> fn;
        {
            std::lock_guard<std::mutex> lk(mu_);
            fn = wakeup_;
        }
        if (fn) fn(n);
    }

    mutable std::mutex mu_;

private:
    CaptureMode mode_;
    std::size_t handoff_capacity_;
    std::deque<Packet> handoff_;
    std::vector<Packet> batch_;
    std::size_t batch_bytes_{0};
    WallTime batch_first_ts_{0};
    std::uint64_t next_seq_{0};
    std::uint64_t offered_{0};
    std::uint64_t delivered_{0};
    std::uint64_t dropped_{0};
    std::uint64_t batches_flushed_{0};
    bool closed_{false};
    std::function<void(std::size_t)> wakeup_;
};

struct ScriptEntry {
    WallTime at{0};
    std::vector<std::uint8_t> payload;
};

/// Deterministic capture backend: replays a script of (time, payload)
/// entries. Driven inline by the test clock, so there is no concurrency.
/// New entries may be posted at run time (the loopback reflector uses this);
/// they must not predate entries already executed.
class SyntheticSource final : public CaptureSource {
public:
    SyntheticSource(CaptureMode mode, std::size_t handoff_capacity,
                    std::vector<ScriptEntry> script = {})
        : CaptureSource(mode, handoff_capacity) {
        for (std::size_t i = 1; i < script.size(); ++i) {
            if (script[i].at < script[i - 1].at)
                throw std::invalid_argument("SyntheticSource: script times must be monotone");
        }
        for (auto& e : script) pending_.push_back(std::move(e));
    }

    /// Entries may be posted at instants the walk has already passed (a
    /// reflector answering an emission, say); they execute at the next
    /// walk step but keep the given capture timestamp.
    void post(WallTime at, std::vector<std::uint8_t> payload) {
        std::lock_guard<std::mutex> lk(script_mu_);
        // Keep pending_ sorted; posts normally land at or after the tail.
        auto it = pending_.end();
        while (it != pending_.begin() && (it - 1)->at > at) --it;
        pending_.insert(it, ScriptEntry{at, std::move(payload)});
    }

    /// Next instant at which this source will act: a scripted arrival or a
    /// pending batch flush.
    std::optional<WallTime> next_action_time() const {
        std::lock_guard<std::mutex> lk(script_mu_);
        std::optional<WallTime> t;
        if (!pending_.empty()) t = pending_.front().at;
        if (auto d = batch_deadline(); d && (!t || *d < *t)) t = *d;
        return t;
    }

    /// Executes every action due at or before `now` in time order,
    /// interleaving scripted arrivals with batch-timeout flushes.
    void run_actions_until(WallTime now) {
        for (;;) {
            std::optional<WallTime> next_arrival;
            {
                std::lock_guard<std::mutex> lk(script_mu_);
                if (!pending_.empty()) next_arrival = pending_.front().at;
            }
            const std::optional<WallTime> next_flush = batch_deadline();
            // A flush due strictly before the next arrival happens first.
            if (next_flush && *next_flush <= now &&
                (!next_arrival || *next_flush < *next_arrival)) {
                maybe_flush(*next_flush);
                continue;
            }
            if (!next_arrival || *next_arrival > now) break;
            ScriptEntry entry;
            {
                std::lock_guard<std::mutex> lk(script_mu_);
                entry = std::move(pending_.front());
                pending_.pop_front();
            }
            on_packet(std::move(entry.payload), entry.at);
        }
        maybe_flush(now);
    }

    std::size_t pending_count() const {
        std::lock_guard<std::mutex> lk(script_mu_);
        return pending_.size();
    }

private:
    mutable std::mutex script_mu_;
    std::deque<ScriptEntry> pending_;
};

}  // namespace rtemu
