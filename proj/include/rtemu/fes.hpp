#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <tuple>
#include <vector>

#include "rtemu/event.hpp"

namespace rtemu {

/// The future event set: a binary heap keyed by (due, seq). Pop order is
/// nondecreasing in due time, and events with equal due times come out in
/// insertion order. Insert and pop are O(log n).
class FutureEventSet {
public:
    void insert(Event ev) {
        ev.seq = next_seq_++;
        heap_.push_back(std::move(ev));
        std::push_heap(heap_.begin(), heap_.end(), after);
        ++inserted_;
    }

    bool empty() const { return heap_.empty(); }
    std::size_t size() const { return heap_.size(); }

    std::optional<SimTime> peek_due() const {
        if (heap_.empty()) return std::nullopt;
        return heap_.front().due;
    }

    const Event& peek() const {
        if (heap_.empty()) throw std::out_of_range("FutureEventSet::peek: empty");
        return heap_.front();
    }

    Event pop_next() {
        if (heap_.empty()) throw std::out_of_range("FutureEventSet::pop_next: empty");
        std::pop_heap(heap_.begin(), heap_.end(), after);
        Event ev = std::move(heap_.back());
        heap_.pop_back();
        ++popped_;
        return ev;
    }

    std::uint64_t inserted_count() const { return inserted_; }
    std::uint64_t popped_count() const { return popped_; }

    /// Heap-ordered view of pending events, for inspection and
    /// conservation accounting in tests.
    const std::vector<Event>& items() const { return heap_; }

private:
    static bool after(const Event& a, const Event& b) {
        return std::tie(a.due.ns, a.seq) > std::tie(b.due.ns, b.seq);
    }

    std::vector<Event> heap_;
    std::uint64_t next_seq_{0};
    std::uint64_t inserted_{0};
    std::uint64_t popped_{0};
};

}  // namespace rtemu
