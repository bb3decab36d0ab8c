#include <catch2/catch_amalgamated.hpp>

#include <memory>

#include "rtemu/test_clock.hpp"

using namespace rtemu;
using namespace std::chrono_literals;

namespace {

WallTime ms(std::int64_t v) { return WallTime{v * 1'000'000}; }

std::shared_ptr<SyntheticSource> make_source(std::vector<ScriptEntry> script,
                                             CaptureMode mode = CaptureMode::immediate()) {
    return std::make_shared<SyntheticSource>(mode, 64, std::move(script));
}

}  // namespace

TEST_CASE("a timed-out wait advances virtual time by exactly the timeout") {
    TestClock clock(ms(100));
    const auto r = clock.wait_for_external(7ms);
    CHECK_FALSE(arrived(r));
    CHECK(clock.now() == ms(107));
    clock.wait_for_external(0ms);
    CHECK(clock.now() == ms(107));
    const auto r2 = clock.wait_for_external(-5ms);  // treated as zero
    CHECK_FALSE(arrived(r2));
    CHECK(clock.now() == ms(107));
}

TEST_CASE("a scripted arrival wakes the wait at its exact instant") {
    TestClock clock;
    auto src = make_source({{ms(3), {1, 2, 3}}});
    clock.attach(src);

    const auto r = clock.wait_for_external(10ms);
    REQUIRE(arrived(r));
    CHECK(arrival_count(r) == 1);
    CHECK(clock.now() == ms(3));  // not 10 ms: the walk stops at the arrival
    CHECK(clock.pending_arrivals() == 0);
    CHECK(src->drain().size() == 1);
}

TEST_CASE("an arrival beyond the deadline does not wake the wait") {
    TestClock clock;
    auto src = make_source({{ms(15), {1}}});
    clock.attach(src);
    CHECK_FALSE(arrived(clock.wait_for_external(10ms)));
    CHECK(clock.now() == ms(10));
    CHECK(src->stats().offered == 0);  // not captured yet

    REQUIRE(arrived(clock.wait_for_external(10ms)));
    CHECK(clock.now() == ms(15));
}

TEST_CASE("an arrival exactly at the deadline still wakes the wait") {
    TestClock clock;
    auto src = make_source({{ms(10), {1}}});
    clock.attach(src);
    const auto r = clock.wait_for_external(10ms);
    CHECK(arrived(r));
    CHECK(clock.now() == ms(10));
}

TEST_CASE("advance stalls the consumer while sources keep capturing") {
    TestClock clock;
    auto src = make_source({{ms(1), {1}}, {ms(2), {2}}, {ms(3), {3}}});
    clock.attach(src);

    clock.advance(5ms);
    CHECK(clock.now() == ms(5));
    CHECK(clock.pending_arrivals() == 3);  // notifications accumulated
    CHECK(src->stats().delivered == 3);    // capture went on during the stall

    // The next wait returns instantly with everything that piled up.
    const auto r = clock.wait_for_external(10ms);
    REQUIRE(arrived(r));
    CHECK(arrival_count(r) == 3);
    CHECK(clock.now() == ms(5));  // no virtual time consumed
    CHECK(src->drain().size() == 3);

    CHECK_THROWS_AS(clock.advance(-1ms), std::invalid_argument);
}

TEST_CASE("waits interleave batch flushes with scripted arrivals") {
    TestClock clock;
    auto src = make_source({{ms(0), std::vector<std::uint8_t>(10)},
                            {ms(25), std::vector<std::uint8_t>(10)}},
                           CaptureMode::batched(10ms, 64 * 1024));
    clock.attach(src);

    // First wake: the 0 ms arrival is captured (buffered, no handoff yet) --
    // no wake fires, so the walk continues to the 10 ms batch flush.
    auto r = clock.wait_for_external(100ms);
    REQUIRE(arrived(r));
    CHECK(arrival_count(r) == 1);
    CHECK(clock.now() == ms(10));
    CHECK(src->drain().size() == 1);

    // Second wake: arrival at 25 ms buffers silently; its flush at 35 ms wakes.
    r = clock.wait_for_external(100ms);
    REQUIRE(arrived(r));
    CHECK(clock.now() == ms(35));
    CHECK(src->drain().size() == 1);

    // Nothing left: the full timeout elapses.
    CHECK_FALSE(arrived(clock.wait_for_external(20ms)));
    CHECK(clock.now() == ms(55));
}

TEST_CASE("the earliest of several sources wins the walk") {
    TestClock clock;
    auto a = make_source({{ms(8), {1}}});
    auto b = make_source({{ms(4), {2}}});
    clock.attach(a);
    clock.attach(b);

    auto r = clock.wait_for_external(20ms);
    REQUIRE(arrived(r));
    CHECK(clock.now() == ms(4));
    CHECK(b->stats().delivered == 1);
    CHECK(a->stats().offered == 0);

    r = clock.wait_for_external(20ms);
    REQUIRE(arrived(r));
    CHECK(clock.now() == ms(8));
    CHECK(a->stats().delivered == 1);
}
