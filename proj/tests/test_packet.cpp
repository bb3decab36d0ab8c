#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "rtemu/packet.hpp"

using namespace rtemu;

TEST_CASE("probe encoding lays out big-endian seq and timestamp") {
    const auto p = encode_probe(0x0102030405060708ull, 0x1112131415161718ll, 20);
    REQUIRE(p.size() == 20);
    for (std::size_t i = 0; i < 8; ++i) {
        CHECK(p[i] == 0x01 + i);
        CHECK(p[8 + i] == 0x11 + i);
    }
    CHECK(p[16] == 0);
    CHECK(p[19] == 0);
}

TEST_CASE("probe decoding inverts encoding") {
    std::mt19937_64 rng(17);
    for (int i = 0; i < 200; ++i) {
        const std::uint64_t seq = rng();
        const auto send_ns = static_cast<std::int64_t>(rng());
        const std::size_t size = 16 + rng() % 1400;
        const auto bytes = encode_probe(seq, send_ns, size);
        const auto hdr = decode_probe(bytes);
        REQUIRE(hdr.has_value());
        CHECK(hdr->seq == seq);
        CHECK(hdr->send_ns == send_ns);
    }
}

TEST_CASE("probe framing enforces the 16-byte minimum") {
    CHECK_THROWS_AS(encode_probe(1, 2, 15), std::invalid_argument);
    CHECK(encode_probe(1, 2, 16).size() == 16);
    const std::vector<std::uint8_t> runt(15, 0xff);
    CHECK_FALSE(decode_probe(runt).has_value());
    CHECK(decode_probe(std::vector<std::uint8_t>(16, 0)).has_value());
}

TEST_CASE("packet size tracks the payload") {
    Packet p;
    CHECK(p.size() == 0);
    p.payload = encode_probe(42, 1'000, 100);
    p.src_addr = "10.1.1.100";
    p.dest_addr = "10.1.1.1";
    CHECK(p.size() == 100);
    CHECK(decode_probe(p.payload)->seq == 42);
}
