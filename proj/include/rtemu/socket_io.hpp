#pragma once

#include <arpa/inet.h>
#include <netinet/in.h>
#include <poll.h>
#include <pthread.h>
#include <sched.h>
#include <sys/socket.h>
#include <unistd.h>

#include <atomic>
#include <cerrno>
#include <cstdint>
#include <cstdlib>
#include <cstring>
#include <stdexcept>
#include <string>
#include <system_error>
#include <thread>
#include <utility>
#include <vector>

#include "rtemu/capture.hpp"
#include "rtemu/clock.hpp"
#include "rtemu/netmodel.hpp"
#include "rtemu/time.hpp"

namespace rtemu {

struct UdpAddr {
    std::string host{"127.0.0.1"};
    std::uint16_t port{0};

    std::string str() const { return host + ":" + std::to_string(port); }
};

/// Best-effort switch of the calling thread to SCHED_FIFO. Wakeup chains
/// between the capture thread and the event loop then preempt promptly
/// instead of waiting out the fair scheduler's wakeup granularity, which on
/// busy or single-core hosts shows up as millisecond-scale latency outliers.
/// Returns false (and changes nothing) without CAP_SYS_NICE.
inline bool try_realtime_priority(int priority = 10) noexcept {
    sched_param sp{};
    sp.sched_priority = priority;
    return pthread_setschedparam(pthread_self(), SCHED_FIFO, &sp) == 0;
}

/// Elevates the calling thread for the current scope, restoring the previous
/// scheduling class on destruction.
class RealtimeScope {
public:
    explicit RealtimeScope(int priority = 10) noexcept {
        pthread_getschedparam(pthread_self(), &old_policy_, &old_param_);
        sched_param sp{};
        sp.sched_priority = priority;
        elevated_ = pthread_setschedparam(pthread_self(), SCHED_FIFO, &sp) == 0;
    }
    ~RealtimeScope() {
        if (elevated_) pthread_setschedparam(pthread_self(), old_policy_, &old_param_);
    }
    RealtimeScope(const RealtimeScope&) = delete;
    RealtimeScope& operator=(const RealtimeScope&) = delete;

    bool elevated() const { return elevated_; }

private:
    int old_policy_{SCHED_OTHER};
    sched_param old_param_{};
    bool elevated_{false};
};

/// Parses "host:port" with a numeric IPv4 host.
inline UdpAddr parse_udp_addr(const std::string& s) {
    const auto pos = s.rfind(':');
    if (pos == std::string::npos || pos == 0 || pos + 1 == s.size())
        throw std::invalid_argument("expected host:port, got '" + s + "'");
    UdpAddr a;
    a.host = s.substr(0, pos);
    in_addr probe{};
    if (inet_pton(AF_INET, a.host.c_str(), &probe) != 1)
        throw std::invalid_argument("'" + a.host + "' is not a numeric IPv4 address");
    const std::string port_s = s.substr(pos + 1);
    char* end = nullptr;
    const long port = std::strtol(port_s.c_str(), &end, 10);
    if (end == port_s.c_str() || *end != '\0' || port < 0 || port > 65535)
        throw std::invalid_argument("'" + port_s + "' is not a valid port");
    a.port = static_cast<std::uint16_t>(port);
    return a;
}

inline sockaddr_in to_sockaddr(const UdpAddr& a) {
    sockaddr_in sa{};
    sa.sin_family = AF_INET;
    sa.sin_port = htons(a.port);
    if (inet_pton(AF_INET, a.host.c_str(), &sa.sin_addr) != 1)
        throw std::invalid_argument("'" + a.host + "' is not a numeric IPv4 address");
    return sa;
}

/// RAII UDP socket.
class UdpSocket {
public:
    UdpSocket() : fd_(::socket(AF_INET, SOCK_DGRAM, 0)) {
        if (fd_ < 0) throw std::system_error(errno, std::generic_category(), "socket");
    }
    ~UdpSocket() {
        if (fd_ >= 0) ::close(fd_);
    }
    UdpSocket(UdpSocket&& o) noexcept : fd_(std::exchange(o.fd_, -1)) {}
    UdpSocket& operator=(UdpSocket&& o) noexcept {
        if (this != &o) {
            if (fd_ >= 0) ::close(fd_);
            fd_ = std::exchange(o.fd_, -1);
        }
        return *this;
    }
    UdpSocket(const UdpSocket&) = delete;
    UdpSocket& operator=(const UdpSocket&) = delete;

    int fd() const { return fd_; }

    /// Binds; port 0 picks a free port (read it back via local_addr()).
    void bind(const UdpAddr& a) {
        sockaddr_in sa = to_sockaddr(a);
        if (::bind(fd_, reinterpret_cast<sockaddr*>(&sa), sizeof(sa)) != 0)
            throw std::system_error(errno, std::generic_category(), "bind " + a.str());
    }

    UdpAddr local_addr() const {
        sockaddr_in sa{};
        socklen_t len = sizeof(sa);
        if (::getsockname(fd_, reinterpret_cast<sockaddr*>(&sa), &len) != 0)
            throw std::system_error(errno, std::generic_category(), "getsockname");
        char buf[INET_ADDRSTRLEN] = {};
        inet_ntop(AF_INET, &sa.sin_addr, buf, sizeof(buf));
        return UdpAddr{buf, ntohs(sa.sin_port)};
    }

    void send_to(const std::vector<std::uint8_t>& data, const UdpAddr& dest) {
        const sockaddr_in sa = to_sockaddr(dest);
        const auto n = ::sendto(fd_, data.data(), data.size(), 0,
                                reinterpret_cast<const sockaddr*>(&sa), sizeof(sa));
        if (n < 0) throw std::system_error(errno, std::generic_category(), "sendto");
    }

    /// Waits up to `timeout` for a datagram; empty result on timeout.
    std::vector<std::uint8_t> recv_with_timeout(Duration timeout, UdpAddr* from = nullptr) {
        pollfd pfd{fd_, POLLIN, 0};
        timespec ts = to_timespec(timeout);
        const int r = ::ppoll(&pfd, 1, &ts, nullptr);
        if (r < 0) {
            if (errno == EINTR) return {};
            throw std::system_error(errno, std::generic_category(), "ppoll");
        }
        if (r == 0) return {};
        std::vector<std::uint8_t> buf(65536);
        sockaddr_in sa{};
        socklen_t len = sizeof(sa);
        const auto n =
            ::recvfrom(fd_, buf.data(), buf.size(), 0, reinterpret_cast<sockaddr*>(&sa), &len);
        if (n < 0) throw std::system_error(errno, std::generic_category(), "recvfrom");
        buf.resize(static_cast<std::size_t>(n));
        if (from) {
            char ip[INET_ADDRSTRLEN] = {};
            inet_ntop(AF_INET, &sa.sin_addr, ip, sizeof(ip));
            *from = UdpAddr{ip, ntohs(sa.sin_port)};
        }
        return buf;
    }

    static timespec to_timespec(Duration d) {
        if (d < Duration::zero()) d = Duration::zero();
        timespec ts{};
        ts.tv_sec = d.count() / 1'000'000'000;
        ts.tv_nsec = d.count() % 1'000'000'000;
        return ts;
    }

private:
    int fd_;
};

/// Capture source backed by a UDP socket. A receive thread polls the
/// socket, timestamps datagrams with the shared clock, and ingests them;
/// in batched mode the poll timeout is capped at the pending batch deadline
/// so time-based flushes happen on schedule (the batching lives on the
/// producer side, like capture batching inside an OS kernel).
class SocketSource final : public CaptureSource {
public:
    SocketSource(CaptureMode mode, std::size_t handoff_capacity, ClockSource& clock,
                 const UdpAddr& bind_addr)
        : CaptureSource(mode, handoff_capacity), clock_(clock) {
        sock_.bind(bind_addr);
    }

    ~SocketSource() override { stop(); }

    UdpAddr local_addr() const { return sock_.local_addr(); }

    /// Launch the receive thread. Call after the wakeup callback is wired
    /// up, or early arrivals may wait for the next poll slice.
    void start() {
        if (running_.exchange(true)) return;
        rx_ = std::thread([this] { rx_loop(); });
    }

    void stop() {
        if (!running_.exchange(false)) return;
        if (rx_.joinable()) rx_.join();
    }

private:
    void rx_loop() {
        using namespace std::chrono_literals;
        try_realtime_priority();
        const Duration slice = 10ms;
        while (running_.load(std::memory_order_relaxed)) {
            Duration timeout = slice;
            if (const auto deadline = batch_deadline()) {
                const Duration until = *deadline - clock_.now();
                if (until < timeout) timeout = until;
            }
            auto data = sock_.recv_with_timeout(timeout);
            if (!data.empty()) on_packet(std::move(data), clock_.now());
            maybe_flush(clock_.now());
        }
    }

    ClockSource& clock_;
    UdpSocket sock_;
    std::thread rx_;
    std::atomic<bool> running_{false};
};

/// Emission sink that forwards packet payloads to a UDP destination.
class SocketSink final : public EmissionSink {
public:
    explicit SocketSink(const UdpAddr& dest) : dest_(dest) {}

    void emit(const Packet& pkt, WallTime) override {
        sock_.send_to(pkt.payload, dest_);
        ++sent_;
    }

    std::uint64_t sent() const { return sent_; }
    void set_dest(const UdpAddr& dest) { dest_ = dest; }

private:
    UdpSocket sock_;
    UdpAddr dest_;
    std::uint64_t sent_{0};
};

}  // namespace rtemu
