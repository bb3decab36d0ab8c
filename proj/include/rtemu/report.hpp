#pragma once

#include <cstdint>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "rtemu/stats.hpp"

namespace rtemu {

/// One matched probe: wall-clock send and receive instants in nanoseconds.
struct RttSample {
    std::uint64_t seq{0};
    std::int64_t send_ns{0};
    std::int64_t recv_ns{0};

    std::int64_t rtt_ns() const { return recv_ns - send_ns; }

    bool operator==(const RttSample&) const = default;
};

inline std::vector<std::int64_t> rtt_values(const std::vector<RttSample>& samples) {
    std::vector<std::int64_t> out;
    out.reserve(samples.size());
    for (const auto& s : samples) out.push_back(s.rtt_ns());
    return out;
}

/// Fixed three-decimal rendering so output bytes are reproducible.
inline std::string fmt_fixed3(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.3f", v);
    return buf;
}

inline constexpr const char* kRttCsvHeader = "seq,send_ns,recv_ns,rtt_ns";
inline constexpr const char* kSummaryCsvHeader =
    "n,min_ns,q1_ns,median_ns,q3_ns,max_ns,mean_ns,stdev_ns";

inline void write_rtt_csv(std::ostream& os, const std::vector<RttSample>& samples) {
    os << kRttCsvHeader << '\n';
    for (const auto& s : samples)
        os << s.seq << ',' << s.send_ns << ',' << s.recv_ns << ',' << s.rtt_ns() << '\n';
}

inline void write_summary_csv(std::ostream& os, const BoxplotStats& st) {
    os << kSummaryCsvHeader << '\n'
       << st.n << ',' << st.min << ',' << fmt_fixed3(st.q1) << ',' << fmt_fixed3(st.median)
       << ',' << fmt_fixed3(st.q3) << ',' << st.max << ',' << fmt_fixed3(st.mean) << ','
       << fmt_fixed3(st.stdev) << '\n';
}

inline void write_summary_text(std::ostream& os, const BoxplotStats& st) {
    const auto ms = [](double ns) { return fmt_fixed3(ns / 1e6) + " ms"; };
    os << "samples " << st.n << '\n'
       << "min     " << ms(static_cast<double>(st.min)) << '\n'
       << "q1      " << ms(st.q1) << '\n'
       << "median  " << ms(st.median) << '\n'
       << "q3      " << ms(st.q3) << '\n'
       << "max     " << ms(static_cast<double>(st.max)) << '\n'
       << "mean    " << ms(st.mean) << '\n'
       << "stdev   " << ms(st.stdev) << '\n';
}

/// Parses the four-column probe CSV produced by write_rtt_csv. Malformed
/// input raises std::runtime_error naming the offending line.
inline std::vector<RttSample> read_rtt_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw std::runtime_error("rtt csv: empty input");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kRttCsvHeader)
        throw std::runtime_error("rtt csv: line 1: expected header '" +
                                 std::string(kRttCsvHeader) + "'");
    std::vector<RttSample> out;
    std::size_t lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string field;
        std::vector<std::string> fields;
        while (std::getline(ls, field, ',')) fields.push_back(field);
        if (fields.size() != 4)
            throw std::runtime_error("rtt csv: line " + std::to_string(lineno) +
                                     ": expected 4 fields, got " + std::to_string(fields.size()));
        RttSample s;
        try {
            std::size_t used = 0;
            s.seq = std::stoull(fields[0], &used);
            if (used != fields[0].size()) throw std::invalid_argument("seq");
            s.send_ns = std::stoll(fields[1], &used);
            if (used != fields[1].size()) throw std::invalid_argument("send_ns");
            s.recv_ns = std::stoll(fields[2], &used);
            if (used != fields[2].size()) throw std::invalid_argument("recv_ns");
            const std::int64_t rtt = std::stoll(fields[3], &used);
            if (used != fields[3].size()) throw std::invalid_argument("rtt_ns");
            if (rtt != s.rtt_ns())
                throw std::runtime_error("rtt csv: line " + std::to_string(lineno) +
                                         ": rtt_ns does not equal recv_ns - send_ns");
        } catch (const std::runtime_error&) {
            throw;
        } catch (const std::exception&) {
            throw std::runtime_error("rtt csv: line " + std::to_string(lineno) +
                                     ": malformed numeric field");
        }
        out.push_back(s);
    }
    return out;
}

}  // namespace rtemu
