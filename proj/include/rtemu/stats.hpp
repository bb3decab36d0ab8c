#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace rtemu {

/// Quantile by linear interpolation between order statistics at rank
/// h = (n-1)q. q=0 gives the minimum, q=1 the maximum. Input must be
/// sorted and non-empty.
inline double quantile(const std::vector<std::int64_t>& sorted, double q) {
    if (sorted.empty()) throw std::invalid_argument("quantile: empty sample set");
    if (q < 0.0 || q > 1.0) throw std::invalid_argument("quantile: q outside [0,1]");
    const double h = static_cast<double>(sorted.size() - 1) * q;
    const auto lo = static_cast<std::size_t>(h);
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = h - static_cast<double>(lo);
    return static_cast<double>(sorted[lo]) +
           frac * (static_cast<double>(sorted[hi]) - static_cast<double>(sorted[lo]));
}

/// Five-number summary plus mean and population standard deviation.
/// Whiskers are the true minimum and maximum (no IQR-fence trimming);
/// hinges are the first and third quartiles.
struct BoxplotStats {
    std::size_t n{0};
    std::int64_t min{0};
    double q1{0.0};
    double median{0.0};
    double q3{0.0};
    std::int64_t max{0};
    double mean{0.0};
    double stdev{0.0};

    double iqr() const { return q3 - q1; }
};

inline BoxplotStats boxplot_stats(std::vector<std::int64_t> samples) {
    if (samples.empty()) throw std::invalid_argument("boxplot_stats: empty sample set");
    std::sort(samples.begin(), samples.end());
    BoxplotStats s;
    s.n = samples.size();
    s.min = samples.front();
    s.max = samples.back();
    s.q1 = quantile(samples, 0.25);
    s.median = quantile(samples, 0.5);
    s.q3 = quantile(samples, 0.75);
    double sum = 0.0;
    for (auto v : samples) sum += static_cast<double>(v);
    s.mean = sum / static_cast<double>(s.n);
    double sq = 0.0;
    for (auto v : samples) {
        const double d = static_cast<double>(v) - s.mean;
        sq += d * d;
    }
    s.stdev = std::sqrt(sq / static_cast<double>(s.n));
    return s;
}

}  // namespace rtemu
