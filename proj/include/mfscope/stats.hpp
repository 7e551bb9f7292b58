#pragma once

// Small order-statistics helpers shared by the metric and reporting code.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace mfscope::stats {

inline double mean(std::span<const double> v)
{
    if (v.empty())
        return std::nan("");
    double sum = 0.0;
    for (double x : v)
        sum += x;
    return sum / static_cast<double>(v.size());
}

/// Linear-interpolation quantile of already sorted data (the "type 7" rule).
inline double quantile_sorted(std::span<const double> sorted, double q)
{
    if (sorted.empty())
        return std::nan("");
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

inline std::vector<double> sorted_copy(std::span<const double> v)
{
    std::vector<double> s(v.begin(), v.end());
    std::sort(s.begin(), s.end());
    return s;
}

inline double quantile(std::span<const double> v, double q)
{
    const auto s = sorted_copy(v);
    return quantile_sorted(s, q);
}

inline double median(std::span<const double> v) { return quantile(v, 0.5); }

struct Histogram {
    std::vector<double> edges;      // bins + 1 edges
    std::vector<std::size_t> counts;
};

inline Histogram histogram(std::span<const double> v, std::size_t bins)
{
    Histogram h;
    if (v.empty() || bins == 0)
        return h;
    const auto [lo_it, hi_it] = std::minmax_element(v.begin(), v.end());
    double lo = *lo_it;
    double hi = *hi_it;
    if (hi == lo)
        hi = lo + 1.0;
    h.edges.resize(bins + 1);
    for (std::size_t b = 0; b <= bins; ++b)
        h.edges[b] = lo + (hi - lo) * static_cast<double>(b) / static_cast<double>(bins);
    h.counts.assign(bins, 0);
    for (double x : v) {
        auto b = static_cast<std::size_t>((x - lo) / (hi - lo) * static_cast<double>(bins));
        ++h.counts[std::min(b, bins - 1)];
    }
    return h;
}

/// Two-sample Kolmogorov-Smirnov statistic sup |F_a - F_b|.
inline double ks_statistic(std::span<const double> a, std::span<const double> b)
{
    if (a.empty() || b.empty())
        return std::nan("");
    const auto sa = sorted_copy(a);
    const auto sb = sorted_copy(b);
    const double na = static_cast<double>(sa.size());
    const double nb = static_cast<double>(sb.size());
    std::size_t i = 0;
    std::size_t j = 0;
    double best = 0.0;
    while (i < sa.size() && j < sb.size()) {
        const double x = std::min(sa[i], sb[j]);
        while (i < sa.size() && sa[i] == x)
            ++i;
        while (j < sb.size() && sb[j] == x)
            ++j;
        best = std::max(best, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    return best;
}

/// Wasserstein-1 distance between two empirical distributions on the line,
/// computed as the integral of |F_a - F_b|.
inline double wasserstein1(std::span<const double> a, std::span<const double> b)
{
    if (a.empty() || b.empty())
        return std::nan("");
    const auto sa = sorted_copy(a);
    const auto sb = sorted_copy(b);
    const double na = static_cast<double>(sa.size());
    const double nb = static_cast<double>(sb.size());
    std::size_t i = 0;
    std::size_t j = 0;
    double prev = std::min(sa.front(), sb.front());
    double total = 0.0;
    while (i < sa.size() || j < sb.size()) {
        double x;
        if (j >= sb.size() || (i < sa.size() && sa[i] <= sb[j]))
            x = sa[i];
        else
            x = sb[j];
        total += std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb) * (x - prev);
        while (i < sa.size() && sa[i] == x)
            ++i;
        while (j < sb.size() && sb[j] == x)
            ++j;
        prev = x;
    }
    return total;
}

} // namespace mfscope::stats
