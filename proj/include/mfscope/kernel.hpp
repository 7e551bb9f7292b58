#pragma once

// Gaussian kernel, bandwidth selection and exact K-nearest-neighbor graphs.

#include "error.hpp"
#include "io.hpp"
#include "parallel.hpp"
#include "point_cloud.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace mfscope {

/// exp(-||a - b||^2 / (2 sigma^2)).
template <class DerivedA, class DerivedB>
double gaussian_kernel(const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b,
                       double sigma)
{
    return std::exp(-(a - b).squaredNorm() / (2.0 * sigma * sigma));
}

inline double gaussian_kernel_from_sq(double squared_distance, double sigma)
{
    return std::exp(-squared_distance / (2.0 * sigma * sigma));
}

enum class SigmaRule { fixed, knn_median };

/// Bandwidth rule. knn_median sets sigma to the median distance to the
/// knn_rank-th neighbor divided by `divisor`; rank 0 means the K-th (last)
/// neighbor of the initial graph.
struct KernelConfig {
    SigmaRule rule = SigmaRule::knn_median;
    double sigma = 1.0;    // used when rule == fixed
    Index knn_rank = 0;
    double divisor = 3.0;

    static KernelConfig fixed(double sigma) { return {SigmaRule::fixed, sigma, 0, 1.0}; }
    static KernelConfig knn_median(Index rank = 0, double divisor = 1.0)
    {
        return {SigmaRule::knn_median, 0.0, rank, divisor};
    }

    Index resolved_rank(Index k) const { return knn_rank == 0 ? k : knn_rank; }
};

/// Parses "fixed:<v>" or "knn-median[:<rank>[/<divisor>]]". A rank of 0 or
/// an omitted rank selects the K-th neighbor; an omitted divisor is 1.
inline KernelConfig parse_sigma_rule(std::string_view text)
{
    auto bad = [&] {
        return Error(ErrorKind::invalid_config, "bad sigma rule '" + std::string(text) +
                                                    "' (expected fixed:<v> or knn-median:<rank>[/<divisor>])");
    };
    auto parse_real = [&](std::string_view t) {
        double v = 0.0;
        auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
        if (t.empty() || ec != std::errc{} || p != t.data() + t.size() || !(v > 0.0) || !std::isfinite(v))
            throw bad();
        return v;
    };
    const auto colon = text.find(':');
    const std::string_view head = text.substr(0, colon);
    const std::string_view tail = colon == std::string_view::npos ? "" : text.substr(colon + 1);
    if (head == "fixed")
        return KernelConfig::fixed(parse_real(tail));
    if (head == "knn-median") {
        if (tail.empty())
            return KernelConfig::knn_median();
        const auto slash = tail.find('/');
        const std::string_view rank_text = tail.substr(0, slash);
        Index r = 0;
        auto [p, ec] = std::from_chars(rank_text.data(), rank_text.data() + rank_text.size(), r);
        if (rank_text.empty() || ec != std::errc{} || p != rank_text.data() + rank_text.size())
            throw bad();
        const double div = slash == std::string_view::npos ? 1.0 : parse_real(tail.substr(slash + 1));
        return KernelConfig::knn_median(r, div);
    }
    throw bad();
}

inline std::string to_string(const KernelConfig& cfg)
{
    if (cfg.rule == SigmaRule::fixed)
        return "fixed:" + format_double(cfg.sigma);
    std::string out = "knn-median:" + std::to_string(cfg.knn_rank);
    if (cfg.divisor != 1.0)
        out += "/" + format_double(cfg.divisor);
    return out;
}

/// Per-node neighbor lists sorted by (distance, index).
struct KnnNeighborhood {
    Index k = 0;
    std::vector<std::vector<Index>> ids;
    std::vector<std::vector<double>> distances;

    Index size() const noexcept { return ids.size(); }
};

namespace detail {

struct Candidate {
    double sq;
    Index id;
    friend bool operator<(const Candidate& a, const Candidate& b)
    {
        return a.sq < b.sq || (a.sq == b.sq && a.id < b.id);
    }
};

// K nearest of node i among all others; exact and tie-broken by index.
inline double squared_distance(const Matrix& x, Index i, Index j)
{
    return (x.row(static_cast<Eigen::Index>(i)) - x.row(static_cast<Eigen::Index>(j))).squaredNorm();
}

// Sorted (squared distance, id) list of the k nearest other rows of x.
inline void knn_row(const Matrix& x, Index i, Index k, std::vector<Candidate>& scratch,
                    std::vector<Candidate>& row)
{
    const auto n = static_cast<Index>(x.rows());
    scratch.clear();
    for (Index j = 0; j < n; ++j)
        if (j != i)
            scratch.push_back({squared_distance(x, i, j), j});
    std::partial_sort(scratch.begin(), scratch.begin() + static_cast<std::ptrdiff_t>(k), scratch.end());
    row.assign(scratch.begin(), scratch.begin() + static_cast<std::ptrdiff_t>(k));
}

} // namespace detail

/// Exact brute-force KNN graph. Output does not depend on `workers`.
inline KnnNeighborhood knn_graph(const PointCloud& cloud, Index k, std::size_t workers = 0)
{
    const Index n = cloud.size();
    if (k < 1 || k >= n)
        throw Error(ErrorKind::invalid_k, "K=" + std::to_string(k) + " must satisfy 1 <= K <= N-1 (N=" +
                                              std::to_string(n) + ")");
    KnnNeighborhood knn;
    knn.k = k;
    knn.ids.resize(n);
    knn.distances.resize(n);
    parallel_for(n, workers, [&](Index i) {
        thread_local std::vector<detail::Candidate> scratch;
        thread_local std::vector<detail::Candidate> row;
        detail::knn_row(cloud.points(), i, k, scratch, row);
        knn.ids[i].resize(k);
        knn.distances[i].resize(k);
        for (Index r = 0; r < k; ++r) {
            knn.ids[i][r] = row[r].id;
            knn.distances[i][r] = std::sqrt(row[r].sq);
        }
    });
    return knn;
}

/// Median over nodes of the distance to the rank-th nearest neighbor.
inline double estimate_sigma(const KnnNeighborhood& knn, Index rank)
{
    if (rank < 1 || rank > knn.k)
        throw Error(ErrorKind::invalid_config, "knn_rank=" + std::to_string(rank) +
                                                   " must lie in [1, K=" + std::to_string(knn.k) + "]");
    std::vector<double> d;
    d.reserve(knn.size());
    for (const auto& row : knn.distances)
        d.push_back(row[rank - 1]);
    if (d.empty())
        throw Error(ErrorKind::degenerate_bandwidth, "empty neighborhood graph");
    std::sort(d.begin(), d.end());
    const std::size_t m = d.size();
    const double median = (m % 2 == 1) ? d[m / 2] : 0.5 * (d[m / 2 - 1] + d[m / 2]);
    if (!(median > 0.0))
        throw Error(ErrorKind::degenerate_bandwidth,
                    "median distance to neighbor rank " + std::to_string(rank) + " is zero");
    return median;
}

inline double estimate_sigma(const PointCloud&, const KnnNeighborhood& knn, Index rank)
{
    return estimate_sigma(knn, rank);
}

/// Resolves the bandwidth for a cloud given its KNN graph.
inline double resolve_sigma(const KernelConfig& cfg, const KnnNeighborhood& knn)
{
    if (cfg.rule == SigmaRule::fixed) {
        if (!(cfg.sigma > 0.0) || !std::isfinite(cfg.sigma))
            throw Error(ErrorKind::invalid_config, "fixed sigma must be positive");
        return cfg.sigma;
    }
    if (!(cfg.divisor > 0.0) || !std::isfinite(cfg.divisor))
        throw Error(ErrorKind::invalid_config, "sigma divisor must be positive");
    return estimate_sigma(knn, std::min(cfg.resolved_rank(knn.k), knn.k)) / cfg.divisor;
}

struct KernelBlock {
    Eigen::MatrixXd k_ss;
    Eigen::VectorXd k_si;
};

/// Kernel matrix among the neighbors S and kernel vector from S to node i.
inline KernelBlock kernel_submatrices(const Matrix& x, Index i, std::span<const Index> s, double sigma)
{
    const auto m = static_cast<Eigen::Index>(s.size());
    KernelBlock block{Eigen::MatrixXd(m, m), Eigen::VectorXd(m)};
    for (Eigen::Index a = 0; a < m; ++a) {
        block.k_ss(a, a) = 1.0;
        block.k_si(a) = gaussian_kernel_from_sq(detail::squared_distance(x, s[a], i), sigma);
        for (Eigen::Index b = a + 1; b < m; ++b) {
            const double v = gaussian_kernel_from_sq(detail::squared_distance(x, s[a], s[b]), sigma);
            block.k_ss(a, b) = v;
            block.k_ss(b, a) = v;
        }
    }
    return block;
}

inline KernelBlock kernel_submatrices(const PointCloud& cloud, Index i, std::span<const Index> s, double sigma)
{
    return kernel_submatrices(cloud.points(), i, s, sigma);
}

/// Edge list `src,dst,rank,distance` sorted by (src, rank); rank is 1-based.
inline void write_knn_edges(std::ostream& out, const KnnNeighborhood& knn)
{
    out << "src,dst,rank,distance\n";
    for (Index i = 0; i < knn.size(); ++i)
        for (Index r = 0; r < knn.ids[i].size(); ++r)
            out << i << ',' << knn.ids[i][r] << ',' << (r + 1) << ','
                << format_double(knn.distances[i][r]) << '\n';
}

} // namespace mfscope
