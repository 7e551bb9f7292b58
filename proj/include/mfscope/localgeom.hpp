#pragma once

// Local geometric descriptors computed from per-node neighborhoods:
// polytope diameters, tangent subspaces by local PCA, the eigenvalue-ratio
// intrinsic dimension estimate, and principal angles between subspaces.

#include "error.hpp"
#include "io.hpp"
#include "kernel.hpp"
#include "nnk.hpp"
#include "parallel.hpp"
#include "point_cloud.hpp"
#include "rng.hpp"
#include "stats.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace mfscope {

using Neighborhoods = std::vector<std::vector<Index>>;

inline Neighborhoods neighborhoods_of(const KnnNeighborhood& knn) { return knn.ids; }

inline Neighborhoods neighborhoods_of(const NnkGraph& graph)
{
    Neighborhoods out(graph.rows.size());
    for (Index i = 0; i < graph.rows.size(); ++i)
        out[i] = graph.rows[i].support;
    return out;
}

// ---------------------------------------------------------------------------
// Polytope diameter

/// Largest pairwise distance in the neighborhood (plus the center when
/// include_center is set).
inline double polytope_diameter(const PointCloud& cloud, Index center, std::span<const Index> neighborhood,
                                bool include_center = true)
{
    if (neighborhood.empty())
        throw Error(ErrorKind::degenerate_neighborhood,
                    "node " + std::to_string(center) + " has an empty neighborhood");
    std::vector<Index> pts(neighborhood.begin(), neighborhood.end());
    if (include_center)
        pts.push_back(center);
    double best = 0.0;
    for (Index a = 0; a < pts.size(); ++a)
        for (Index b = a + 1; b < pts.size(); ++b)
            best = std::max(best, cloud.squared_distance(pts[a], pts[b]));
    return std::sqrt(best);
}

struct DiameterStats {
    std::vector<std::optional<double>> per_node;  // nullopt for empty neighborhoods
    double mean = 0.0;
    double median = 0.0;
    std::vector<double> quantile_levels{0.0, 0.1, 0.25, 0.5, 0.75, 0.9, 1.0};
    std::vector<double> quantiles;
    stats::Histogram histogram;

    std::vector<double> values() const
    {
        std::vector<double> v;
        for (const auto& d : per_node)
            if (d)
                v.push_back(*d);
        return v;
    }
};

inline DiameterStats diameters(const PointCloud& cloud, const Neighborhoods& hoods, bool include_center = true,
                               std::size_t workers = 0, std::size_t bins = 20)
{
    DiameterStats out;
    out.per_node.resize(hoods.size());
    parallel_for(hoods.size(), workers, [&](Index i) {
        if (!hoods[i].empty())
            out.per_node[i] = polytope_diameter(cloud, i, hoods[i], include_center);
    });
    const auto v = out.values();
    const auto sorted = stats::sorted_copy(v);
    out.mean = stats::mean(v);
    out.median = stats::quantile_sorted(sorted, 0.5);
    for (double q : out.quantile_levels)
        out.quantiles.push_back(stats::quantile_sorted(sorted, q));
    out.histogram = stats::histogram(v, bins);
    return out;
}

// ---------------------------------------------------------------------------
// Local PCA

enum class Centering { query, mean };

inline std::string_view to_string(Centering c) noexcept { return c == Centering::query ? "query" : "mean"; }

struct LocalPcaOptions {
    Centering centering = Centering::query;
    double ratio = 0.1;  // significant when lambda_j >= ratio * lambda_max
};

struct SubspaceBasis {
    Index center = 0;
    Eigen::MatrixXd basis;            // D x p, orthonormal columns
    std::vector<double> eigenvalues;  // descending, nonnegative
    Index significant_count = 0;
};

/// Number of eigenvalues with lambda >= ratio * lambda_max (inclusive).
inline Index significant_count(std::span<const double> eigenvalues, double ratio = 0.1)
{
    if (eigenvalues.empty())
        return 0;
    const double lmax = *std::max_element(eigenvalues.begin(), eigenvalues.end());
    if (!(lmax > 0.0))
        return 0;
    const double cut = ratio * lmax;
    return static_cast<Index>(std::count_if(eigenvalues.begin(), eigenvalues.end(),
                                            [cut](double l) { return l >= cut; }));
}

/// Tangent-space estimate at `center` from the scatter of its neighborhood.
inline SubspaceBasis local_subspace(const PointCloud& cloud, Index center, std::span<const Index> neighborhood,
                                    const LocalPcaOptions& opts = {})
{
    if (neighborhood.empty())
        throw Error(ErrorKind::degenerate_neighborhood,
                    "node " + std::to_string(center) + " has an empty neighborhood");
    const auto dim = static_cast<Eigen::Index>(cloud.dim());

    Eigen::RowVectorXd origin = cloud.point(center);
    Eigen::Index rows = static_cast<Eigen::Index>(neighborhood.size());
    if (opts.centering == Centering::mean) {
        origin = cloud.point(center);
        for (Index s : neighborhood)
            origin += cloud.point(s);
        origin /= static_cast<double>(rows + 1);
        ++rows;
    }
    Eigen::MatrixXd diffs(rows, dim);
    for (Eigen::Index r = 0; r < static_cast<Eigen::Index>(neighborhood.size()); ++r)
        diffs.row(r) = cloud.point(neighborhood[static_cast<Index>(r)]) - origin;
    if (opts.centering == Centering::mean)
        diffs.row(rows - 1) = cloud.point(center) - origin;

    SubspaceBasis out;
    out.center = center;
    const double norm = 1.0 / static_cast<double>(rows);

    Eigen::VectorXd evals;
    Eigen::MatrixXd evecs;
    const bool gram = rows < dim;
    if (gram) {
        // Rank is at most |S|; the |S| x |S| Gram matrix has the same spectrum.
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(norm * diffs * diffs.transpose());
        evals = eig.eigenvalues();
        evecs = eig.eigenvectors();
    } else {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(norm * diffs.transpose() * diffs);
        evals = eig.eigenvalues();
        evecs = eig.eigenvectors();
    }

    const Eigen::Index m = evals.size();
    out.eigenvalues.resize(static_cast<std::size_t>(m));
    for (Eigen::Index j = 0; j < m; ++j)
        out.eigenvalues[static_cast<std::size_t>(j)] = std::max(0.0, evals(m - 1 - j));
    const double lmax = out.eigenvalues.front();
    if (!(lmax > 0.0))
        throw Error(ErrorKind::zero_scatter, "node " + std::to_string(center) + " has zero scatter");

    out.significant_count = significant_count(out.eigenvalues, opts.ratio);
    const auto p = static_cast<Eigen::Index>(out.significant_count);
    out.basis.resize(dim, p);
    for (Eigen::Index j = 0; j < p; ++j) {
        if (gram) {
            Eigen::VectorXd u = diffs.transpose() * evecs.col(m - 1 - j);
            out.basis.col(j) = u / u.norm();
        } else {
            out.basis.col(j) = evecs.col(m - 1 - j);
        }
    }
    if (gram && p > 1) {
        // Re-orthonormalize; the Gram back-projection loses orthogonality
        // in proportion to the eigenvalue gap.
        Eigen::HouseholderQR<Eigen::MatrixXd> qr(out.basis);
        Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(dim, p);
        const Eigen::MatrixXd& r = qr.matrixQR();
        for (Eigen::Index j = 0; j < p; ++j)
            if (r(j, j) < 0.0)
                q.col(j) = -q.col(j);
        out.basis = q;
    }
    return out;
}

struct BasisSet {
    std::vector<std::optional<SubspaceBasis>> bases;
    Index zero_scatter = 0;
    Index empty = 0;
};

inline BasisSet compute_bases(const PointCloud& cloud, const Neighborhoods& hoods, const LocalPcaOptions& opts = {},
                              std::size_t workers = 0)
{
    BasisSet out;
    out.bases.resize(hoods.size());
    std::vector<char> status(hoods.size(), 0);
    parallel_for(hoods.size(), workers, [&](Index i) {
        if (hoods[i].empty()) {
            status[i] = 2;
            return;
        }
        try {
            out.bases[i] = local_subspace(cloud, i, hoods[i], opts);
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::zero_scatter)
                throw;
            status[i] = 1;
        }
    });
    for (char s : status) {
        out.zero_scatter += s == 1;
        out.empty += s == 2;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Intrinsic dimension

enum class GraphKind { nnk, knn };

inline std::string_view to_string(GraphKind k) noexcept { return k == GraphKind::nnk ? "nnk" : "knn"; }

inline std::optional<GraphKind> parse_graph_kind(std::string_view s) noexcept
{
    if (s == "nnk")
        return GraphKind::nnk;
    if (s == "knn")
        return GraphKind::knn;
    return std::nullopt;
}

struct GraphConfig {
    Index k = 100;
    KernelConfig kernel{};  // median K-th neighbor distance / 3
    NnkOptions nnk{};
    std::size_t workers = 0;
};

struct IdEstimate {
    double mean_id = 0.0;
    double median_id = 0.0;
    std::vector<std::optional<Index>> per_node;  // nullopt for skipped nodes
    Index skipped = 0;
    bool unreliable = false;  // more than 10% of nodes skipped
    std::optional<double> sigma;

    std::vector<double> values() const
    {
        std::vector<double> v;
        for (const auto& p : per_node)
            if (p)
                v.push_back(static_cast<double>(*p));
        return v;
    }
};

/// Mean and median of the per-node significant counts.
inline IdEstimate estimate_id_from_bases(const BasisSet& set)
{
    IdEstimate est;
    est.per_node.resize(set.bases.size());
    for (Index i = 0; i < set.bases.size(); ++i)
        if (set.bases[i])
            est.per_node[i] = set.bases[i]->significant_count;
    est.skipped = set.zero_scatter + set.empty;
    const auto v = est.values();
    if (v.empty())
        throw Error(ErrorKind::zero_scatter, "every neighborhood is degenerate");
    est.mean_id = stats::mean(v);
    est.median_id = stats::median(v);
    est.unreliable = 10 * est.skipped > set.bases.size();
    return est;
}

struct BuiltGraph {
    KnnNeighborhood knn;
    std::optional<double> sigma;
    std::optional<NnkGraph> nnk;
};

/// KNN graph, bandwidth and (for kind == nnk) the NNK graph, in that order.
inline BuiltGraph build_graph(const PointCloud& cloud, GraphKind kind, const GraphConfig& cfg)
{
    BuiltGraph g;
    g.knn = knn_graph(cloud, cfg.k, cfg.workers);
    if (kind == GraphKind::nnk) {
        g.sigma = resolve_sigma(cfg.kernel, g.knn);
        NnkOptions opts = cfg.nnk;
        opts.workers = cfg.workers;
        g.nnk = nnk_graph(cloud, g.knn, *g.sigma, opts);
    }
    return g;
}

inline IdEstimate estimate_id(const PointCloud& cloud, GraphKind kind, const GraphConfig& cfg = {},
                              const LocalPcaOptions& pca = {})
{
    const BuiltGraph g = build_graph(cloud, kind, cfg);
    const Neighborhoods hoods = kind == GraphKind::nnk ? neighborhoods_of(*g.nnk) : neighborhoods_of(g.knn);
    IdEstimate est = estimate_id_from_bases(compute_bases(cloud, hoods, pca, cfg.workers));
    est.sigma = g.sigma;
    return est;
}

// ---------------------------------------------------------------------------
// Principal angles

inline bool is_orthonormal(const Eigen::MatrixXd& u, double tol = 1e-8)
{
    if (u.cols() == 0)
        return true;
    const Eigen::MatrixXd gram = u.transpose() * u;
    return (gram - Eigen::MatrixXd::Identity(u.cols(), u.cols())).cwiseAbs().maxCoeff() <= tol;
}

/// Principal angles between span(U) and span(V), ascending, min(p, q) of them.
///
/// Cosines come from the singular values of U'V and sines from those of
/// (I - UU')V; each angle is taken from whichever is better conditioned.
inline std::vector<double> principal_angles(const Eigen::MatrixXd& u_in, const Eigen::MatrixXd& v_in)
{
    if (u_in.rows() != v_in.rows())
        throw Error(ErrorKind::invalid_basis, "bases live in different ambient dimensions");
    if (!is_orthonormal(u_in) || !is_orthonormal(v_in))
        throw Error(ErrorKind::invalid_basis, "basis columns are not orthonormal");
    const bool swap = u_in.cols() < v_in.cols();
    const Eigen::MatrixXd& u = swap ? v_in : u_in;  // the larger subspace
    const Eigen::MatrixXd& v = swap ? u_in : v_in;
    const Eigen::Index q = v.cols();
    if (q == 0)
        return {};

    const Eigen::MatrixXd m = u.transpose() * v;
    const Eigen::VectorXd cosines = Eigen::JacobiSVD<Eigen::MatrixXd>(m).singularValues();  // descending
    const Eigen::MatrixXd residual = v - u * m;
    Eigen::VectorXd sines = Eigen::JacobiSVD<Eigen::MatrixXd>(residual).singularValues();
    std::sort(sines.data(), sines.data() + sines.size());  // ascending

    std::vector<double> angles(static_cast<std::size_t>(q));
    for (Eigen::Index k = 0; k < q; ++k) {
        const double c = std::clamp(k < cosines.size() ? cosines(k) : 0.0, 0.0, 1.0);
        const double s = std::clamp(k < sines.size() ? sines(k) : 1.0, 0.0, 1.0);
        angles[static_cast<std::size_t>(k)] = c * c >= 0.5 ? std::asin(s) : std::acos(c);
    }
    std::sort(angles.begin(), angles.end());
    return angles;
}

enum class PairKind { adjacent, random };

inline std::string_view to_string(PairKind k) noexcept { return k == PairKind::adjacent ? "adjacent" : "random"; }

struct AngleSample {
    PairKind pair_kind = PairKind::adjacent;
    Index i = 0;
    Index j = 0;
    std::vector<double> angles;
};

struct AngleDistributions {
    std::vector<AngleSample> adjacent;
    std::vector<AngleSample> random;

    static std::vector<double> flatten(const std::vector<AngleSample>& samples)
    {
        std::vector<double> v;
        for (const auto& s : samples)
            v.insert(v.end(), s.angles.begin(), s.angles.end());
        return v;
    }
};

/// Principal angles for every NNK edge (i, j) and for n_random_pairs seeded
/// uniform draws of distinct node pairs. Nodes without a basis are skipped.
inline AngleDistributions angle_distributions(const NnkGraph& graph,
                                              const std::vector<std::optional<SubspaceBasis>>& bases,
                                              Index n_random_pairs, std::uint64_t seed, std::size_t workers = 0)
{
    AngleDistributions out;
    for (const auto& row : graph.rows)
        for (Index j : row.support)
            if (bases[row.center] && bases[j])
                out.adjacent.push_back({PairKind::adjacent, row.center, j, {}});

    std::vector<Index> valid;
    for (Index i = 0; i < bases.size(); ++i)
        if (bases[i])
            valid.push_back(i);
    if (valid.size() >= 2) {
        Rng rng(seed, Stream::random_pairs);
        for (Index r = 0; r < n_random_pairs; ++r) {
            const Index a = valid[rng.below(valid.size())];
            Index b = a;
            while (b == a)
                b = valid[rng.below(valid.size())];
            out.random.push_back({PairKind::random, a, b, {}});
        }
    }

    auto fill = [&](std::vector<AngleSample>& samples) {
        parallel_for(samples.size(), workers, [&](Index s) {
            samples[s].angles = principal_angles(bases[samples[s].i]->basis, bases[samples[s].j]->basis);
        });
    };
    fill(out.adjacent);
    fill(out.random);
    return out;
}

struct AngleSummary {
    double mean_adjacent = 0.0;
    double mean_random = 0.0;
    double ks_adjacent_vs_random = 0.0;
    Index n_adjacent_pairs = 0;
    Index n_random_pairs = 0;
};

inline AngleSummary summarize(const AngleDistributions& dist)
{
    const auto adj = AngleDistributions::flatten(dist.adjacent);
    const auto rnd = AngleDistributions::flatten(dist.random);
    return {stats::mean(adj), stats::mean(rnd), stats::ks_statistic(adj, rnd), dist.adjacent.size(),
            dist.random.size()};
}

// ---------------------------------------------------------------------------
// Exports

/// CSV `node,value`; nodes without a value are omitted.
template <class T>
void write_node_values(std::ostream& out, const std::vector<std::optional<T>>& values)
{
    out << "node,value\n";
    for (Index i = 0; i < values.size(); ++i) {
        if (!values[i])
            continue;
        out << i << ',';
        if constexpr (std::is_floating_point_v<T>)
            out << format_double(*values[i]);
        else
            out << *values[i];
        out << '\n';
    }
}

inline void write_angle_samples(std::ostream& out, const AngleDistributions& dist)
{
    out << "kind,i,j,angle_index,angle_radians\n";
    for (const auto* samples : {&dist.adjacent, &dist.random})
        for (const auto& s : *samples)
            for (Index k = 0; k < s.angles.size(); ++k)
                out << to_string(s.pair_kind) << ',' << s.i << ',' << s.j << ',' << k << ','
                    << format_double(s.angles[k]) << '\n';
}

} // namespace mfscope
