#pragma once

// Multiscale analysis by two-closest merging: repeatedly replace the most
// similar pair of points by their midpoint, re-deriving the bandwidth and the
// graphs from the coarsened cloud at every scale.

#include "error.hpp"
#include "kernel.hpp"
#include "localgeom.hpp"
#include "nnk.hpp"
#include "point_cloud.hpp"
#include "rng.hpp"
#include "stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace mfscope {

enum class MergePolicy { knn, nnk };

inline std::string_view to_string(MergePolicy p) noexcept { return p == MergePolicy::knn ? "knn" : "nnk"; }

inline std::optional<MergePolicy> parse_policy(std::string_view s) noexcept
{
    if (s == "knn")
        return MergePolicy::knn;
    if (s == "nnk")
        return MergePolicy::nnk;
    return std::nullopt;
}

/// i and j are indices in the cloud before the merge; new_index after it.
struct MergedPair {
    Index i = 0;
    Index j = 0;
    Index new_index = 0;
};

/// Midpoint merge of rows i and j. The midpoint takes index min(i, j), row
/// max(i, j) is removed and later rows shift down by one.
inline Matrix merge_rows(const Matrix& x, Index i, Index j)
{
    const Index lo = std::min(i, j);
    const Index hi = std::max(i, j);
    const auto n = x.rows();
    Matrix out(n - 1, x.cols());
    const auto h = static_cast<Eigen::Index>(hi);
    out.topRows(h) = x.topRows(h);
    out.bottomRows(n - 1 - h) = x.bottomRows(n - 1 - h);
    out.row(static_cast<Eigen::Index>(lo)) =
        0.5 * (x.row(static_cast<Eigen::Index>(i)) + x.row(static_cast<Eigen::Index>(j)));
    return out;
}

/// A directed, scored similarity graph. Higher score = more similar.
struct SimilarityGraph {
    std::vector<std::vector<Index>> dst;
    std::vector<std::vector<double>> score;
};

/// KNN similarity: score = -squared distance, so the largest score is the
/// largest Gaussian weight without underflow ties.
inline SimilarityGraph knn_similarity(const PointCloud& cloud, const KnnNeighborhood& knn)
{
    SimilarityGraph g;
    g.dst = knn.ids;
    g.score.resize(knn.size());
    for (Index i = 0; i < knn.size(); ++i)
        for (Index j : knn.ids[i])
            g.score[i].push_back(-cloud.squared_distance(i, j));
    return g;
}

inline SimilarityGraph nnk_similarity(const NnkGraph& graph)
{
    SimilarityGraph g;
    for (const auto& row : graph.rows) {
        g.dst.push_back(row.support);
        g.score.push_back(row.weights);
    }
    return g;
}

/// Highest-scoring edge; ties resolve to the lexicographically smallest (i, j).
inline std::optional<std::pair<Index, Index>> best_pair(const SimilarityGraph& g)
{
    std::optional<std::pair<Index, Index>> best;
    double best_score = 0.0;
    for (Index i = 0; i < g.dst.size(); ++i)
        for (Index a = 0; a < g.dst[i].size(); ++a) {
            const double s = g.score[i][a];
            const std::pair<Index, Index> e{i, g.dst[i][a]};
            if (!best || s > best_score || (s == best_score && e < *best)) {
                best = e;
                best_score = s;
            }
        }
    return best;
}

/// One merge of the best pair of the given similarity graph.
inline std::pair<PointCloud, MergedPair> merge_step(const PointCloud& cloud, const SimilarityGraph& similarity)
{
    if (cloud.size() < 2)
        throw Error(ErrorKind::cannot_merge, "need at least two points to merge");
    const auto pair = best_pair(similarity);
    if (!pair)
        throw Error(ErrorKind::cannot_merge, "similarity graph has no edges");
    const auto [i, j] = *pair;
    MergedPair merged{i, j, std::min(i, j)};
    return {PointCloud(merge_rows(cloud.points(), i, j), cloud.provenance()), merged};
}

/// Incrementally maintained merge state for one scale.
///
/// Holds the cloud, its KNN lists and (for the nnk policy) its NNK rows under
/// a fixed bandwidth. After each merge only the rows whose neighbor lists can
/// change are rebuilt, which yields exactly the graphs a full recomputation
/// on the merged cloud would produce.
class MergeEngine {
public:
    MergeEngine(const PointCloud& cloud, MergePolicy policy, Index k, std::optional<double> sigma,
                NnkOptions nnk_opts = {})
        : x_(cloud.points()), policy_(policy), k_(k), sigma_(sigma), nnk_opts_(nnk_opts)
    {
        if (policy_ == MergePolicy::nnk && !sigma_)
            throw Error(ErrorKind::invalid_config, "nnk merging needs a bandwidth");
        rebuild_all();
    }

    Index size() const noexcept { return static_cast<Index>(x_.rows()); }
    const Matrix& points() const noexcept { return x_; }
    Index k() const noexcept { return k_eff_; }

    std::vector<Index> knn_ids(Index i) const
    {
        std::vector<Index> ids;
        for (const auto& c : knn_[i])
            ids.push_back(c.id);
        return ids;
    }

    const NnkNeighborhood& nnk_row(Index i) const { return nnk_[i]; }

    MergedPair step()
    {
        if (size() < 2)
            throw Error(ErrorKind::cannot_merge, "need at least two points to merge");
        std::optional<Index> src;
        for (Index r = 0; r < size(); ++r) {
            if (!best_[r].valid)
                continue;
            if (!src || best_[r].score > best_[*src].score)
                src = r;
        }
        if (!src)
            throw Error(ErrorKind::cannot_merge, "similarity graph has no edges");
        const Index i = *src;
        const Index j = best_[i].dst;
        const Index lo = std::min(i, j);
        const Index hi = std::max(i, j);

        x_ = merge_rows(x_, i, j);
        const Index n = size();
        auto remap = [hi](Index v) { return v > hi ? v - 1 : v; };

        knn_.erase(knn_.begin() + static_cast<std::ptrdiff_t>(hi));
        if (policy_ == MergePolicy::nnk)
            nnk_.erase(nnk_.begin() + static_cast<std::ptrdiff_t>(hi));
        best_.erase(best_.begin() + static_cast<std::ptrdiff_t>(hi));

        if (n - 1 < k_eff_) {
            rebuild_all();
            return {i, j, lo};
        }

        std::vector<char> dirty(n, 0);
        dirty[lo] = 1;
        std::vector<detail::Candidate> scratch;
        for (Index r = 0; r < n; ++r) {
            auto& row = knn_[r];
            if (r == lo) {
                detail::knn_row(x_, r, k_eff_, scratch, row);
                continue;
            }
            const bool touched = std::any_of(row.begin(), row.end(),
                                             [&](const detail::Candidate& c) { return c.id == lo || c.id == hi; });
            if (touched) {
                detail::knn_row(x_, r, k_eff_, scratch, row);
                dirty[r] = 1;
                continue;
            }
            for (auto& c : row)
                c.id = remap(c.id);
            const detail::Candidate cand{detail::squared_distance(x_, r, lo), lo};
            if (cand < row.back()) {
                row.pop_back();
                row.insert(std::upper_bound(row.begin(), row.end(), cand), cand);
                dirty[r] = 1;
            }
        }

        if (policy_ == MergePolicy::nnk) {
            for (Index r = 0; r < n; ++r) {
                if (dirty[r]) {
                    solve_nnk(r);
                } else {
                    nnk_[r].center = r;
                    for (auto& s : nnk_[r].support)
                        s = remap(s);
                }
            }
        }
        for (Index r = 0; r < n; ++r)
            update_best(r);
        return {i, j, lo};
    }

private:
    struct RowBest {
        bool valid = false;
        double score = 0.0;
        Index dst = 0;
    };

    void rebuild_all()
    {
        const Index n = size();
        k_eff_ = n > 0 ? std::min(k_, n - 1) : 0;
        if (k_ < 1)
            throw Error(ErrorKind::invalid_k, "K must be >= 1");
        knn_.assign(k_eff_ > 0 ? n : 0, {});
        nnk_.clear();
        best_.clear();
        if (k_eff_ == 0)
            return;  // a single point: nothing left to merge
        std::vector<detail::Candidate> scratch;
        for (Index r = 0; r < n; ++r)
            detail::knn_row(x_, r, k_eff_, scratch, knn_[r]);
        if (policy_ == MergePolicy::nnk) {
            nnk_.assign(n, {});
            for (Index r = 0; r < n; ++r)
                solve_nnk(r);
        }
        best_.assign(n, {});
        for (Index r = 0; r < n; ++r)
            update_best(r);
    }

    void solve_nnk(Index r) { nnk_[r] = mfscope::nnk_row(x_, r, knn_ids(r), *sigma_, nnk_opts_); }

    void update_best(Index r)
    {
        RowBest b;
        if (policy_ == MergePolicy::knn) {
            // Row lists are sorted by (distance, id): the head is the row's best.
            const auto& head = knn_[r].front();
            b = {true, -head.sq, head.id};
        } else {
            const auto& row = nnk_[r];
            for (Index a = 0; a < row.support.size(); ++a)
                if (!b.valid || row.weights[a] > b.score)
                    b = {true, row.weights[a], row.support[a]};
        }
        best_[r] = b;
    }

    Matrix x_;
    MergePolicy policy_;
    Index k_;
    Index k_eff_ = 0;
    std::optional<double> sigma_;
    NnkOptions nnk_opts_;
    std::vector<std::vector<detail::Candidate>> knn_;
    std::vector<NnkNeighborhood> nnk_;
    std::vector<RowBest> best_;
};

// ---------------------------------------------------------------------------
// Multiscale driver

struct MergeConfig {
    MergePolicy similarity = MergePolicy::nnk;
    Index steps_per_scale = 100;
    Index n_scales = 10;
    GraphConfig graph{};
};

inline void validate(const MergeConfig& cfg, Index n_points)
{
    if (cfg.steps_per_scale < 1)
        throw Error(ErrorKind::invalid_config, "steps_per_scale must be >= 1");
    if (cfg.n_scales < 1)
        throw Error(ErrorKind::invalid_config, "n_scales must be >= 1");
    if (cfg.graph.k < 1)
        throw Error(ErrorKind::invalid_k, "K must be >= 1");
    if (cfg.steps_per_scale * cfg.n_scales >= n_points)
        throw Error(ErrorKind::invalid_config,
                    "steps x scales = " + std::to_string(cfg.steps_per_scale * cfg.n_scales) +
                        " must be below N = " + std::to_string(n_points));
}

struct MetricSelection {
    bool id_knn = true;
    bool id_nnk = true;
    bool diameters = true;
    bool angles = true;
    Index n_random_pairs = 1000;
    std::uint64_t seed = 0;
    LocalPcaOptions pca{};
    bool include_center = true;
};

struct DiameterSummary {
    double mean = 0.0;
    double median = 0.0;
    std::vector<double> quantile_levels;
    std::vector<double> quantiles;
};

struct ScaleRecord {
    Index scale = 0;
    Index n_points = 0;
    std::optional<double> sigma;
    std::optional<double> mean_id_knn;
    std::optional<double> mean_id_nnk;
    std::optional<DiameterSummary> diameter_summary;
    std::vector<double> diameters;  // per-node values behind the summary
    std::optional<AngleSummary> angle_summary;
    std::vector<MergedPair> merged_pairs;  // merges that produced this scale
    std::vector<std::string> warnings;
};

struct ScaleTrace {
    std::vector<ScaleRecord> scales;  // scales[0] is the input cloud
};

/// Computes the selected metrics on one cloud. Failures are recorded as
/// missing values plus a warning, never thrown.
inline void measure_scale(const PointCloud& cloud, const GraphConfig& graph, const MetricSelection& metrics,
                          ScaleRecord& rec)
{
    rec.n_points = cloud.size();
    auto note = [&](const char* what, const std::exception& e) {
        rec.warnings.push_back(std::string(what) + ": " + e.what());
    };

    GraphConfig cfg = graph;
    cfg.k = std::min(graph.k, cloud.size() - 1);
    std::optional<KnnNeighborhood> knn;
    std::optional<NnkGraph> nnk;
    try {
        knn = knn_graph(cloud, cfg.k, cfg.workers);
    } catch (const Error& e) {
        note("knn graph", e);
        return;
    }
    const bool need_nnk = metrics.id_nnk || metrics.diameters || metrics.angles;
    try {
        rec.sigma = resolve_sigma(cfg.kernel, *knn);
        if (need_nnk) {
            NnkOptions opts = cfg.nnk;
            opts.workers = cfg.workers;
            nnk = nnk_graph(cloud, *knn, *rec.sigma, opts);
        }
    } catch (const Error& e) {
        note("nnk graph", e);
    }

    if (metrics.id_knn) {
        try {
            rec.mean_id_knn =
                estimate_id_from_bases(compute_bases(cloud, neighborhoods_of(*knn), metrics.pca, cfg.workers)).mean_id;
        } catch (const Error& e) {
            note("knn id", e);
        }
    }
    if (!nnk)
        return;
    const Neighborhoods hoods = neighborhoods_of(*nnk);
    std::optional<BasisSet> bases;
    if (metrics.id_nnk || metrics.angles) {
        try {
            bases = compute_bases(cloud, hoods, metrics.pca, cfg.workers);
        } catch (const Error& e) {
            note("nnk subspaces", e);
        }
    }
    if (metrics.id_nnk && bases) {
        try {
            rec.mean_id_nnk = estimate_id_from_bases(*bases).mean_id;
        } catch (const Error& e) {
            note("nnk id", e);
        }
    }
    if (metrics.diameters) {
        try {
            const DiameterStats d = diameters(cloud, hoods, metrics.include_center, cfg.workers);
            rec.diameters = d.values();
            if (!rec.diameters.empty())
                rec.diameter_summary = DiameterSummary{d.mean, d.median, d.quantile_levels, d.quantiles};
        } catch (const Error& e) {
            note("diameters", e);
        }
    }
    if (metrics.angles && bases) {
        try {
            const auto dist = angle_distributions(*nnk, bases->bases, metrics.n_random_pairs,
                                                  derive_seed(metrics.seed, Stream::random_pairs, rec.scale),
                                                  cfg.workers);
            const AngleSummary s = summarize(dist);
            if (std::isfinite(s.mean_adjacent) && std::isfinite(s.mean_random))
                rec.angle_summary = s;
            else
                rec.warnings.emplace_back("angles: empty adjacent or random sample");
        } catch (const Error& e) {
            note("angles", e);
        }
    }
}

/// Merges steps_per_scale pairs per scale for n_scales scales, measuring the
/// cloud before the first merge and after every scale.
inline ScaleTrace run_multiscale(const PointCloud& cloud, const MergeConfig& cfg, const MetricSelection& metrics = {},
                                 PointCloud* final_cloud = nullptr)
{
    validate(cfg, cloud.size());
    ScaleTrace trace;
    ScaleRecord first;
    measure_scale(cloud, cfg.graph, metrics, first);
    trace.scales.push_back(std::move(first));

    PointCloud current = cloud;
    for (Index t = 1; t <= cfg.n_scales; ++t) {
        ScaleRecord rec;
        rec.scale = t;
        const Index k = std::min(cfg.graph.k, current.size() - 1);
        std::optional<double> sigma;
        if (cfg.similarity == MergePolicy::nnk) {
            // Bandwidth tracks the current spacing of the (coarsened) cloud.
            sigma = resolve_sigma(cfg.graph.kernel, knn_graph(current, k, cfg.graph.workers));
        }
        NnkOptions opts = cfg.graph.nnk;
        opts.workers = 1;
        MergeEngine engine(current, cfg.similarity, k, sigma, opts);
        for (Index s = 0; s < cfg.steps_per_scale; ++s)
            rec.merged_pairs.push_back(engine.step());
        current = PointCloud(engine.points(), cloud.provenance());
        measure_scale(current, cfg.graph, metrics, rec);
        trace.scales.push_back(std::move(rec));
    }
    if (final_cloud)
        *final_cloud = current;
    return trace;
}

/// W1 distance between two diameter samples after dividing each by its median.
inline double normalized_diameter_shift(const std::vector<double>& before, const std::vector<double>& after)
{
    const double mb = stats::median(before);
    const double ma = stats::median(after);
    if (!(mb > 0.0) || !(ma > 0.0))
        throw Error(ErrorKind::degenerate_neighborhood, "zero median diameter");
    std::vector<double> b(before), a(after);
    for (double& v : b)
        v /= mb;
    for (double& v : a)
        v /= ma;
    return stats::wasserstein1(b, a);
}

struct PolicyComparison {
    ScaleTrace knn_trace;
    ScaleTrace nnk_trace;
    double shift_knn = 0.0;
    double shift_nnk = 0.0;
};

/// Merges floor(fraction * N) points under each policy and compares how far
/// the NNK polytope diameter distribution moves.
inline PolicyComparison compare_merge_policies(const PointCloud& cloud, double fraction, const MergeConfig& base,
                                               MetricSelection metrics = {})
{
    if (!(fraction >= 0.0 && fraction < 1.0))
        throw Error(ErrorKind::invalid_config, "fraction must lie in [0, 1)");
    const auto merges = static_cast<Index>(std::floor(fraction * static_cast<double>(cloud.size())));
    metrics.diameters = true;
    PolicyComparison out;
    if (merges == 0) {
        ScaleRecord rec;
        measure_scale(cloud, base.graph, metrics, rec);
        out.knn_trace.scales.push_back(rec);
        out.nnk_trace.scales.push_back(rec);
        return out;
    }
    for (MergePolicy p : {MergePolicy::knn, MergePolicy::nnk}) {
        MergeConfig cfg = base;
        cfg.similarity = p;
        cfg.n_scales = 1;
        cfg.steps_per_scale = merges;
        ScaleTrace trace = run_multiscale(cloud, cfg, metrics);
        const double shift = normalized_diameter_shift(trace.scales.front().diameters, trace.scales.back().diameters);
        (p == MergePolicy::knn ? out.shift_knn : out.shift_nnk) = shift;
        (p == MergePolicy::knn ? out.knn_trace : out.nnk_trace) = std::move(trace);
    }
    return out;
}

/// CSV `scale,i,j,new_index`.
inline void write_merged_pairs(std::ostream& out, const ScaleTrace& trace)
{
    out << "scale,i,j,new_index\n";
    for (const auto& rec : trace.scales)
        for (const auto& m : rec.merged_pairs)
            out << rec.scale << ',' << m.i << ',' << m.j << ',' << m.new_index << '\n';
}

} // namespace mfscope
