#pragma once

// Non-negative kernel regression neighborhoods.
//
// Each node i is approximated in kernel feature space by a non-negative
// combination of its initial neighbors S:
//
//     theta = argmin_{theta >= 0}  1/2 theta' K_SS theta - K_Si' theta
//
// The support of theta is the node's NNK neighborhood and theta its
// adjacency row. Neighbors that are geometrically redundant (shadowed by a
// closer neighbor in the same direction) receive zero weight.

#include "error.hpp"
#include "io.hpp"
#include "kernel.hpp"
#include "parallel.hpp"
#include "point_cloud.hpp"
#include "stats.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace mfscope {

struct NnkOptions {
    double regularization = 1e-10;   // added to the K_SS diagonal
    double prune_threshold = 1e-8;   // stored weights must exceed this
    double psd_tolerance = 1e-8;     // most negative eigenvalue accepted
    double kkt_tolerance = 1e-6;
    Index iteration_factor = 10;     // iteration cap = factor * |S|
    std::size_t workers = 0;
};

struct NnkSolution {
    Eigen::VectorXd theta;
    double residual = 0.0;  // 1/2 ||phi_i - Phi_S theta||^2
    Index iterations = 0;
};

class NnkSolverError : public Error {
public:
    NnkSolverError(const std::string& what, Eigen::VectorXd last_iterate)
        : Error(ErrorKind::solver_failure, what), last_iterate_(std::move(last_iterate))
    {
    }

    const Eigen::VectorXd& last_iterate() const noexcept { return last_iterate_; }

private:
    Eigen::VectorXd last_iterate_;
};

/// 1/2 theta' K theta - b' theta.
inline double nnk_objective(const Eigen::MatrixXd& k_ss, const Eigen::VectorXd& k_si,
                            const Eigen::VectorXd& theta)
{
    return 0.5 * theta.dot(k_ss * theta) - k_si.dot(theta);
}

/// Largest violation of the optimality conditions: |gradient| on the support
/// and the negative part of the gradient off it.
inline double kkt_violation(const Eigen::MatrixXd& k_ss, const Eigen::VectorXd& k_si,
                            const Eigen::VectorXd& theta)
{
    const Eigen::VectorXd grad = k_ss * theta - k_si;
    double worst = 0.0;
    for (Eigen::Index a = 0; a < theta.size(); ++a) {
        if (theta(a) < 0.0)
            worst = std::max(worst, -theta(a));
        worst = std::max(worst, theta(a) > 0.0 ? std::abs(grad(a)) : std::max(0.0, -grad(a)));
    }
    return worst;
}

namespace detail {

inline void check_kernel_inputs(const Eigen::MatrixXd& k_ss, const Eigen::VectorXd& k_si,
                                double psd_tolerance)
{
    if (k_ss.rows() != k_ss.cols() || k_ss.rows() != k_si.size())
        throw Error(ErrorKind::invalid_kernel, "K_SS must be square and match K_Si in size");
    if (!k_ss.allFinite() || !k_si.allFinite())
        throw Error(ErrorKind::invalid_kernel, "non-finite kernel values");
    if (k_ss.size() == 0)
        return;
    if (!k_ss.isApprox(k_ss.transpose(), 1e-12))
        throw Error(ErrorKind::invalid_kernel, "K_SS is not symmetric");
    // K + tol I is positive definite exactly when no eigenvalue is below -tol.
    const auto m = k_ss.rows();
    Eigen::LLT<Eigen::MatrixXd> llt(k_ss + psd_tolerance * Eigen::MatrixXd::Identity(m, m));
    if (llt.info() != Eigen::Success)
        throw Error(ErrorKind::invalid_kernel, "K_SS is not positive semidefinite");
}

// Solves G[P,P] s = b[P] for a sorted passive set P.
inline Eigen::VectorXd solve_passive(const Eigen::MatrixXd& g, const Eigen::VectorXd& b,
                                     const std::vector<Eigen::Index>& passive)
{
    const auto p = static_cast<Eigen::Index>(passive.size());
    Eigen::MatrixXd gp(p, p);
    Eigen::VectorXd bp(p);
    for (Eigen::Index r = 0; r < p; ++r) {
        bp(r) = b(passive[r]);
        for (Eigen::Index c = 0; c < p; ++c)
            gp(r, c) = g(passive[r], passive[c]);
    }
    return gp.ldlt().solve(bp);
}

} // namespace detail

/// Active-set (Lawson-Hanson) solution of the NNK quadratic program.
inline NnkSolution nnk_solve(const Eigen::MatrixXd& k_ss, const Eigen::VectorXd& k_si,
                             const NnkOptions& opts = {})
{
    detail::check_kernel_inputs(k_ss, k_si, opts.psd_tolerance);
    const Eigen::Index m = k_si.size();
    NnkSolution sol;
    sol.theta = Eigen::VectorXd::Zero(m);
    if (m == 0) {
        sol.residual = 0.5;
        return sol;
    }

    const Eigen::MatrixXd g = k_ss + opts.regularization * Eigen::MatrixXd::Identity(m, m);
    // Gradient entries below this are rounding noise, not descent directions.
    const double add_tol = 1e-13 * std::max(1.0, k_si.cwiseAbs().maxCoeff());
    const Index cap = std::max<Index>(opts.iteration_factor * static_cast<Index>(m), 1);

    std::vector<Eigen::Index> passive;
    std::vector<char> in_passive(static_cast<std::size_t>(m), 0);
    std::vector<char> blocked(static_cast<std::size_t>(m), 0);
    Index iterations = 0;

    auto fail = [&](const char* why) {
        throw NnkSolverError(std::string(why) + " after " + std::to_string(iterations) +
                                 " iterations",
                             sol.theta);
    };

    while (true) {
        const Eigen::VectorXd dual = k_si - g * sol.theta;
        Eigen::Index entering = -1;
        double best = add_tol;
        for (Eigen::Index j = 0; j < m; ++j)
            if (!in_passive[j] && !blocked[j] && dual(j) > best) {
                best = dual(j);
                entering = j;
            }
        if (entering < 0)
            break;

        passive.insert(std::upper_bound(passive.begin(), passive.end(), entering), entering);
        in_passive[entering] = 1;
        bool first_solve = true;
        bool progressed = false;

        while (!passive.empty()) {
            if (++iterations > cap)
                fail("NNK active-set iteration cap reached");
            const Eigen::VectorXd s = detail::solve_passive(g, k_si, passive);

            if ((s.array() > 0.0).all()) {
                for (Eigen::Index r = 0; r < s.size(); ++r)
                    sol.theta(passive[r]) = s(r);
                progressed = true;
                break;
            }

            const auto entering_pos =
                std::lower_bound(passive.begin(), passive.end(), entering) - passive.begin();
            if (first_solve && s(entering_pos) <= 0.0) {
                // The entering gradient was numerically flat; the variable
                // cannot leave zero. Skip it until the iterate changes.
                passive.erase(passive.begin() + entering_pos);
                in_passive[entering] = 0;
                blocked[entering] = 1;
                break;
            }
            first_solve = false;

            // Step toward s until the first passive weight hits zero.
            double alpha = 1.0;
            Eigen::Index leaving = -1;
            for (Eigen::Index r = 0; r < s.size(); ++r) {
                if (s(r) <= 0.0) {
                    const double t = sol.theta(passive[r]);
                    const double ratio = t / (t - s(r));
                    if (leaving < 0 || ratio < alpha) {
                        alpha = ratio;
                        leaving = r;
                    }
                }
            }
            for (Eigen::Index r = 0; r < s.size(); ++r) {
                double& t = sol.theta(passive[r]);
                t += alpha * (s(r) - t);
            }
            sol.theta(passive[leaving]) = 0.0;
            progressed = true;

            std::vector<Eigen::Index> kept;
            for (const Eigen::Index j : passive) {
                if (sol.theta(j) <= 0.0) {
                    sol.theta(j) = 0.0;
                    in_passive[j] = 0;
                } else {
                    kept.push_back(j);
                }
            }
            passive = std::move(kept);
        }
        if (progressed)
            std::fill(blocked.begin(), blocked.end(), 0);
    }

    sol.iterations = iterations;
    sol.residual = std::max(0.0, nnk_objective(k_ss, k_si, sol.theta) + 0.5);
    return sol;
}

/// One node's NNK neighborhood; support is in ascending node order.
struct NnkNeighborhood {
    Index center = 0;
    std::vector<Index> support;
    std::vector<double> weights;
    double residual = 0.0;
};

struct NnkGraph {
    Index n_nodes = 0;
    double sigma = 0.0;
    Index initial_k = 0;
    std::vector<NnkNeighborhood> rows;

    Index edge_count() const
    {
        Index e = 0;
        for (const auto& r : rows)
            e += r.support.size();
        return e;
    }
};

/// Solves and prunes the NNK row of node i given its initial neighbor set.
inline NnkNeighborhood nnk_row(const Matrix& x, Index i, std::span<const Index> initial, double sigma,
                               const NnkOptions& opts = {})
{
    const KernelBlock block = kernel_submatrices(x, i, initial, sigma);
    NnkSolution sol;
    try {
        sol = nnk_solve(block.k_ss, block.k_si, opts);
    } catch (const NnkSolverError& e) {
        throw NnkSolverError("node " + std::to_string(i) + ": " + e.what(), e.last_iterate());
    } catch (const Error& e) {
        throw Error(e.kind(), "node " + std::to_string(i) + ": " + e.what());
    }

    NnkNeighborhood row;
    row.center = i;
    row.residual = sol.residual;
    std::vector<std::pair<Index, double>> kept;
    for (Index a = 0; a < initial.size(); ++a)
        if (sol.theta(static_cast<Eigen::Index>(a)) > opts.prune_threshold)
            kept.emplace_back(initial[a], sol.theta(static_cast<Eigen::Index>(a)));
    std::sort(kept.begin(), kept.end());
    for (const auto& [id, w] : kept) {
        row.support.push_back(id);
        row.weights.push_back(w);
    }
    return row;
}

/// Builds the directed NNK graph from a KNN initialization.
inline NnkGraph nnk_graph(const PointCloud& cloud, const KnnNeighborhood& knn, double sigma,
                          const NnkOptions& opts = {})
{
    if (knn.size() != cloud.size())
        throw Error(ErrorKind::invalid_config, "KNN graph does not match the point cloud");
    if (!(sigma > 0.0) || !std::isfinite(sigma))
        throw Error(ErrorKind::invalid_config, "sigma must be positive");
    NnkGraph graph;
    graph.n_nodes = cloud.size();
    graph.sigma = sigma;
    graph.initial_k = knn.k;
    graph.rows.resize(cloud.size());
    parallel_for(cloud.size(), opts.workers, [&](Index i) {
        graph.rows[i] = nnk_row(cloud.points(), i, knn.ids[i], sigma, opts);
    });
    return graph;
}

/// Edge list `src,dst,weight` sorted by (src, dst).
inline void write_nnk_edges(std::ostream& out, const NnkGraph& graph)
{
    out << "src,dst,weight\n";
    for (const auto& row : graph.rows)
        for (Index a = 0; a < row.support.size(); ++a)
            out << row.center << ',' << row.support[a] << ',' << format_double(row.weights[a]) << '\n';
}

struct NnkSummary {
    Index n_nodes = 0;
    double sigma = 0.0;
    Index initial_k = 0;
    double mean_support_size = 0.0;
    // residual quantiles at 0, 0.25, 0.5, 0.75, 1
    std::vector<double> residual_quantiles;
};

inline NnkSummary summarize(const NnkGraph& graph)
{
    NnkSummary s;
    s.n_nodes = graph.n_nodes;
    s.sigma = graph.sigma;
    s.initial_k = graph.initial_k;
    std::vector<double> residuals;
    double support = 0.0;
    for (const auto& row : graph.rows) {
        support += static_cast<double>(row.support.size());
        residuals.push_back(row.residual);
    }
    s.mean_support_size = graph.rows.empty() ? 0.0 : support / static_cast<double>(graph.rows.size());
    std::sort(residuals.begin(), residuals.end());
    for (double q : {0.0, 0.25, 0.5, 0.75, 1.0})
        s.residual_quantiles.push_back(stats::quantile_sorted(residuals, q));
    return s;
}

} // namespace mfscope
