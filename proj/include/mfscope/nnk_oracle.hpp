#pragma once

// Exhaustive reference solver for small NNK problems. Used to certify the
// active-set solver; it shares no code path with it beyond Eigen's LDLT.

#include "error.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <limits>
#include <string>

namespace mfscope {

inline constexpr Eigen::Index nnk_oracle_max_dim = 12;

/// Enumerates every support set A, solves the regularized normal equations on
/// A, and returns the minimum-objective candidate with theta_A > 0 and a
/// nonnegative gradient off A. If rounding rejects every candidate on the
/// gradient test, the minimum-objective nonnegative candidate is returned.
inline Eigen::VectorXd nnk_brute_force_oracle(const Eigen::MatrixXd& k_ss, const Eigen::VectorXd& k_si,
                                              double regularization = 1e-10,
                                              double gradient_tolerance = 1e-9)
{
    const Eigen::Index m = k_si.size();
    if (m > nnk_oracle_max_dim)
        throw Error(ErrorKind::invalid_config, "oracle refuses dimension " + std::to_string(m) +
                                                   " (> " + std::to_string(nnk_oracle_max_dim) + ")");
    const Eigen::MatrixXd g = k_ss + regularization * Eigen::MatrixXd::Identity(m, m);

    Eigen::VectorXd best = Eigen::VectorXd::Zero(m);
    double best_obj = 0.0;  // the empty support is always feasible when k_si >= 0
    bool best_kkt = (k_si.array() <= gradient_tolerance).all();
    Eigen::VectorXd fallback = best;
    double fallback_obj = 0.0;

    for (std::uint32_t mask = 1; mask < (std::uint32_t{1} << m); ++mask) {
        Eigen::Index p = 0;
        Eigen::Index idx[nnk_oracle_max_dim];
        for (Eigen::Index j = 0; j < m; ++j)
            if (mask & (std::uint32_t{1} << j))
                idx[p++] = j;
        Eigen::MatrixXd gp(p, p);
        Eigen::VectorXd bp(p);
        for (Eigen::Index r = 0; r < p; ++r) {
            bp(r) = k_si(idx[r]);
            for (Eigen::Index c = 0; c < p; ++c)
                gp(r, c) = g(idx[r], idx[c]);
        }
        const Eigen::VectorXd s = gp.ldlt().solve(bp);
        if (!(s.array() > 0.0).all())
            continue;
        Eigen::VectorXd theta = Eigen::VectorXd::Zero(m);
        for (Eigen::Index r = 0; r < p; ++r)
            theta(idx[r]) = s(r);
        const double obj = 0.5 * theta.dot(k_ss * theta) - k_si.dot(theta);

        if (obj < fallback_obj) {
            fallback_obj = obj;
            fallback = theta;
        }
        const Eigen::VectorXd grad = g * theta - k_si;
        bool kkt = true;
        for (Eigen::Index j = 0; j < m; ++j)
            if (!(mask & (std::uint32_t{1} << j)) && grad(j) < -gradient_tolerance)
                kkt = false;
        if (kkt && (!best_kkt || obj < best_obj)) {
            best_kkt = true;
            best_obj = obj;
            best = theta;
        }
    }
    return best_kkt ? best : fallback;
}

} // namespace mfscope
