#pragma once

// Synthetic manifolds of known intrinsic dimension.

#include "error.hpp"
#include "point_cloud.hpp"
#include "rng.hpp"

#include <Eigen/QR>

#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>

namespace mfscope {

enum class ManifoldFamily { flat, hypercube, sphere, swiss_roll, helix, two_density_flat };
enum class Embedding { linear_isometric, random_rotation };

inline std::string_view to_string(ManifoldFamily family) noexcept
{
    switch (family) {
    case ManifoldFamily::flat: return "flat";
    case ManifoldFamily::hypercube: return "hypercube";
    case ManifoldFamily::sphere: return "sphere";
    case ManifoldFamily::swiss_roll: return "swiss-roll";
    case ManifoldFamily::helix: return "helix";
    case ManifoldFamily::two_density_flat: return "two-density-flat";
    }
    return "unknown";
}

inline std::optional<ManifoldFamily> parse_family(std::string_view name) noexcept
{
    for (auto f : {ManifoldFamily::flat, ManifoldFamily::hypercube, ManifoldFamily::sphere,
                   ManifoldFamily::swiss_roll, ManifoldFamily::helix,
                   ManifoldFamily::two_density_flat})
        if (to_string(f) == name)
            return f;
    return std::nullopt;
}

inline std::string_view to_string(Embedding embed) noexcept
{
    return embed == Embedding::linear_isometric ? "linear-isometric" : "random-rotation";
}

inline std::optional<Embedding> parse_embedding(std::string_view name) noexcept
{
    if (name == "linear-isometric")
        return Embedding::linear_isometric;
    if (name == "random-rotation")
        return Embedding::random_rotation;
    return std::nullopt;
}

struct ManifoldSpec {
    ManifoldFamily family = ManifoldFamily::flat;
    Index intrinsic_dim = 2;
    Index ambient_dim = 3;
    Index n_points = 1000;
    double noise_sigma = 0.0;
    Embedding embed = Embedding::linear_isometric;
    std::uint64_t rng_seed = 0;
};

/// Throws invalid-spec when the dimensions are inconsistent with the family.
inline void validate(const ManifoldSpec& spec)
{
    auto fail = [](const std::string& msg) { throw Error(ErrorKind::invalid_spec, msg); };
    if (spec.intrinsic_dim < 1)
        fail("intrinsic_dim must be >= 1");
    if (spec.ambient_dim < spec.intrinsic_dim)
        fail("ambient_dim must be >= intrinsic_dim");
    if (spec.n_points < 1)
        fail("n_points must be >= 1");
    if (!(spec.noise_sigma >= 0.0) || !std::isfinite(spec.noise_sigma))
        fail("noise_sigma must be a finite nonnegative number");
    switch (spec.family) {
    case ManifoldFamily::sphere:
        if (spec.ambient_dim < spec.intrinsic_dim + 1)
            fail("sphere of dimension d needs ambient_dim >= d + 1");
        break;
    case ManifoldFamily::swiss_roll:
        if (spec.intrinsic_dim != 2 || spec.ambient_dim < 3)
            fail("swiss-roll requires intrinsic_dim = 2 and ambient_dim >= 3");
        break;
    case ManifoldFamily::helix:
        if (spec.intrinsic_dim != 1 || spec.ambient_dim < 3)
            fail("helix requires intrinsic_dim = 1 and ambient_dim >= 3");
        break;
    default:
        break;
    }
}

/// Haar-distributed rotation: QR of a Gaussian matrix with the signs of R's
/// diagonal folded into Q.
inline Eigen::MatrixXd random_rotation(Index dim, Rng& rng)
{
    const auto n = static_cast<Eigen::Index>(dim);
    Eigen::MatrixXd gauss(n, n);
    for (Eigen::Index r = 0; r < n; ++r)
        for (Eigen::Index c = 0; c < n; ++c)
            gauss(r, c) = rng.normal();
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(gauss);
    Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(n, n);
    const Eigen::MatrixXd& packed = qr.matrixQR();
    for (Eigen::Index c = 0; c < n; ++c)
        if (packed(c, c) < 0.0)
            q.col(c) = -q.col(c);
    return q;
}

namespace detail {

// Manifold coordinates before embedding; row width is the family's natural
// ambient width (<= spec.ambient_dim), remaining columns are zero-padded.
inline Matrix sample_manifold(const ManifoldSpec& spec, Rng& rng)
{
    const auto n = static_cast<Eigen::Index>(spec.n_points);
    const auto d = static_cast<Eigen::Index>(spec.intrinsic_dim);
    Matrix x = Matrix::Zero(n, static_cast<Eigen::Index>(spec.ambient_dim));
    constexpr double pi = std::numbers::pi;

    switch (spec.family) {
    case ManifoldFamily::flat:
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index c = 0; c < d; ++c)
                x(i, c) = rng.uniform();
        break;
    case ManifoldFamily::hypercube:
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index c = 0; c < d; ++c)
                x(i, c) = rng.uniform(-1.0, 1.0);
        break;
    case ManifoldFamily::two_density_flat: {
        // Unit cube split at x0 = 0.5; the lower half holds 5x the density.
        const Eigen::Index n_sparse = n / 6;
        const Eigen::Index n_dense = n - n_sparse;
        for (Eigen::Index i = 0; i < n; ++i) {
            const bool dense = i < n_dense;
            x(i, 0) = dense ? rng.uniform(0.0, 0.5) : rng.uniform(0.5, 1.0);
            for (Eigen::Index c = 1; c < d; ++c)
                x(i, c) = rng.uniform();
        }
        break;
    }
    case ManifoldFamily::sphere:
        for (Eigen::Index i = 0; i < n; ++i) {
            Eigen::VectorXd g(d + 1);
            double norm = 0.0;
            while (norm < 1e-12) {
                for (Eigen::Index c = 0; c <= d; ++c)
                    g(c) = rng.normal();
                norm = g.norm();
            }
            x.row(i).head(d + 1) = (g / norm).transpose();
        }
        break;
    case ManifoldFamily::swiss_roll:
        for (Eigen::Index i = 0; i < n; ++i) {
            const double t = 1.5 * pi * (1.0 + 2.0 * rng.uniform());
            const double h = 21.0 * rng.uniform();
            x(i, 0) = t * std::cos(t);
            x(i, 1) = h;
            x(i, 2) = t * std::sin(t);
        }
        break;
    case ManifoldFamily::helix:
        for (Eigen::Index i = 0; i < n; ++i) {
            const double t = 4.0 * pi * rng.uniform();
            x(i, 0) = std::cos(t);
            x(i, 1) = std::sin(t);
            x(i, 2) = t;
        }
        break;
    }
    return x;
}

} // namespace detail

/// Samples spec.n_points uniformly in the family's parameter domain, embeds
/// them into R^ambient_dim and adds isotropic Gaussian noise.
///
/// Parameter domains: flat = [0,1]^d, hypercube = [-1,1]^d, sphere = unit
/// S^d in R^(d+1), swiss-roll = (t cos t, h, t sin t) with t in [1.5pi, 4.5pi]
/// and h in [0, 21], helix = (cos t, sin t, t) with t in [0, 4pi],
/// two-density-flat = [0,1]^d with x0 < 0.5 sampled five times more densely.
inline PointCloud generate(const ManifoldSpec& spec)
{
    validate(spec);
    Rng sampler(spec.rng_seed, Stream::sample);
    Matrix x = detail::sample_manifold(spec, sampler);

    if (spec.embed == Embedding::random_rotation) {
        Rng rot_rng(spec.rng_seed, Stream::rotation);
        const Eigen::MatrixXd rot = random_rotation(spec.ambient_dim, rot_rng);
        x = (x * rot.transpose()).eval();
    }
    if (spec.noise_sigma > 0.0) {
        Rng noise(spec.rng_seed, Stream::noise);
        for (Eigen::Index i = 0; i < x.rows(); ++i)
            for (Eigen::Index c = 0; c < x.cols(); ++c)
                x(i, c) += spec.noise_sigma * noise.normal();
    }

    std::string provenance = std::string(to_string(spec.family)) +
                             " d=" + std::to_string(spec.intrinsic_dim) +
                             " D=" + std::to_string(spec.ambient_dim) +
                             " N=" + std::to_string(spec.n_points) +
                             " embed=" + std::string(to_string(spec.embed)) +
                             " seed=" + std::to_string(spec.rng_seed);
    return PointCloud(std::move(x), std::move(provenance));
}

} // namespace mfscope
