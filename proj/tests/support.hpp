#pragma once

#include <mfscope/mfscope.hpp>
#include <mfscope/nnk_oracle.hpp>

#include <cstdint>
#include <filesystem>
#include <initializer_list>
#include <string>
#include <vector>

namespace testing_support {

using namespace mfscope;

inline PointCloud cloud_of(std::initializer_list<std::initializer_list<double>> rows)
{
    const auto n = static_cast<Eigen::Index>(rows.size());
    const auto d = static_cast<Eigen::Index>(rows.begin()->size());
    Matrix m(n, d);
    Eigen::Index i = 0;
    for (const auto& r : rows) {
        Eigen::Index j = 0;
        for (double v : r)
            m(i, j++) = v;
        ++i;
    }
    return PointCloud(std::move(m), "fixture");
}

inline PointCloud line_cloud(std::initializer_list<double> xs)
{
    Matrix m(static_cast<Eigen::Index>(xs.size()), 1);
    Eigen::Index i = 0;
    for (double v : xs)
        m(i++, 0) = v;
    return PointCloud(std::move(m), "fixture");
}

inline PointCloud flat(Index d, Index ambient, Index n, std::uint64_t seed,
                       Embedding embed = Embedding::linear_isometric, ManifoldFamily fam = ManifoldFamily::flat)
{
    ManifoldSpec s;
    s.family = fam;
    s.intrinsic_dim = d;
    s.ambient_dim = ambient;
    s.n_points = n;
    s.embed = embed;
    s.rng_seed = seed;
    return generate(s);
}

inline PointCloud swiss_roll(Index n, std::uint64_t seed)
{
    return flat(2, 3, n, seed, Embedding::linear_isometric, ManifoldFamily::swiss_roll);
}

inline PointCloud transformed(const PointCloud& c, const Eigen::MatrixXd& q, double scale = 1.0)
{
    Matrix m = scale * (c.points() * q.transpose());
    return PointCloud(std::move(m), c.provenance());
}

// Unique scratch directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& name)
{
    auto p = std::filesystem::temp_directory_path() / ("mfscope_test_" + name);
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

} // namespace testing_support
