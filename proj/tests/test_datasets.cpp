#include "support.hpp"

#include <gtest/gtest.h>

#include <cstring>

using namespace testing_support;

TEST(Datasets, FlatSegmentIsCollinearWithZeroPadding)
{
    const PointCloud c = flat(1, 3, 5, 11);
    ASSERT_EQ(c.size(), 5u);
    ASSERT_EQ(c.dim(), 3u);
    for (Index i = 0; i < 5; ++i) {
        EXPECT_EQ(c.point(i)(1), 0.0);
        EXPECT_EQ(c.point(i)(2), 0.0);
    }
}

TEST(Datasets, SphereHasUnitNorm)
{
    const PointCloud c = flat(2, 3, 1000, 3, Embedding::linear_isometric, ManifoldFamily::sphere);
    for (Index i = 0; i < c.size(); ++i)
        EXPECT_NEAR(c.point(i).norm(), 1.0, 1e-12);
}

TEST(Datasets, FlatHasExactlyAmbientMinusIntrinsicConstantColumns)
{
    const PointCloud c = flat(3, 7, 200, 5);
    for (Eigen::Index j = 0; j < 7; ++j) {
        const bool constant = (c.points().col(j).array() == c.points()(0, j)).all();
        EXPECT_EQ(constant, j >= 3) << "column " << j;
    }
}

TEST(Datasets, SameSpecGivesIdenticalBytes)
{
    for (auto fam : {ManifoldFamily::flat, ManifoldFamily::hypercube, ManifoldFamily::sphere, ManifoldFamily::swiss_roll,
                     ManifoldFamily::helix, ManifoldFamily::two_density_flat}) {
        ManifoldSpec s;
        s.family = fam;
        s.intrinsic_dim = fam == ManifoldFamily::helix ? 1 : 2;
        s.ambient_dim = 5;
        s.n_points = 300;
        s.noise_sigma = 0.01;
        s.embed = Embedding::random_rotation;
        s.rng_seed = 99;
        const PointCloud a = generate(s);
        const PointCloud b = generate(s);
        ASSERT_EQ(a.points().size(), b.points().size());
        EXPECT_EQ(std::memcmp(a.points().data(), b.points().data(), sizeof(double) * a.points().size()), 0)
            << to_string(fam);
        s.rng_seed = 100;
        EXPECT_FALSE(generate(s).points() == a.points());
    }
}

TEST(Datasets, RandomRotationPreservesDistances)
{
    ManifoldSpec s;
    s.family = ManifoldFamily::flat;
    s.intrinsic_dim = 2;
    s.ambient_dim = 6;
    s.n_points = 50;
    s.rng_seed = 4;
    const PointCloud a = generate(s);
    s.embed = Embedding::random_rotation;
    const PointCloud b = generate(s);
    for (Index i = 0; i < 50; ++i)
        for (Index j = 0; j < 50; ++j)
            EXPECT_NEAR(a.distance(i, j), b.distance(i, j), 1e-12);
}

TEST(Datasets, TwoDensityFlatHasDenseLeftHalf)
{
    const PointCloud c = flat(2, 3, 1200, 8, Embedding::linear_isometric, ManifoldFamily::two_density_flat);
    Index left = 0;
    for (Index i = 0; i < c.size(); ++i)
        left += c.point(i)(0) < 0.5;
    EXPECT_EQ(left, 1000u);
}

TEST(Datasets, SwissRollParametrization)
{
    const PointCloud c = swiss_roll(500, 2);
    const double pi = std::acos(-1.0);
    for (Index i = 0; i < c.size(); ++i) {
        const auto p = c.point(i);
        const double t = std::hypot(p(0), p(2));
        EXPECT_GE(t, 1.5 * pi - 1e-9);
        EXPECT_LE(t, 4.5 * pi + 1e-9);
        EXPECT_NEAR(p(0), t * std::cos(t), 1e-9);
        EXPECT_NEAR(p(2), t * std::sin(t), 1e-9);
    }
}

TEST(Datasets, InvalidSpecsAreRejected)
{
    ManifoldSpec s;
    s.family = ManifoldFamily::sphere;
    s.intrinsic_dim = 3;
    s.ambient_dim = 3;
    try {
        generate(s);
        FAIL() << "sphere with ambient = d accepted";
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::invalid_spec);
    }
    ManifoldSpec t;
    t.intrinsic_dim = 4;
    t.ambient_dim = 3;
    EXPECT_THROW(generate(t), Error);
    t.intrinsic_dim = 0;
    EXPECT_THROW(generate(t), Error);
    ManifoldSpec u;
    u.n_points = 0;
    EXPECT_THROW(generate(u), Error);
    ManifoldSpec v;
    v.noise_sigma = -1.0;
    EXPECT_THROW(generate(v), Error);
}

TEST(Datasets, NamesRoundTrip)
{
    for (auto fam : {ManifoldFamily::flat, ManifoldFamily::hypercube, ManifoldFamily::sphere, ManifoldFamily::swiss_roll,
                     ManifoldFamily::helix, ManifoldFamily::two_density_flat})
        EXPECT_EQ(parse_family(to_string(fam)), fam);
    EXPECT_FALSE(parse_family("torus"));
    EXPECT_EQ(parse_embedding("random-rotation"), Embedding::random_rotation);
}

TEST(PointCloud, RejectsNonFiniteAndEmpty)
{
    Matrix m(2, 2);
    m << 0, 1, std::nan(""), 2;
    EXPECT_THROW(PointCloud(m, "x"), Error);
    EXPECT_THROW(PointCloud(Matrix(0, 2), "x"), Error);
}
