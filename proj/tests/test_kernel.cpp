#include "support.hpp"

#include <gtest/gtest.h>

#include <sstream>

using namespace testing_support;

TEST(Kernel, AnalyticValues)
{
    Eigen::Vector2d a(0, 0), b(1, 0);
    EXPECT_EQ(gaussian_kernel(a, a, 0.7), 1.0);
    EXPECT_NEAR(gaussian_kernel(a, b, 1.0), std::exp(-0.5), 1e-15);
    EXPECT_NEAR(gaussian_kernel(a, b, 1.0 / std::sqrt(2.0)), std::exp(-1.0), 1e-15);
    Eigen::Vector2d c(std::sqrt(2.0) * 0.3, 0);
    EXPECT_NEAR(gaussian_kernel(a, c, 0.3), 0.36787944117144233, 1e-15);
}

TEST(Knn, CollinearExample)
{
    const auto knn = knn_graph(line_cloud({0, 1, 3}), 1);
    EXPECT_EQ(knn.ids[0], std::vector<Index>{1});
    EXPECT_EQ(knn.ids[1], std::vector<Index>{0});
    EXPECT_EQ(knn.ids[2], std::vector<Index>{1});
    EXPECT_DOUBLE_EQ(knn.distances[2][0], 2.0);
}

TEST(Knn, FullNeighborhoodAtNMinusOne)
{
    const PointCloud c = flat(2, 3, 12, 2);
    const auto knn = knn_graph(c, 11);
    for (Index i = 0; i < 12; ++i) {
        auto ids = knn.ids[i];
        std::sort(ids.begin(), ids.end());
        std::vector<Index> expect;
        for (Index j = 0; j < 12; ++j)
            if (j != i)
                expect.push_back(j);
        EXPECT_EQ(ids, expect);
    }
}

TEST(Knn, TieGoesToLowerIndex)
{
    // Query is node 0 at the origin; nodes 2 and 7 are both at distance 1.
    Matrix m = Matrix::Zero(8, 2);
    for (Index i = 1; i < 8; ++i)
        m(static_cast<Eigen::Index>(i), 0) = 5.0 + static_cast<double>(i);
    m(2, 0) = 1.0;
    m(7, 0) = -1.0;
    const auto knn = knn_graph(PointCloud(m, "tie"), 1);
    EXPECT_EQ(knn.ids[0], std::vector<Index>{2});
}

TEST(Knn, InvalidK)
{
    const PointCloud c = line_cloud({0, 1, 3});
    for (Index k : {Index{0}, Index{3}, Index{4}}) {
        try {
            knn_graph(c, k);
            FAIL() << k;
        } catch (const Error& e) {
            EXPECT_EQ(e.kind(), ErrorKind::invalid_k);
        }
    }
}

TEST(Sigma, CollinearMedian)
{
    const PointCloud c = line_cloud({0, 1, 3});
    EXPECT_DOUBLE_EQ(estimate_sigma(c, knn_graph(c, 1), 1), 1.0);
}

TEST(Sigma, IdenticalPointsAreDegenerate)
{
    const PointCloud c = cloud_of({{1, 1}, {1, 1}, {1, 1}, {1, 1}});
    try {
        estimate_sigma(c, knn_graph(c, 2), 1);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::degenerate_bandwidth);
    }
}

TEST(Sigma, GridSpacing)
{
    Matrix m(40, 1);
    for (Eigen::Index i = 0; i < 40; ++i)
        m(i, 0) = 0.25 * static_cast<double>(i);
    const PointCloud c(m, "grid");
    EXPECT_DOUBLE_EQ(estimate_sigma(c, knn_graph(c, 3), 1), 0.25);
}

TEST(Sigma, RankOutOfRange)
{
    const PointCloud c = line_cloud({0, 1, 3, 4});
    const auto knn = knn_graph(c, 2);
    EXPECT_THROW(estimate_sigma(knn, 3), Error);
    EXPECT_THROW(estimate_sigma(knn, 0), Error);
}

TEST(Sigma, RuleParsing)
{
    const KernelConfig f = parse_sigma_rule("fixed:0.5");
    EXPECT_EQ(f.rule, SigmaRule::fixed);
    EXPECT_DOUBLE_EQ(f.sigma, 0.5);
    const KernelConfig k = parse_sigma_rule("knn-median:7/2");
    EXPECT_EQ(k.rule, SigmaRule::knn_median);
    EXPECT_EQ(k.knn_rank, 7u);
    EXPECT_DOUBLE_EQ(k.divisor, 2.0);
    EXPECT_EQ(parse_sigma_rule("knn-median").knn_rank, 0u);
    for (const char* bad : {"fixed:-1", "fixed:", "median", "knn-median:x", "knn-median:3/0"})
        EXPECT_THROW(parse_sigma_rule(bad), Error) << bad;
    EXPECT_EQ(to_string(parse_sigma_rule(to_string(k))), to_string(k));
}

TEST(Sigma, ResolveDefaultRule)
{
    const PointCloud c = flat(2, 3, 300, 9);
    const auto knn = knn_graph(c, 20);
    EXPECT_DOUBLE_EQ(resolve_sigma(KernelConfig{}, knn), estimate_sigma(knn, 20) / 3.0);
    EXPECT_DOUBLE_EQ(resolve_sigma(KernelConfig::fixed(0.3), knn), 0.3);
}

TEST(Submatrices, SingleNeighbor)
{
    const PointCloud c = line_cloud({0, 2});
    const std::vector<Index> s{1};
    const auto b = kernel_submatrices(c, 0, s, 1.0);
    EXPECT_EQ(b.k_ss(0, 0), 1.0);
    EXPECT_NEAR(b.k_si(0), std::exp(-2.0), 1e-15);
}

TEST(Submatrices, CoincidentNeighbors)
{
    const PointCloud c = line_cloud({0, 1, 1});
    const std::vector<Index> s{1, 2};
    EXPECT_EQ(kernel_submatrices(c, 0, s, 1.0).k_ss(0, 1), 1.0);
}

TEST(Submatrices, LineExample)
{
    const PointCloud c = line_cloud({0, 1, 2});
    const std::vector<Index> s{1, 2};
    const auto b = kernel_submatrices(c, 0, s, 1.0);
    EXPECT_EQ(b.k_ss(0, 0), 1.0);
    EXPECT_EQ(b.k_ss(1, 1), 1.0);
    EXPECT_NEAR(b.k_ss(0, 1), std::exp(-0.5), 1e-15);
    EXPECT_NEAR(b.k_ss(1, 0), std::exp(-0.5), 1e-15);
    EXPECT_NEAR(b.k_si(0), std::exp(-0.5), 1e-15);
    EXPECT_NEAR(b.k_si(1), std::exp(-2.0), 1e-15);
}

TEST(Submatrices, PositiveSemidefinite)
{
    const PointCloud c = flat(3, 5, 60, 4);
    std::vector<Index> s;
    for (Index j = 1; j < 60; ++j)
        s.push_back(j);
    const auto b = kernel_submatrices(c, 0, s, 0.2);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(b.k_ss);
    EXPECT_GE(es.eigenvalues().minCoeff(), -1e-10);
}

TEST(Knn, EdgeExport)
{
    std::ostringstream out;
    write_knn_edges(out, knn_graph(line_cloud({0, 1, 3}), 1));
    EXPECT_EQ(out.str(), "src,dst,rank,distance\n0,1,1,1\n1,0,1,1\n2,1,1,2\n");
}
