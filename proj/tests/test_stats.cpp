#include <mfscope/stats.hpp>

#include <gtest/gtest.h>

using namespace mfscope;
using V = std::vector<double>;

TEST(Stats, QuantileType7)
{
    const std::vector<double> v{1, 2, 3, 4};
    EXPECT_DOUBLE_EQ(stats::quantile(v, 0.5), 2.5);
    EXPECT_DOUBLE_EQ(stats::quantile(v, 0.0), 1.0);
    EXPECT_DOUBLE_EQ(stats::quantile(v, 1.0), 4.0);
    EXPECT_DOUBLE_EQ(stats::quantile(v, 0.25), 1.75);
    EXPECT_DOUBLE_EQ(stats::median(V{5, 1, 3}), 3.0);
}

TEST(Stats, KsStatistic)
{
    EXPECT_DOUBLE_EQ(stats::ks_statistic(V{1, 2, 3}, V{1, 2, 3}), 0.0);
    EXPECT_DOUBLE_EQ(stats::ks_statistic(V{1, 2}, V{3, 4}), 1.0);
    EXPECT_DOUBLE_EQ(stats::ks_statistic(V{1, 2, 3, 4}, V{3, 4, 5, 6}), 0.5);
}

TEST(Stats, Wasserstein1)
{
    EXPECT_DOUBLE_EQ(stats::wasserstein1(V{0, 1}, V{0, 1}), 0.0);
    EXPECT_NEAR(stats::wasserstein1(V{0, 1}, V{2, 3}), 2.0, 1e-15);
    EXPECT_NEAR(stats::wasserstein1(V{0}, V{0, 1}), 0.5, 1e-15);
}

TEST(Stats, HistogramCountsEverything)
{
    const auto h = stats::histogram(V{0, 0.5, 1, 1, 2}, 4);
    ASSERT_EQ(h.counts.size(), 4u);
    ASSERT_EQ(h.edges.size(), 5u);
    std::size_t total = 0;
    for (auto c : h.counts)
        total += c;
    EXPECT_EQ(total, 5u);
    EXPECT_EQ(h.counts.back(), 1u);
}
