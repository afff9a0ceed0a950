// SPDX-License-Identifier: MIT
#include "gkwpi/partition.hpp"
#include "random_space.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace gkwpi;

TEST(Partition, LabelsAreCanonical) {
    const Partition p({7, 7, 3, 9, 3});
    const std::vector<std::size_t> expected{0, 0, 1, 2, 1};
    EXPECT_EQ(std::vector<std::size_t>(p.labels().begin(), p.labels().end()), expected);
    EXPECT_EQ(p.block_count(), 3u);
    EXPECT_EQ(p, Partition({1, 1, 0, 5, 0}));
}

TEST(Partition, TrivialAndDiscrete) {
    EXPECT_EQ(Partition::trivial(4).block_count(), 1u);
    EXPECT_TRUE(Partition::discrete(4).separates_atoms());
    EXPECT_TRUE(Partition::discrete(4).refines(Partition::trivial(4)));
    EXPECT_FALSE(Partition::trivial(4).refines(Partition::discrete(4)));
}

TEST(Partition, JoinIsCoarsestCommonRefinement) {
    const Partition a({0, 0, 1, 1});
    const Partition b({0, 1, 0, 1});
    const Partition j = Partition::join(a, b);
    EXPECT_TRUE(j.separates_atoms());
    EXPECT_TRUE(j.refines(a));
    EXPECT_TRUE(j.refines(b));
    EXPECT_EQ(Partition::join(a, a), a);
}

TEST(Partition, ConditionalExpectationBasics) {
    const std::vector<double> prob{0.1, 0.2, 0.3, 0.4};
    const Partition p({0, 0, 1, 1});
    const std::vector<double> c(4, 3.5);
    for (double v : conditional_expectation(c, p, prob)) EXPECT_DOUBLE_EQ(v, 3.5);
    const std::vector<double> x{1, 2, 3, 4};
    EXPECT_EQ(conditional_expectation(x, Partition::discrete(4), prob), x);
    const auto e = conditional_expectation(x, p, prob);
    EXPECT_NEAR(e[0], (0.1 * 1 + 0.2 * 2) / 0.3, 1e-15);
    EXPECT_NEAR(e[3], (0.3 * 3 + 0.4 * 4) / 0.7, 1e-15);
    const auto masses = block_masses(p, prob);
    EXPECT_NEAR(masses[0], 0.3, 1e-15);
    EXPECT_NEAR(masses[1], 0.7, 1e-15);
}

TEST(Partition, ConditionalMatchesBruteForce) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.05, 1.0);
    std::uniform_int_distribution<long long> lab(0, 5);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 1 + rng() % 40;
        std::vector<double> prob(n), x(n);
        std::vector<long long> labels(n);
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            prob[i] = u(rng);
            total += prob[i];
            x[i] = 10.0 * (u(rng) - 0.5);
            labels[i] = lab(rng);
        }
        for (auto& p : prob) p /= total;
        const Partition part(labels);
        const auto lib = conditional_expectation(x, part, prob);
        const auto oracle = testkit::brute_conditional(x, part.labels(), prob);
        for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(lib[i], oracle[i], 1e-12);
    }
}
