// SPDX-License-Identifier: MIT
#include "gkwpi/errors.hpp"
#include "gkwpi/quadrature.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <numeric>
#include <thread>

using namespace gkwpi;

TEST(GaussHermite, WeightsSumToOneAndRuleIsSymmetric) {
    for (std::size_t n : {1u, 2u, 5u, 8u, 16u, 64u, 256u}) {
        const auto& r = gauss_hermite(n);
        ASSERT_EQ(r.nodes.size(), n);
        EXPECT_NEAR(std::accumulate(r.weights.begin(), r.weights.end(), 0.0), 1.0, 1e-13) << n;
        for (std::size_t i = 0; i < n; ++i) {
            EXPECT_NEAR(r.nodes[i], -r.nodes[n - 1 - i], 1e-12 * std::max(1.0, std::abs(r.nodes[i])));
        }
    }
    EXPECT_NEAR(gauss_hermite(2).nodes[1], 1.0, 1e-14);
}

TEST(GaussHermite, ExactForPolynomialsUpToTwiceOrder) {
    const auto& r = gauss_hermite(8);
    // Normal moments E[Z^{2j}] = (2j - 1)!!
    double double_factorial = 1.0;
    for (int p = 0; p <= 15; ++p) {
        double e = 0.0;
        for (std::size_t i = 0; i < r.nodes.size(); ++i) e += r.weights[i] * std::pow(r.nodes[i], p);
        if (p % 2 == 1) {
            EXPECT_NEAR(e, 0.0, 1e-10);
        } else {
            if (p > 0) double_factorial *= (p - 1);
            EXPECT_NEAR(e, double_factorial, 1e-10 * double_factorial) << p;
        }
    }
}

TEST(GaussHermite, ConcurrentFirstUseIsSafe) {
    std::vector<std::thread> pool;
    std::vector<double> sums(8);
    for (std::size_t t = 0; t < sums.size(); ++t) {
        pool.emplace_back([t, &sums] {
            const auto& r = gauss_hermite(37 + t % 2);
            sums[t] = std::accumulate(r.weights.begin(), r.weights.end(), 0.0);
        });
    }
    for (auto& th : pool) th.join();
    for (double s : sums) EXPECT_NEAR(s, 1.0, 1e-13);
}

TEST(NormalExpectation, ClosedForms) {
    EXPECT_NEAR(normal_expectation([](double z) { return std::exp(0.5 * z); }).value,
                std::exp(0.125), 1e-10);
    EXPECT_NEAR(normal_expectation([](double z) { return std::cos(z); }).value, std::exp(-0.5), 1e-10);
    EXPECT_NEAR(normal_expectation([](double z) { return z * z * z * z - z * z; }).value, 2.0, 1e-10);
}

TEST(NormalExpectation, ThrowsWhenItCannotConverge) {
    QuadratureOptions opts;
    opts.max_order = 32;
    opts.tol = 1e-10;
    try {
        normal_expectation([](double z) { return std::cos(40.0 * z); }, opts);
        FAIL() << "expected QuadratureError";
    } catch (const QuadratureError& e) {
        EXPECT_GT(e.achieved_tolerance(), 0.0);
    }
}

TEST(Poisson, PmfAndExpectations) {
    const auto p = poisson_pmf(2.5, 40);
    EXPECT_NEAR(std::accumulate(p.begin(), p.end(), 0.0), 1.0, 1e-14);
    EXPECT_NEAR(p[0], std::exp(-2.5), 1e-16);
    EXPECT_NEAR(p[3], std::exp(-2.5) * 2.5 * 2.5 * 2.5 / 6.0, 1e-15);
    for (double mean : {0.05, 2.5, 60.0, 900.0}) {
        const auto m1 = poisson_expectation([](double k) { return k; }, mean);
        const auto m2 = poisson_expectation([mean](double k) { return (k - mean) * (k - mean); }, mean);
        EXPECT_NEAR(m1.value, mean, 1e-8 * std::max(1.0, mean));
        EXPECT_NEAR(m2.value, mean, 1e-8 * std::max(1.0, mean));
        EXPECT_LT(m1.tail_mass, 1e-10);
        EXPECT_LE(m1.lowest, static_cast<std::size_t>(mean));
        EXPECT_GE(m1.highest, static_cast<std::size_t>(mean));
    }
    EXPECT_NEAR(poisson_expectation([](double k) { return std::exp(-k); }, 3.0).value,
                std::exp(3.0 * (std::exp(-1.0) - 1.0)), 1e-12);
}
