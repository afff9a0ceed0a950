// SPDX-License-Identifier: MIT
/// @file quadrature.hpp
/// @brief Expectations under the standard normal and Poisson laws.
#pragma once

#include <cstddef>
#include <functional>
#include <vector>

namespace gkwpi {

/// Nodes and weights with sum_i w_i f(x_i) ~ E[f(Z)], Z ~ N(0, 1).
struct GaussRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

/// Probabilists' Gauss-Hermite rule of the given order (Golub-Welsch). Cached
/// per order; safe to call concurrently.
const GaussRule& gauss_hermite(std::size_t order);

struct QuadratureOptions {
    /// Successive orders must agree to tol * max(1, |estimate|).
    double tol = 1e-8;
    std::size_t first_order = 8;
    std::size_t max_order = 256;
};

struct QuadratureResult {
    double value = 0.0;
    std::size_t order = 0;
    double achieved = 0.0;  ///< last difference between successive orders
};

/// E[f(Z)] with doubling orders; throws QuadratureError when max_order is
/// reached without convergence.
QuadratureResult normal_expectation(const std::function<double(double)>& f,
                                    const QuadratureOptions& options = {});

struct PoissonSumResult {
    double value = 0.0;
    std::size_t lowest = 0;   ///< smallest count included
    std::size_t highest = 0;  ///< largest count included
    double tail_mass = 0.0;   ///< probability mass left out
};

/// E[f(N)], N ~ Poisson(mean), summed outward from the mode until the omitted
/// mass is below `tail`. Throws QuadratureError if the sum does not settle.
PoissonSumResult poisson_expectation(const std::function<double(double)>& f, double mean,
                                     double tail = 1e-10);

/// Poisson probabilities p_0..p_max.
std::vector<double> poisson_pmf(double mean, std::size_t max_count);

}  // namespace gkwpi
