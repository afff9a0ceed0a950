// SPDX-License-Identifier: MIT
#include "gkwpi/quadrature.hpp"

#include "gkwpi/errors.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <sstream>

namespace gkwpi {

namespace {

GaussRule build_rule(std::size_t order) {
    // Jacobi matrix of the monic probabilists' Hermite recurrence.
    Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(order, order);
    for (std::size_t k = 1; k < order; ++k) {
        const double b = std::sqrt(static_cast<double>(k));
        jacobi(k, k - 1) = b;
        jacobi(k - 1, k) = b;
    }
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(jacobi);
    GaussRule rule;
    rule.nodes.resize(order);
    rule.weights.resize(order);
    double total = 0.0;
    for (std::size_t i = 0; i < order; ++i) {
        rule.nodes[i] = eig.eigenvalues()(i);
        const double v = eig.eigenvectors()(0, i);
        rule.weights[i] = v * v;
        total += rule.weights[i];
    }
    for (double& w : rule.weights) w /= total;
    // Symmetrize against eigen-solver noise so odd moments vanish exactly.
    for (std::size_t i = 0; i < order / 2; ++i) {
        const std::size_t j = order - 1 - i;
        const double x = 0.5 * (rule.nodes[j] - rule.nodes[i]);
        const double w = 0.5 * (rule.weights[i] + rule.weights[j]);
        rule.nodes[i] = -x;
        rule.nodes[j] = x;
        rule.weights[i] = w;
        rule.weights[j] = w;
    }
    if (order % 2 == 1) rule.nodes[order / 2] = 0.0;
    return rule;
}

}  // namespace

const GaussRule& gauss_hermite(std::size_t order) {
    if (order == 0) throw ValidationError("gauss_hermite: order must be positive");
    static std::mutex mutex;
    static std::map<std::size_t, std::unique_ptr<GaussRule>> cache;
    std::lock_guard lock(mutex);
    auto& slot = cache[order];
    if (!slot) slot = std::make_unique<GaussRule>(build_rule(order));
    return *slot;
}

QuadratureResult normal_expectation(const std::function<double(double)>& f,
                                    const QuadratureOptions& options) {
    auto apply = [&](std::size_t order) {
        const GaussRule& rule = gauss_hermite(order);
        double s = 0.0;
        for (std::size_t i = 0; i < order; ++i) s += rule.weights[i] * f(rule.nodes[i]);
        return s;
    };
    std::size_t order = std::max<std::size_t>(1, options.first_order);
    double previous = apply(order);
    double achieved = std::numeric_limits<double>::infinity();
    while (order * 2 <= options.max_order) {
        order *= 2;
        const double current = apply(order);
        achieved = std::abs(current - previous);
        if (!std::isfinite(current)) break;
        if (achieved <= options.tol * std::max(1.0, std::abs(current))) {
            return {current, order, achieved};
        }
        previous = current;
    }
    std::ostringstream os;
    os << "Gauss-Hermite quadrature did not converge by order " << order
       << " (successive difference " << achieved << ", requested " << options.tol << ")";
    throw QuadratureError(os.str(), achieved);
}

std::vector<double> poisson_pmf(double mean, std::size_t max_count) {
    std::vector<double> p(max_count + 1, 0.0);
    for (std::size_t k = 0; k <= max_count; ++k) {
        const double kk = static_cast<double>(k);
        p[k] = mean == 0.0 ? (k == 0 ? 1.0 : 0.0)
                           : std::exp(-mean + kk * std::log(mean) - std::lgamma(kk + 1.0));
    }
    return p;
}

PoissonSumResult poisson_expectation(const std::function<double(double)>& f, double mean,
                                     double tail) {
    if (!(mean >= 0.0) || !std::isfinite(mean)) {
        throw ValidationError("poisson_expectation: mean must be finite and non-negative");
    }
    if (mean == 0.0) return {f(0.0), 0, 0, 0.0};

    const auto mode = static_cast<std::size_t>(std::floor(mean));
    const double mode_d = static_cast<double>(mode);
    const double p_mode = std::exp(-mean + mode_d * std::log(mean) - std::lgamma(mode_d + 1.0));
    const std::size_t budget = mode + 100000;

    PoissonSumResult out;
    double value = p_mode * f(mode_d);
    double lower_tail = 0.0;
    double upper_tail = 0.0;

    // Downward: p_{k-1} = p_k k / mean.
    std::size_t k = mode;
    double p = p_mode;
    while (k > 0) {
        p *= static_cast<double>(k) / mean;
        --k;
        value += p * f(static_cast<double>(k));
        const double ratio = static_cast<double>(k) / mean;
        lower_tail = k == 0 ? 0.0 : p * ratio / (1.0 - ratio);
        if (lower_tail < 0.5 * tail && p < 0.5 * tail) break;
    }
    out.lowest = k;

    // Upward: p_{k+1} = p_k mean / (k + 1).
    k = mode;
    p = p_mode;
    for (;;) {
        p *= mean / static_cast<double>(k + 1);
        ++k;
        const double term = p * f(static_cast<double>(k));
        value += term;
        const double ratio = mean / static_cast<double>(k + 1);
        if (ratio < 1.0) {
            upper_tail = p * ratio / (1.0 - ratio);
            if (upper_tail < 0.5 * tail && std::abs(term) < tail * std::max(1.0, std::abs(value))) {
                break;
            }
        }
        if (k > budget || !std::isfinite(value)) {
            std::ostringstream os;
            os << "Poisson sum with mean " << mean << " did not settle by count " << k;
            throw QuadratureError(os.str(), upper_tail);
        }
    }
    out.highest = k;
    out.value = value;
    out.tail_mass = lower_tail + upper_tail;
    return out;
}

}  // namespace gkwpi
