// SPDX-License-Identifier: MIT
#include "gkwpi/gkw.hpp"

#include "gkwpi/errors.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <map>
#include <utility>

namespace gkwpi {

namespace {

void require_claim(const FiniteFilteredSpace& space, std::span<const double> xi, const char* op) {
    if (xi.size() != space.atom_count()) {
        throw ValidationError(std::string(op) + ": claim has " + std::to_string(xi.size()) +
                              " values, space has " + std::to_string(space.atom_count()) + " atoms");
    }
    for (double v : xi) {
        if (!std::isfinite(v)) throw ValidationError(std::string(op) + ": claim is not finite");
    }
}

/// O_t = E[O_T | F_t] for O_T = xi - u0 - (int H dM)_T.
GkwDecomposition assemble(const FiniteFilteredSpace& space, const MartingaleProcess& m,
                          std::span<const double> xi, Info info, std::vector<double> u0,
                          GridProcess integrand) {
    const GridProcess integral = stochastic_integral(space, integrand, m);
    std::vector<double> o_terminal(space.atom_count());
    for (std::size_t i = 0; i < space.atom_count(); ++i) {
        o_terminal[i] = xi[i] - u0[i] - integral(space.step_count(), i);
    }
    GkwDecomposition dec;
    dec.info = info;
    dec.u0 = std::move(u0);
    dec.integrand = std::move(integrand);
    dec.orthogonal = martingale_closure(space, o_terminal, Info::F);
    std::vector<double> residual(space.atom_count());
    for (std::size_t i = 0; i < space.atom_count(); ++i) {
        residual[i] = xi[i] - dec.u0[i] - integral(space.step_count(), i) -
                      dec.orthogonal(space.step_count(), i);
    }
    dec.residual_norm = space.norm(residual);
    return dec;
}

}  // namespace

double claim_scale(const FiniteFilteredSpace& space, std::span<const double> xi) {
    return std::max(1.0, space.norm(xi));
}

std::vector<BasisElement> subspace_basis(const FiniteFilteredSpace& space, const MartingaleProcess& m,
                                         Info info) {
    std::vector<BasisElement> basis;
    const Partition& initial = space.partition(info, 0);
    for (std::size_t b = 0; b < initial.block_count(); ++b) {
        BasisElement e{0, b, std::vector<double>(space.atom_count(), 0.0)};
        for (std::size_t i = 0; i < space.atom_count(); ++i) {
            if (initial.block_of(i) == b) e.values[i] = 1.0;
        }
        basis.push_back(std::move(e));
    }
    for (std::size_t k = 1; k < space.index_count(); ++k) {
        const Partition& prior = space.partition(info, k - 1);
        const auto dm = m.process.increment(k);
        for (std::size_t b = 0; b < prior.block_count(); ++b) {
            BasisElement e{k, b, std::vector<double>(space.atom_count(), 0.0)};
            for (std::size_t i = 0; i < space.atom_count(); ++i) {
                if (prior.block_of(i) == b) e.values[i] = dm[i];
            }
            basis.push_back(std::move(e));
        }
    }
    return basis;
}

GkwDecomposition gkw_projection(const FiniteFilteredSpace& space, const MartingaleProcess& m,
                                std::span<const double> xi, Info info) {
    require_claim(space, xi, "gkw_projection");
    const auto basis = subspace_basis(space, m, info);
    const std::size_t n = space.atom_count();
    const auto prob = space.probabilities();

    Eigen::MatrixXd design(n, basis.size());
    Eigen::VectorXd target(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double w = std::sqrt(prob[i]);
        target(i) = w * xi[i];
        for (std::size_t j = 0; j < basis.size(); ++j) design(i, j) = w * basis[j].values[i];
    }
    // Unit-norm columns: the basis is orthogonal in exact arithmetic, so the scaled
    // system is near-orthonormal and blocks with a small bracket keep full relative
    // accuracy. Zero columns stay zero and get coefficient 0 (minimum norm).
    Eigen::VectorXd scale = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(basis.size()));
    for (Eigen::Index j = 0; j < design.cols(); ++j) {
        const double norm = design.col(j).norm();
        if (norm > 0.0) {
            scale(j) = 1.0 / norm;
            design.col(j) *= scale(j);
        }
    }
    const Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(design);
    const Eigen::VectorXd coef = cod.solve(target).cwiseProduct(scale);

    std::vector<double> u0(n, 0.0);
    std::map<std::pair<std::size_t, std::size_t>, double> by_block;
    for (std::size_t j = 0; j < basis.size(); ++j) {
        if (basis[j].index == 0) {
            for (std::size_t i = 0; i < n; ++i) u0[i] += coef(j) * basis[j].values[i];
        } else {
            by_block[{basis[j].index, basis[j].block}] = coef(j);
        }
    }
    GridProcess integrand(space.index_count(), n, Measurability::Predictable, info);
    for (std::size_t k = 1; k < space.index_count(); ++k) {
        const Partition& prior = space.partition(info, k - 1);
        for (std::size_t i = 0; i < n; ++i) integrand(k, i) = by_block.at({k, prior.block_of(i)});
    }
    return assemble(space, m, xi, info, std::move(u0), std::move(integrand));
}

GkwDecomposition gkw_full_information(const FiniteFilteredSpace& space, const MartingaleProcess& m,
                                      std::span<const double> xi) {
    return gkw_projection(space, m, xi, Info::F);
}

DualProjectionRoute gkw_dual_route(const FiniteFilteredSpace& space, const MartingaleProcess& m,
                                   std::span<const double> xi) {
    require_claim(space, xi, "gkw_via_dual_projection");
    DualProjectionRoute route;
    route.full = gkw_full_information(space, m, xi);

    GridProcess weighted(space.index_count(), space.atom_count(), Measurability::Adapted, Info::F);
    for (std::size_t k = 1; k < space.index_count(); ++k) {
        for (std::size_t i = 0; i < space.atom_count(); ++i) {
            weighted(k, i) = weighted(k - 1, i) +
                             route.full.integrand(k, i) * (m.bracket(k, i) - m.bracket(k - 1, i));
        }
    }
    route.weighted_bracket = make_finite_variation(space, std::move(weighted));
    route.weighted_bracket_dual = dual_projection(space, route.weighted_bracket, Info::H);
    route.bracket_dual = dual_projection(space, make_finite_variation(space, m.bracket), Info::H);

    GridProcess integrand = radon_nikodym(space, route.weighted_bracket_dual, route.bracket_dual);
    std::vector<double> u0 = space.conditional(route.full.u0, Info::H, 0);
    route.partial = assemble(space, m, xi, Info::H, std::move(u0), std::move(integrand));
    return route;
}

GkwDecomposition gkw_via_dual_projection(const FiniteFilteredSpace& space,
                                         const MartingaleProcess& m, std::span<const double> xi) {
    return gkw_dual_route(space, m, xi).partial;
}

OrthogonalityReport orthogonality_check(const FiniteFilteredSpace& space, const MartingaleProcess& m,
                                        std::span<const double> o_terminal, Info info) {
    require_claim(space, o_terminal, "orthogonality_check");
    OrthogonalityReport report;
    for (const auto& b : subspace_basis(space, m, info)) {
        const double v = space.inner(o_terminal, b.values);
        report.values.push_back(v);
        if (std::abs(v) > report.max_violation) {
            report.max_violation = std::abs(v);
            report.worst_index = b.index;
            report.worst_block = b.block;
        }
    }
    return report;
}

double reconstruction_error(const FiniteFilteredSpace& space, const MartingaleProcess& m,
                            std::span<const double> xi, const GkwDecomposition& dec) {
    const GridProcess integral = stochastic_integral(space, dec.integrand, m);
    const std::size_t last = space.step_count();
    double worst = 0.0;
    for (std::size_t i = 0; i < space.atom_count(); ++i) {
        const double r = xi[i] - dec.u0[i] - integral(last, i) - dec.orthogonal(last, i);
        worst = std::max(worst, std::abs(r));
    }
    return worst;
}

GridProcess orthogonal_bracket(const FiniteFilteredSpace& space, const MartingaleProcess& m,
                               const GkwDecomposition& dec) {
    return bracket_of_pair(space, m, dec.orthogonal);
}

namespace {

/// E[1_B d<M>_k] / P(B) per block of the `info` partition at k-1.
std::vector<double> block_charge(const FiniteFilteredSpace& space, const MartingaleProcess& m,
                                 Info info, std::size_t k) {
    return block_means(m.bracket.increment(k), space.partition(info, k - 1), space.probabilities());
}

double charge_threshold(const MartingaleProcess& m, double threshold) {
    return threshold * std::max(1.0, m.bracket.max_abs());
}

}  // namespace

bool is_charged(const FiniteFilteredSpace& space, const MartingaleProcess& m, Info info,
                std::size_t k, std::size_t atom, double threshold) {
    if (k == 0) return false;
    const auto charge = block_charge(space, m, info, k);
    return charge[space.partition(info, k - 1).block_of(atom)] > charge_threshold(m, threshold);
}

double integrand_distance_ae(const FiniteFilteredSpace& space, const MartingaleProcess& m,
                             const GridProcess& a, const GridProcess& b, Info info) {
    const double level = charge_threshold(m, 1e-13);
    double worst = 0.0;
    for (std::size_t k = 1; k < space.index_count(); ++k) {
        const auto charge = block_charge(space, m, info, k);
        const Partition& prior = space.partition(info, k - 1);
        for (std::size_t i = 0; i < space.atom_count(); ++i) {
            if (charge[prior.block_of(i)] > level) worst = std::max(worst, std::abs(a(k, i) - b(k, i)));
        }
    }
    return worst;
}

}  // namespace gkwpi
