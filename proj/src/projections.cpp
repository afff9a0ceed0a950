// SPDX-License-Identifier: MIT
#include "gkwpi/projections.hpp"

#include "gkwpi/errors.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <utility>

namespace gkwpi {

FiniteVariationProcess make_finite_variation(const FiniteFilteredSpace& space, GridProcess g) {
    g = g.retagged(Measurability::Adapted, Info::F);
    require_measurable(space, g, "make_finite_variation");
    for (std::size_t i = 0; i < g.atom_count(); ++i) {
        if (g(0, i) != 0.0) {
            std::ostringstream os;
            os << "make_finite_variation: process does not start at 0 on atom " << i;
            throw ValidationError(os.str());
        }
    }
    std::vector<double> variation(g.atom_count(), 0.0);
    for (std::size_t k = 1; k < g.index_count(); ++k) {
        for (std::size_t i = 0; i < g.atom_count(); ++i) variation[i] += std::abs(g(k, i) - g(k - 1, i));
    }
    const double expected = space.expectation(variation);
    return FiniteVariationProcess{std::move(g), std::move(variation), expected};
}

DoobMeyerDecomposition doob_meyer(const FiniteFilteredSpace& space, const GridProcess& x, Info info,
                                  double tol) {
    const GridProcess input = x.retagged(Measurability::Adapted, info);
    require_measurable(space, input, "doob_meyer");
    const double slack = tol * std::max(1.0, input.max_abs());

    GridProcess compensator(space.index_count(), space.atom_count(), Measurability::Predictable, info);
    for (std::size_t k = 1; k < space.index_count(); ++k) {
        const Partition& prior = space.partition(info, k - 1);
        const auto inc = block_means(input.increment(k), prior, space.probabilities());
        for (std::size_t b = 0; b < inc.size(); ++b) {
            if (inc[b] < -slack) {
                std::ostringstream os;
                os << "doob_meyer: input is not a submartingale; conditional increment " << inc[b]
                   << " at index " << k << " on block " << b << " of " << to_string(info) << "_"
                   << k - 1;
                throw NotSubmartingaleError(os.str());
            }
        }
        for (std::size_t i = 0; i < space.atom_count(); ++i) {
            compensator(k, i) = compensator(k - 1, i) + inc[prior.block_of(i)];
        }
    }
    GridProcess martingale = input - compensator;
    martingale = martingale.retagged(Measurability::Adapted, info);
    return DoobMeyerDecomposition{std::move(martingale), std::move(compensator)};
}

namespace {

/// Cumulative positive (sign = +1) or negative (sign = -1) variation of g.
GridProcess jordan_part(const GridProcess& g, double sign) {
    GridProcess out(g.index_count(), g.atom_count(), Measurability::Adapted, Info::F);
    for (std::size_t k = 1; k < g.index_count(); ++k) {
        for (std::size_t i = 0; i < g.atom_count(); ++i) {
            const double d = sign * (g(k, i) - g(k - 1, i));
            out(k, i) = out(k - 1, i) + std::max(d, 0.0);
        }
    }
    return out;
}

GridProcess project_increasing(const FiniteFilteredSpace& space, const GridProcess& increasing,
                               Info info) {
    const GridProcess optional = optional_projection(space, increasing, info);
    return doob_meyer(space, optional, info).compensator;
}

}  // namespace

DualProjection dual_projection(const FiniteFilteredSpace& space, const FiniteVariationProcess& g,
                               Info info) {
    const GridProcess up = project_increasing(space, jordan_part(g.process, 1.0), info);
    const GridProcess down = project_increasing(space, jordan_part(g.process, -1.0), info);
    GridProcess out = up - down;
    return DualProjection{out.retagged(Measurability::Predictable, info)};
}

double dual_projection_defect(const FiniteFilteredSpace& space, const GridProcess& g,
                              const GridProcess& g_dual, Info info) {
    const auto prob = space.probabilities();
    double worst = 0.0;
    for (std::size_t k = 1; k < space.index_count(); ++k) {
        const Partition& prior = space.partition(info, k - 1);
        std::vector<double> lhs(prior.block_count(), 0.0);
        std::vector<double> rhs(prior.block_count(), 0.0);
        for (std::size_t i = 0; i < space.atom_count(); ++i) {
            const std::size_t b = prior.block_of(i);
            lhs[b] += prob[i] * (g_dual(k, i) - g_dual(k - 1, i));
            rhs[b] += prob[i] * (g(k, i) - g(k - 1, i));
        }
        for (std::size_t b = 0; b < lhs.size(); ++b) worst = std::max(worst, std::abs(lhs[b] - rhs[b]));
    }
    return worst;
}

WeightedProjectionReport weighted_projection_identity_check(const FiniteFilteredSpace& space,
                                                            const GridProcess& x,
                                                            const GridProcess& g) {
    const GridProcess gh = g.retagged(Measurability::Predictable, Info::H);
    require_measurable(space, gh, "weighted_projection_identity_check");
    const double slack = 1e-12 * std::max(1.0, gh.max_abs());
    for (std::size_t k = 1; k < gh.index_count(); ++k) {
        for (std::size_t i = 0; i < gh.atom_count(); ++i) {
            if (gh(k, i) - gh(k - 1, i) < -slack) {
                std::ostringstream os;
                os << "weighted_projection_identity_check: integrator decreases at index " << k
                   << " on atom " << i;
                throw ValidationError(os.str());
            }
        }
    }

    const GridProcess px = predictable_projection(space, x, Info::H);
    GridProcess weighted(space.index_count(), space.atom_count(), Measurability::Adapted, Info::F);
    GridProcess rhs(space.index_count(), space.atom_count(), Measurability::Predictable, Info::H);
    for (std::size_t k = 1; k < space.index_count(); ++k) {
        for (std::size_t i = 0; i < space.atom_count(); ++i) {
            const double dg = gh(k, i) - gh(k - 1, i);
            weighted(k, i) = weighted(k - 1, i) + x(k, i) * dg;
            rhs(k, i) = rhs(k - 1, i) + px(k, i) * dg;
        }
    }
    const auto fv = make_finite_variation(space, std::move(weighted));
    GridProcess lhs = dual_projection(space, fv, Info::H).process;
    const double defect = max_abs_difference(lhs, rhs);
    return WeightedProjectionReport{std::move(lhs), std::move(rhs), defect};
}

GridProcess radon_nikodym(const FiniteFilteredSpace& space, const DualProjection& numerator,
                          const DualProjection& denominator, RadonNikodymOptions options) {
    const GridProcess& num = numerator.process;
    const GridProcess& den = denominator.process;
    const Info info = den.filtration();
    require_measurable(space, num.retagged(Measurability::Predictable, info), "radon_nikodym");
    require_measurable(space, den.retagged(Measurability::Predictable, info), "radon_nikodym");

    const double null_level = options.null_tolerance * std::max(1.0, den.max_abs());
    const double charge_level = options.continuity_tolerance * std::max(1.0, num.max_abs());

    GridProcess density(space.index_count(), space.atom_count(), Measurability::Predictable, info);
    for (std::size_t k = 1; k < space.index_count(); ++k) {
        const Partition& prior = space.partition(info, k - 1);
        for (std::size_t i = 0; i < space.atom_count(); ++i) {
            const double dn = num(k, i) - num(k - 1, i);
            const double dd = den(k, i) - den(k - 1, i);
            if (dd < -null_level) {
                std::ostringstream os;
                os << "radon_nikodym: denominator decreases at index " << k << " on block "
                   << prior.block_of(i);
                throw ValidationError(os.str());
            }
            if (dd <= null_level) {
                if (std::abs(dn) > charge_level) {
                    std::ostringstream os;
                    os << "radon_nikodym: absolute continuity violated at index " << k
                       << " on block " << prior.block_of(i) << " of " << to_string(info) << "_"
                       << k - 1 << " (numerator increment " << dn
                       << ", denominator increment " << dd << ")";
                    throw AbsoluteContinuityError(os.str());
                }
                density(k, i) = 0.0;
            } else {
                density(k, i) = dn / dd;
            }
        }
    }
    return density;
}

}  // namespace gkwpi
