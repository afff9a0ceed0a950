// SPDX-License-Identifier: MIT
#include "gkwpi/gkw.hpp"
#include "random_space.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

using namespace gkwpi;

namespace {

FiniteFilteredSpace full_info(const FiniteFilteredSpace& s) {
    return s.with_observed(s.filtration(Info::F));
}

double max_gap(std::span<const double> a, std::span<const double> b) {
    double out = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) out = std::max(out, std::abs(a[i] - b[i]));
    return out;
}

}  // namespace

TEST(Basis, SizesOnWalk) {
    const auto w = testkit::delayed_walk();
    EXPECT_EQ(subspace_basis(w.space, w.m).size(), 3u);
    EXPECT_EQ(subspace_basis(full_info(w.space), w.m).size(), 4u);
    FiniteFilteredSpace one({0.5, 0.5}, {0.0, 1.0}, {Partition::trivial(2), Partition::discrete(2)},
                            {Partition::trivial(2), Partition::trivial(2)});
    const auto m = make_martingale(
        one, GridProcess::from_rows({{0, 0}, {1, -1}}, Measurability::Adapted, Info::F));
    const auto basis = subspace_basis(one, m);
    ASSERT_EQ(basis.size(), 2u);
    EXPECT_EQ(basis[0].values, (std::vector<double>{1, 1}));
    EXPECT_EQ(basis[1].values, (std::vector<double>{1, -1}));
}

TEST(Gkw, DelayedWalkSquare) {
    const auto w = testkit::delayed_walk();
    for (const auto& dec : {gkw_projection(w.space, w.m, w.xi), gkw_via_dual_projection(w.space, w.m, w.xi)}) {
        for (std::size_t i = 0; i < 4; ++i) {
            EXPECT_NEAR(dec.u0[i], 2.0, 1e-12);
            EXPECT_NEAR(dec.integrand(1, i), 0.0, 1e-12);
            EXPECT_NEAR(dec.integrand(2, i), 0.0, 1e-12);
            EXPECT_NEAR(dec.orthogonal(2, i), w.xi[i] - 2.0, 1e-12);
        }
    }
}

TEST(Gkw, FullInformationSquare) {
    const auto w = testkit::delayed_walk();
    const auto dec = gkw_full_information(w.space, w.m, w.xi);
    for (std::size_t i = 0; i < 4; ++i) {
        EXPECT_NEAR(dec.u0[i], 2.0, 1e-12);
        for (std::size_t k = 1; k < 3; ++k) {
            EXPECT_NEAR(dec.integrand(k, i), 2.0 * w.m.process(k - 1, i), 1e-12);
        }
    }
    EXPECT_LT(dec.orthogonal.max_abs(), 1e-12);
}

TEST(Gkw, ConstantAndIntegratorClaims) {
    const auto w = testkit::delayed_walk();
    const std::vector<double> c(4, 3.25);
    const auto dc = gkw_projection(w.space, w.m, c);
    for (double v : dc.u0) EXPECT_NEAR(v, 3.25, 1e-12);
    EXPECT_LT(dc.integrand.max_abs(), 1e-12);
    EXPECT_LT(dc.orthogonal.max_abs(), 1e-12);

    const std::vector<double> mt(w.m.process.terminal().begin(), w.m.process.terminal().end());
    const auto dm = gkw_via_dual_projection(w.space, w.m, mt);
    for (double v : dm.u0) EXPECT_NEAR(v, 0.0, 1e-12);
    for (std::size_t k = 1; k < 3; ++k) {
        for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(dm.integrand(k, i), 1.0, 1e-12);
    }
    EXPECT_LT(dm.orthogonal.max_abs(), 1e-12);
}

TEST(Gkw, IndicatorTimesSecondStep) {
    const auto w = testkit::delayed_walk();
    std::vector<double> xi(4);
    for (std::size_t i = 0; i < 4; ++i) {
        xi[i] = (w.m.process(2, i) - w.m.process(1, i)) * (w.m.process(1, i) > 0 ? 1.0 : 0.0);
    }
    const auto dec = gkw_full_information(w.space, w.m, xi);
    for (std::size_t i = 0; i < 4; ++i) {
        EXPECT_NEAR(dec.integrand(1, i), 0.0, 1e-12);
        EXPECT_NEAR(dec.integrand(2, i), w.m.process(1, i) > 0 ? 1.0 : 0.0, 1e-12);
    }
}

TEST(Gkw, OrthogonalityCheckExamples) {
    const auto w = testkit::delayed_walk();
    const std::vector<double> mt(w.m.process.terminal().begin(), w.m.process.terminal().end());
    // Basis {1, dM_1, dM_2}: E[M_2] = 0, E[M_2 dM_1] = E[M_2 dM_2] = 1.
    const auto r = orthogonality_check(w.space, w.m, mt);
    ASSERT_EQ(r.values.size(), 3u);
    EXPECT_NEAR(r.values[0], 0.0, 1e-12);
    EXPECT_NEAR(r.values[1], 1.0, 1e-12);
    EXPECT_NEAR(r.values[2], 1.0, 1e-12);
    EXPECT_NEAR(r.max_violation, 1.0, 1e-12);
    EXPECT_EQ(orthogonality_check(w.space, w.m, std::vector<double>(4, 0.0)).max_violation, 0.0);
}

TEST(Gkw, DelayedWalkBracketOfOrthogonalIsNotZero) {
    // Only the weak condition holds under partial information.
    const auto w = testkit::delayed_walk();
    const auto dec = gkw_projection(w.space, w.m, w.xi);
    EXPECT_GT(orthogonal_bracket(w.space, w.m, dec).max_abs(), 0.5);
    EXPECT_LT(orthogonality_check(w.space, w.m, dec.orthogonal.terminal()).max_violation, 1e-12);
}

TEST(Gkw, RandomSpacesAgreeWithOracle) {
    std::mt19937_64 rng(8675309);
    for (int trial = 0; trial < 250; ++trial) {
        const auto inst = testkit::random_instance(rng);
        const auto& s = inst.space;
        const double scale = claim_scale(s, inst.xi);
        const double tol = 1e-10 * scale;
        const auto proj = gkw_projection(s, inst.m, inst.xi);
        const auto dual = gkw_via_dual_projection(s, inst.m, inst.xi);
        const auto oracle = testkit::orthogonal_basis_oracle(s, inst.m, inst.xi, Info::H);

        EXPECT_LT(max_gap(proj.u0, oracle.u0), tol) << inst.description;
        EXPECT_LT(max_gap(proj.orthogonal.terminal(), oracle.orthogonal_terminal), tol) << inst.description;
        EXPECT_LT(max_gap(dual.u0, oracle.u0), tol) << inst.description;
        EXPECT_LT(max_gap(dual.orthogonal.terminal(), oracle.orthogonal_terminal), tol) << inst.description;
        for (std::size_t k = 1; k < s.index_count(); ++k) {
            for (std::size_t i = 0; i < s.atom_count(); ++i) {
                if (!is_charged(s, inst.m, Info::H, k, i)) continue;
                EXPECT_NEAR(proj.integrand(k, i), oracle.integrand[k][i], tol) << inst.description;
                EXPECT_NEAR(dual.integrand(k, i), oracle.integrand[k][i], tol) << inst.description;
            }
        }
        EXPECT_LT(integrand_distance_ae(s, inst.m, proj.integrand, dual.integrand), tol);
        EXPECT_LT(max_abs_difference(proj.orthogonal, dual.orthogonal), tol);
        EXPECT_LT(reconstruction_error(s, inst.m, inst.xi, proj), tol) << inst.description;
        EXPECT_LT(reconstruction_error(s, inst.m, inst.xi, dual), tol) << inst.description;
        EXPECT_LT(orthogonality_check(s, inst.m, proj.orthogonal.terminal()).max_violation, tol);
        EXPECT_FALSE(measurability_violation(s, proj.integrand).has_value());
        EXPECT_FALSE(measurability_violation(s, dual.integrand).has_value());
        EXPECT_LT(martingale_defect(s, proj.orthogonal, Info::F), tol);
    }
}

TEST(Gkw, PythagorasAndRefinementMonotone) {
    std::mt19937_64 rng(99);
    for (int trial = 0; trial < 80; ++trial) {
        const auto inst = testkit::random_instance(rng);
        const auto& s = inst.space;
        const double scale = claim_scale(s, inst.xi);
        const auto dec = gkw_projection(s, inst.m, inst.xi);
        const auto integral = stochastic_integral(s, dec.integrand, inst.m);
        std::vector<double> attained(s.atom_count());
        for (std::size_t i = 0; i < attained.size(); ++i) attained[i] = dec.u0[i] + integral.terminal()[i];
        const double lhs = s.inner(inst.xi, inst.xi);
        const double rhs = s.inner(attained, attained) +
                           s.inner(dec.orthogonal.terminal(), dec.orthogonal.terminal());
        EXPECT_NEAR(lhs, rhs, 1e-10 * scale * scale) << inst.description;

        const auto full = gkw_full_information(s, inst.m, inst.xi);
        EXPECT_LE(s.norm(full.orthogonal.terminal()), s.norm(dec.orthogonal.terminal()) + 1e-10 * scale);
        EXPECT_LT(orthogonal_bracket(s, inst.m, full).max_abs(), 1e-10 * scale) << inst.description;
    }
}

TEST(Gkw, FullInformationDualRouteIsIdentity) {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 40; ++trial) {
        const auto inst = testkit::random_instance(rng);
        const auto s = full_info(inst.space);
        const double tol = 1e-10 * claim_scale(s, inst.xi);
        const auto full = gkw_full_information(s, inst.m, inst.xi);
        const auto dual = gkw_via_dual_projection(s, inst.m, inst.xi);
        EXPECT_LT(integrand_distance_ae(s, inst.m, full.integrand, dual.integrand, Info::F), tol);
        EXPECT_LT(max_abs_difference(full.orthogonal, dual.orthogonal), tol);
    }
}

TEST(Gkw, DeterministicBracketGivesPredictableProjection) {
    std::mt19937_64 rng(404);
    testkit::RandomSpaceOptions opts;
    opts.deterministic_bracket = true;
    for (int trial = 0; trial < 100; ++trial) {
        const auto inst = testkit::random_instance(rng, opts);
        const auto& s = inst.space;
        // The bracket is deterministic by construction.
        for (std::size_t k = 0; k < s.index_count(); ++k) {
            const auto row = inst.m.bracket.row(k);
            for (double v : row) ASSERT_NEAR(v, row[0], 1e-12 * std::max(1.0, std::abs(row[0])));
        }
        const double tol = 1e-10 * claim_scale(s, inst.xi);
        const auto full = gkw_full_information(s, inst.m, inst.xi);
        const auto partial = gkw_projection(s, inst.m, inst.xi);
        const auto projected = predictable_projection(s, full.integrand);
        EXPECT_LT(integrand_distance_ae(s, inst.m, partial.integrand, projected), tol) << inst.description;
    }
}

TEST(Gkw, WeightedFormulaOnRandomSpaces) {
    // Every grid bracket is int a dG with G_k = t_k, a_k = d<M>_k / dt_k, so
    // H^H_k = E[H^F_k a_k | H_{k-1}] / E[a_k | H_{k-1}] on charged blocks.
    std::mt19937_64 rng(606);
    for (int trial = 0; trial < 100; ++trial) {
        const auto inst = testkit::random_instance(rng);
        const auto& s = inst.space;
        const double tol = 1e-10 * claim_scale(s, inst.xi);
        const auto hf = testkit::orthogonal_basis_oracle(s, inst.m, inst.xi, Info::F);
        const auto partial = gkw_projection(s, inst.m, inst.xi);
        for (std::size_t k = 1; k < s.index_count(); ++k) {
            const double dt = s.grid()[k] - s.grid()[k - 1];
            std::vector<double> a(s.atom_count()), ha(s.atom_count());
            for (std::size_t i = 0; i < s.atom_count(); ++i) {
                a[i] = (inst.m.bracket(k, i) - inst.m.bracket(k - 1, i)) / dt;
                ha[i] = hf.integrand[k][i] * a[i];
            }
            const auto labels = s.partition(Info::H, k - 1).labels();
            const auto pa = testkit::brute_conditional(a, labels, s.probabilities());
            const auto pha = testkit::brute_conditional(ha, labels, s.probabilities());
            for (std::size_t i = 0; i < s.atom_count(); ++i) {
                if (pa[i] * dt <= 1e-13) continue;
                EXPECT_NEAR(partial.integrand(k, i), pha[i] / pa[i], tol) << inst.description;
            }
        }
    }
}

TEST(Gkw, DualRouteIntermediatesSatisfyDefiningIdentity) {
    std::mt19937_64 rng(1234);
    for (int trial = 0; trial < 60; ++trial) {
        const auto inst = testkit::random_instance(rng);
        const auto& s = inst.space;
        const auto route = gkw_dual_route(s, inst.m, inst.xi);
        const double scale = std::max(1.0, route.weighted_bracket.process.max_abs());
        EXPECT_LT(dual_projection_defect(s, route.weighted_bracket.process,
                                         route.weighted_bracket_dual.process),
                  1e-12 * scale);
        EXPECT_LT(dual_projection_defect(s, inst.m.bracket, route.bracket_dual.process),
                  1e-12 * std::max(1.0, inst.m.bracket.max_abs()));
    }
}
