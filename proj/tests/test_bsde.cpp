// SPDX-License-Identifier: MIT
#include "gkwpi/bsde.hpp"
#include "gkwpi/errors.hpp"
#include "random_space.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace gkwpi;

namespace {

/// Perturbs Z by delta on `atoms` at step k and moves the difference into O,
/// so the pair still solves the equation.
BsdeSolution shifted(const FiniteFilteredSpace& space, const MartingaleProcess& m,
                     const BsdeSolution& sol, std::size_t k, const std::vector<std::size_t>& atoms,
                     double delta) {
    BsdeSolution out = sol;
    for (std::size_t i : atoms) {
        out.z(k, i) += delta;
        const double dm = m.process(k, i) - m.process(k - 1, i);
        for (std::size_t j = k; j < space.index_count(); ++j) out.o(j, i) -= delta * dm;
    }
    return out;
}

/// Two steps, H = F; after a down move the price stays flat, so the lower
/// F_1 block carries no bracket at step 2.
struct FlatWalk {
    FiniteFilteredSpace space;
    MartingaleProcess m;
    std::vector<double> xi;
};

FlatWalk flat_walk() {
    const std::vector<Partition> f{Partition::trivial(4), Partition({0, 0, 1, 1}), Partition::discrete(4)};
    FiniteFilteredSpace s(std::vector<double>(4, 0.25), {0.0, 1.0, 2.0}, f, f);
    auto m = make_martingale(s, GridProcess::from_rows({{0, 0, 0, 0}, {1, 1, -1, -1}, {2, 0, -1, -1}},
                                                       Measurability::Adapted, Info::F));
    return {std::move(s), std::move(m), {4.0, 0.0, 1.0, 1.0}};
}

}  // namespace

TEST(Bsde, ConstantTerminal) {
    const auto w = testkit::delayed_walk();
    const auto sol = solve_linear_bsde(w.space, w.m, std::vector<double>(4, -1.5));
    for (std::size_t k = 0; k < 3; ++k) {
        for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(sol.y(k, i), -1.5, 1e-12);
    }
    EXPECT_LT(sol.z.max_abs(), 1e-12);
    EXPECT_LT(sol.o.max_abs(), 1e-12);
}

TEST(Bsde, IntegratorTerminal) {
    const auto w = testkit::delayed_walk();
    const std::vector<double> mt(w.m.process.terminal().begin(), w.m.process.terminal().end());
    const auto sol = solve_linear_bsde(w.space, w.m, mt);
    EXPECT_LT(max_abs_difference(sol.y, w.m.process), 1e-12);
    for (std::size_t k = 1; k < 3; ++k) {
        for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(sol.z(k, i), 1.0, 1e-12);
    }
    EXPECT_LT(sol.o.max_abs(), 1e-12);
}

TEST(Bsde, DelayedWalkSquare) {
    const auto w = testkit::delayed_walk();
    const auto sol = solve_linear_bsde(w.space, w.m, w.xi);
    for (std::size_t i = 0; i < 4; ++i) {
        EXPECT_NEAR(sol.y(0, i), 2.0, 1e-12);
        EXPECT_NEAR(sol.y(1, i), 2.0, 1e-12);
        EXPECT_NEAR(sol.y(2, i), w.xi[i], 1e-12);
        EXPECT_NEAR(sol.z(1, i), 0.0, 1e-12);
        EXPECT_NEAR(sol.z(2, i), 0.0, 1e-12);
        EXPECT_NEAR(sol.o(1, i), 0.0, 1e-12);
        EXPECT_NEAR(sol.o(2, i), w.xi[i] - 2.0, 1e-12);
    }
    EXPECT_LT(bsde_residual(w.space, w.m, w.xi, sol), 1e-12);
}

TEST(Bsde, RandomSpacesResidualForwardFormAndOrthogonality) {
    std::mt19937_64 rng(42);
    for (int trial = 0; trial < 150; ++trial) {
        const auto inst = testkit::random_instance(rng);
        const auto& s = inst.space;
        const double tol = 1e-10 * claim_scale(s, inst.xi);
        const auto sol = solve_linear_bsde(s, inst.m, inst.xi);
        EXPECT_LT(bsde_residual(s, inst.m, inst.xi, sol), tol) << inst.description;
        EXPECT_LT(orthogonality_check(s, inst.m, sol.o.terminal()).max_violation, tol);
        EXPECT_FALSE(measurability_violation(s, sol.z).has_value());
        for (double v : s.conditional(sol.o.row(0), Info::H, 0)) EXPECT_NEAR(v, 0.0, tol);
        const auto integral = stochastic_integral(s, sol.z, inst.m);
        for (std::size_t k = 0; k < s.index_count(); ++k) {
            for (std::size_t i = 0; i < s.atom_count(); ++i) {
                EXPECT_NEAR(sol.y(k, i), sol.y(0, i) + integral(k, i) + sol.o(k, i) - sol.o(0, i), tol);
            }
        }
    }
}

TEST(BsdeUniqueness, IdenticalSolutions) {
    const auto w = testkit::delayed_walk();
    const auto sol = solve_linear_bsde(w.space, w.m, w.xi);
    const auto r = verify_uniqueness(w.space, w.m, w.xi, sol, sol);
    EXPECT_TRUE(r.equal);
    EXPECT_EQ(r.y_distance, 0.0);
    EXPECT_EQ(r.o_distance, 0.0);
    EXPECT_EQ(r.z_distance_ae, 0.0);
    EXPECT_EQ(r.expected_bracket_gap, 0.0);
}

TEST(BsdeUniqueness, NullBlockPerturbationIsEqual) {
    const auto fw = flat_walk();
    const auto sol = solve_linear_bsde(fw.space, fw.m, fw.xi);
    ASSERT_FALSE(is_charged(fw.space, fw.m, Info::H, 2, 2));
    const auto other = shifted(fw.space, fw.m, sol, 2, {2, 3}, 5.0);
    EXPECT_GT(max_abs_difference(sol.z, other.z), 1.0);
    const auto r = verify_uniqueness(fw.space, fw.m, fw.xi, sol, other);
    EXPECT_TRUE(r.equal);
    EXPECT_EQ(r.z_distance_ae, 0.0);
    EXPECT_LT(r.expected_bracket_gap, 1e-15);
}

TEST(BsdeUniqueness, ChargedBlockPerturbationIsRejected) {
    const auto w = testkit::delayed_walk();
    const auto sol = solve_linear_bsde(w.space, w.m, w.xi);
    const double delta = 0.5;
    const auto other = shifted(w.space, w.m, sol, 2, {0, 1, 2, 3}, delta);
    const auto r = verify_uniqueness(w.space, w.m, w.xi, sol, other);
    EXPECT_FALSE(r.equal);
    EXPECT_NEAR(r.z_distance_ae, delta, 1e-12);
    // E[<O - O'>_T] = delta^2 E[d<M>_2] = delta^2.
    EXPECT_NEAR(r.expected_bracket_gap, delta * delta, 1e-12);
    EXPECT_LT(r.orthogonality_first, 1e-12);
    EXPECT_GT(r.orthogonality_second, 0.1);
}

TEST(BsdeUniqueness, RandomChargedPerturbations) {
    std::mt19937_64 rng(3);
    int tested = 0;
    for (int trial = 0; trial < 60; ++trial) {
        const auto inst = testkit::random_instance(rng);
        const auto& s = inst.space;
        const auto sol = solve_linear_bsde(s, inst.m, inst.xi);
        for (std::size_t k = 1; k < s.index_count(); ++k) {
            const auto& p = s.partition(Info::H, k - 1);
            for (std::size_t atom = 0; atom < s.atom_count(); ++atom) {
                if (!is_charged(s, inst.m, Info::H, k, atom, 1e-6)) continue;
                std::vector<std::size_t> block;
                for (std::size_t i = 0; i < s.atom_count(); ++i) {
                    if (p.block_of(i) == p.block_of(atom)) block.push_back(i);
                }
                const auto other = shifted(s, inst.m, sol, k, block, 0.25);
                const auto r = verify_uniqueness(s, inst.m, inst.xi, sol, other);
                EXPECT_FALSE(r.equal) << inst.description;
                EXPECT_GT(r.expected_bracket_gap, 0.0) << inst.description;
                ++tested;
                k = s.index_count();
                break;
            }
        }
    }
    EXPECT_GT(tested, 30);
}

TEST(BsdeUniqueness, RejectsNonSolutions) {
    const auto w = testkit::delayed_walk();
    const auto sol = solve_linear_bsde(w.space, w.m, w.xi);
    auto broken = sol;
    broken.z(2, 0) += 1.0;  // breaks the equation and H-predictability
    EXPECT_THROW(verify_uniqueness(w.space, w.m, w.xi, sol, broken), Error);
    auto wrong_terminal = sol;
    for (std::size_t i = 0; i < 4; ++i) wrong_terminal.y(2, i) += 1.0;
    EXPECT_THROW(verify_uniqueness(w.space, w.m, w.xi, sol, wrong_terminal), ValidationError);
}
