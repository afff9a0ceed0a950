// SPDX-License-Identifier: MIT
#include "gkwpi/bsde.hpp"

#include "gkwpi/errors.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <utility>

namespace gkwpi {

BsdeSolution solve_linear_bsde(const FiniteFilteredSpace& space, const MartingaleProcess& m,
                               std::span<const double> xi) {
    GkwDecomposition dec = gkw_projection(space, m, xi, Info::H);
    BsdeSolution sol;
    sol.y = martingale_closure(space, xi, Info::F);
    sol.z = std::move(dec.integrand);
    sol.o = std::move(dec.orthogonal);
    return sol;
}

double bsde_residual(const FiniteFilteredSpace& space, const MartingaleProcess& m,
                     std::span<const double> xi, const BsdeSolution& sol) {
    const std::size_t last = space.step_count();
    double worst = 0.0;
    for (std::size_t i = 0; i < space.atom_count(); ++i) {
        // Backward accumulation of sum_{s>t} Z_s dM_s.
        double tail = 0.0;
        for (std::size_t t = last + 1; t-- > 0;) {
            const double rhs = xi[i] - tail - (sol.o(last, i) - sol.o(t, i));
            worst = std::max(worst, std::abs(sol.y(t, i) - rhs));
            if (t > 0) tail += sol.z(t, i) * (m.process(t, i) - m.process(t - 1, i));
        }
    }
    return worst;
}

namespace {

void require_solution(const FiniteFilteredSpace& space, const MartingaleProcess& m,
                      std::span<const double> xi, const BsdeSolution& sol, double tol,
                      const char* which) {
    const std::string op = std::string("verify_uniqueness (") + which + ")";
    require_measurable(space, sol.y.retagged(Measurability::Adapted, Info::F), op);
    require_measurable(space, sol.z.retagged(Measurability::Predictable, Info::H), op);
    require_measurable(space, sol.o.retagged(Measurability::Adapted, Info::F), op);
    const double scale = claim_scale(space, xi);
    const double residual = bsde_residual(space, m, xi, sol);
    if (residual > tol * scale) {
        std::ostringstream os;
        os << op << ": equation residual " << residual << " exceeds tolerance";
        throw ValidationError(os.str());
    }
    for (std::size_t i = 0; i < space.atom_count(); ++i) {
        if (std::abs(sol.y(space.step_count(), i) - xi[i]) > tol * scale) {
            std::ostringstream os;
            os << op << ": terminal condition fails on atom " << i;
            throw ValidationError(os.str());
        }
    }
    const auto o0 = space.conditional(sol.o.row(0), Info::H, 0);
    for (std::size_t i = 0; i < space.atom_count(); ++i) {
        if (std::abs(o0[i]) > tol * scale) {
            std::ostringstream os;
            os << op << ": E[O_0 | H_0] is not 0 on block " << space.partition(Info::H, 0).block_of(i);
            throw ValidationError(os.str());
        }
    }
    if (martingale_defect(space, sol.o, Info::F) > tol * scale) {
        throw ValidationError(op + ": O is not an F-martingale");
    }
}

}  // namespace

UniquenessReport verify_uniqueness(const FiniteFilteredSpace& space, const MartingaleProcess& m,
                                   std::span<const double> xi, const BsdeSolution& first,
                                   const BsdeSolution& second, double tol) {
    require_solution(space, m, xi, first, tol, "first");
    require_solution(space, m, xi, second, tol, "second");

    UniquenessReport report;
    report.y_distance = max_abs_difference(first.y, second.y);
    report.o_distance = max_abs_difference(first.o, second.o);
    report.z_distance_ae = integrand_distance_ae(space, m, first.z, second.z, Info::H);

    const GridProcess gap = first.o - second.o;
    const GridProcess gap_bracket = predictable_covariation(space, gap, gap);
    report.expected_bracket_gap = space.expectation(gap_bracket.terminal());

    report.orthogonality_first =
        orthogonality_check(space, m, first.o.terminal(), Info::H).max_violation;
    report.orthogonality_second =
        orthogonality_check(space, m, second.o.terminal(), Info::H).max_violation;

    const double scale = claim_scale(space, xi);
    report.equal = report.y_distance <= tol * scale && report.o_distance <= tol * scale &&
                   report.z_distance_ae <= tol * scale;
    return report;
}

}  // namespace gkwpi
