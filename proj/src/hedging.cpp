// SPDX-License-Identifier: MIT
#include "gkwpi/hedging.hpp"

#include "gkwpi/errors.hpp"
#include "gkwpi/philox.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <utility>

namespace gkwpi {

namespace {

void require_claim_size(const FiniteFilteredSpace& space, std::span<const double> xi,
                        const char* op) {
    if (xi.size() != space.atom_count()) {
        std::ostringstream os;
        os << op << ": claim has " << xi.size() << " values, space has " << space.atom_count()
           << " atoms";
        throw ValidationError(os.str());
    }
}

void require_admissible(const FiniteFilteredSpace& space, const GridProcess& theta,
                        std::string_view op) {
    if (theta.index_count() != space.index_count() || theta.atom_count() != space.atom_count()) {
        throw ValidationError(std::string(op) + ": holdings have the wrong shape");
    }
    require_measurable(space, theta.retagged(Measurability::Predictable, Info::H),
                       std::string(op) + " (theta must be H-predictable)");
}

/// R_t = E[(C_T - C_t)^2 | H_t]
GridProcess risk_of(const FiniteFilteredSpace& space, const GridProcess& cost) {
    GridProcess risk(space.index_count(), space.atom_count(), Measurability::Adapted, Info::H);
    const std::size_t last = space.step_count();
    std::vector<double> sq(space.atom_count());
    for (std::size_t t = 0; t <= last; ++t) {
        for (std::size_t i = 0; i < space.atom_count(); ++i) {
            const double d = cost(last, i) - cost(t, i);
            sq[i] = d * d;
        }
        const auto r = space.conditional(sq, Info::H, t);
        std::copy(r.begin(), r.end(), risk.row(t).begin());
    }
    return risk;
}

/// E[(sum_{s>t} phi_s dM_s)^2 | H_t]
GridProcess tail_square(const FiniteFilteredSpace& space, const MartingaleProcess& m,
                        const GridProcess& phi) {
    const GridProcess integral = stochastic_integral(space, phi, m);
    return risk_of(space, integral);
}

GridProcess holdings_times_price(const GridProcess& theta, const MartingaleProcess& m) {
    GridProcess out(theta.index_count(), theta.atom_count(), Measurability::Adapted, Info::F);
    for (std::size_t k = 0; k < theta.index_count(); ++k) {
        for (std::size_t i = 0; i < theta.atom_count(); ++i) out(k, i) = theta(k, i) * m.process(k, i);
    }
    return out;
}

struct Reference {
    GkwDecomposition dec;
    StrategyAnalytics analytics;
};

Reference reference_for(const FiniteFilteredSpace& space, const MartingaleProcess& m,
                        std::span<const double> xi) {
    Reference ref;
    ref.dec = gkw_via_dual_projection(space, m, xi);
    HedgingStrategy opt = replicating_strategy(space, m, xi, ref.dec.integrand);
    ref.analytics = analyze_strategy(space, m, xi, opt);
    return ref;
}

RiskComparison compare_against(const FiniteFilteredSpace& space, const MartingaleProcess& m,
                               std::span<const double> xi, const Reference& ref,
                               const GridProcess& theta) {
    const HedgingStrategy psi = replicating_strategy(space, m, xi, theta);
    const StrategyAnalytics a = analyze_strategy(space, m, xi, psi);

    RiskComparison out;
    out.excess_risk = a.risk - ref.analytics.risk;
    GridProcess gap = ref.dec.integrand - theta.retagged(Measurability::Predictable, Info::H);
    out.identity_term = tail_square(space, m, gap);
    out.min_excess = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < space.index_count(); ++k) {
        for (std::size_t i = 0; i < space.atom_count(); ++i) {
            out.min_excess = std::min(out.min_excess, out.excess_risk(k, i));
        }
    }
    out.identity_error = max_abs_difference(out.excess_risk, out.identity_term);
    return out;
}

}  // namespace

StrategyAnalytics analyze_strategy(const FiniteFilteredSpace& space, const MartingaleProcess& m,
                                   std::span<const double> xi, const HedgingStrategy& phi,
                                   double tol) {
    require_claim_size(space, xi, "analyze_strategy");
    require_admissible(space, phi.theta, "analyze_strategy");
    if (phi.eta.kind() != Measurability::Adapted) {
        throw MeasurabilityError("analyze_strategy: eta must be tagged adapted");
    }
    require_measurable(space, phi.eta, "analyze_strategy (eta)");

    const GridProcess theta = phi.theta.retagged(Measurability::Predictable, Info::H);
    StrategyAnalytics out;
    out.value = holdings_times_price(theta, m) + phi.eta.retagged(Measurability::Adapted, Info::F);
    out.cost = out.value - stochastic_integral(space, theta, m);
    out.risk = risk_of(space, out.cost);

    const std::size_t last = space.step_count();
    for (std::size_t i = 0; i < space.atom_count(); ++i) {
        out.replication_error = std::max(out.replication_error, std::abs(out.value(last, i) - xi[i]));
    }
    const double scale = claim_scale(space, xi);
    out.replicates = out.replication_error <= tol * scale;
    const Info cost_info = phi.eta.filtration() == Info::FM ? Info::FM : Info::F;
    out.cost_martingale_defect = martingale_defect(space, out.cost, cost_info);
    out.mean_self_financing = out.cost_martingale_defect <= tol * scale;
    return out;
}

HedgingStrategy replicating_strategy(const FiniteFilteredSpace& space, const MartingaleProcess& m,
                                     std::span<const double> xi, const GridProcess& theta) {
    require_claim_size(space, xi, "replicating_strategy");
    require_admissible(space, theta, "replicating_strategy");
    HedgingStrategy s;
    s.theta = theta.retagged(Measurability::Predictable, Info::H);
    s.eta = martingale_closure(space, xi, Info::F) - holdings_times_price(s.theta, m);
    s.eta = s.eta.retagged(Measurability::Adapted, Info::F);
    return s;
}

HedgingStrategy optimal_strategy(const FiniteFilteredSpace& space, const MartingaleProcess& m,
                                 std::span<const double> xi) {
    require_claim_size(space, xi, "optimal_strategy");
    const GkwDecomposition dec = gkw_via_dual_projection(space, m, xi);
    return replicating_strategy(space, m, xi, dec.integrand);
}

PriceFiltrationHedge optimal_strategy_fm(const FiniteFilteredSpace& space,
                                         const MartingaleProcess& m, std::span<const double> xi) {
    require_claim_size(space, xi, "optimal_strategy_fm");
    if (!space.has_price_filtration()) {
        throw ValidationError("optimal_strategy_fm: space has no price filtration FM");
    }
    for (std::size_t k = 0; k < space.index_count(); ++k) {
        const Partition& fm = space.partition(Info::FM, k);
        if (!fm.refines(space.partition(Info::H, k)) || !space.partition(Info::F, k).refines(fm)) {
            std::ostringstream os;
            os << "optimal_strategy_fm: H <= FM <= F fails at index " << k;
            throw ValidationError(os.str());
        }
    }
    require_measurable(space, m.process.retagged(Measurability::Adapted, Info::FM),
                       "optimal_strategy_fm (M must be FM-adapted)");

    const double scale = claim_scale(space, xi);
    const std::size_t last = space.step_count();
    const auto projected = space.conditional(xi, Info::FM, last);
    for (std::size_t i = 0; i < space.atom_count(); ++i) {
        if (std::abs(projected[i] - xi[i]) > 1e-12 * scale) {
            std::ostringstream os;
            os << "optimal_strategy_fm: claim is not FM_T-measurable (block "
               << space.partition(Info::FM, last).block_of(i) << ")";
            throw ValidationError(os.str());
        }
    }

    const GkwDecomposition dec = gkw_via_dual_projection(space, m, xi);
    PriceFiltrationHedge out;
    out.strategy.theta = dec.integrand;
    out.strategy.eta = (martingale_closure(space, xi, Info::FM) -
                        holdings_times_price(dec.integrand, m))
                           .retagged(Measurability::Adapted, Info::FM);

    out.projected_orthogonal =
        GridProcess(space.index_count(), space.atom_count(), Measurability::Adapted, Info::FM);
    for (std::size_t k = 0; k <= last; ++k) {
        const auto v = space.conditional(dec.orthogonal.row(k), Info::FM, k);
        std::copy(v.begin(), v.end(), out.projected_orthogonal.row(k).begin());
    }
    const GridProcess integral = stochastic_integral(space, dec.integrand, m);
    out.orthogonality = space.inner(out.projected_orthogonal.terminal(), integral.terminal());
    out.projected_martingale_defect = martingale_defect(space, out.projected_orthogonal, Info::FM);
    return out;
}

GridProcess random_admissible_theta(const FiniteFilteredSpace& space, double scale,
                                    RandomStream& stream) {
    GridProcess theta(space.index_count(), space.atom_count(), Measurability::Predictable, Info::H);
    for (std::size_t k = 0; k < space.index_count(); ++k) {
        const Partition& p = space.partition(Info::H, k == 0 ? 0 : k - 1);
        std::vector<double> draw(p.block_count());
        for (double& d : draw) d = stream.uniform(-2.0, 2.0) * scale;
        for (std::size_t i = 0; i < space.atom_count(); ++i) theta(k, i) = draw[p.block_of(i)];
    }
    return theta;
}

RiskComparison compare_with_optimal(const FiniteFilteredSpace& space, const MartingaleProcess& m,
                                    std::span<const double> xi, const GridProcess& theta) {
    require_claim_size(space, xi, "compare_with_optimal");
    require_admissible(space, theta, "compare_with_optimal");
    return compare_against(space, m, xi, reference_for(space, m, xi), theta);
}

double conditional_orthogonality_defect(const FiniteFilteredSpace& space, const MartingaleProcess& m,
                                        const GridProcess& orthogonal,
                                        std::span<const GridProcess> extra) {
    const std::size_t last = space.step_count();
    const std::size_t n = space.atom_count();
    double worst = 0.0;
    std::vector<double> v(n);
    for (std::size_t t = 0; t < last; ++t) {
        for (std::size_t k = t + 1; k <= last; ++k) {
            const Partition& prior = space.partition(Info::H, k - 1);
            const auto dm = m.process.increment(k);
            for (std::size_t b = 0; b < prior.block_count(); ++b) {
                for (std::size_t i = 0; i < n; ++i) {
                    v[i] = prior.block_of(i) == b
                               ? (orthogonal(last, i) - orthogonal(t, i)) * dm[i]
                               : 0.0;
                }
                for (double c : space.conditional(v, Info::H, t)) worst = std::max(worst, std::abs(c));
            }
        }
        for (const GridProcess& phi : extra) {
            for (std::size_t i = 0; i < n; ++i) {
                double tail = 0.0;
                for (std::size_t s = t + 1; s <= last; ++s) {
                    tail += phi(s, i) * (m.process(s, i) - m.process(s - 1, i));
                }
                v[i] = (orthogonal(last, i) - orthogonal(t, i)) * tail;
            }
            for (double c : space.conditional(v, Info::H, t)) worst = std::max(worst, std::abs(c));
        }
    }
    return worst;
}

DominanceReport dominance_check(const FiniteFilteredSpace& space, const MartingaleProcess& m,
                                std::span<const double> xi, std::size_t trials, std::uint64_t seed,
                                double tol) {
    require_claim_size(space, xi, "dominance_check");
    if (trials == 0) throw ValidationError("dominance_check: trials must be at least 1");

    const Reference ref = reference_for(space, m, xi);
    const double scale = claim_scale(space, xi);

    DominanceReport report;
    report.trials = trials;
    report.seed = seed;
    report.tolerance = tol * scale * scale;
    report.min_excess = std::numeric_limits<double>::infinity();
    report.max_lemma_violation = conditional_orthogonality_defect(space, m, ref.dec.orthogonal);

    for (std::size_t trial = 0; trial < trials; ++trial) {
        RandomStream stream(seed, trial);
        const GridProcess theta = random_admissible_theta(space, scale, stream);
        const RiskComparison cmp = compare_against(space, m, xi, ref, theta);
        for (std::size_t k = 0; k < space.index_count(); ++k) {
            for (std::size_t i = 0; i < space.atom_count(); ++i) {
                if (cmp.excess_risk(k, i) < report.min_excess) {
                    report.min_excess = cmp.excess_risk(k, i);
                    report.worst_trial = trial;
                    report.worst_index = k;
                    report.worst_block = space.partition(Info::H, k).block_of(i);
                }
            }
        }
        report.max_identity_error = std::max(report.max_identity_error, cmp.identity_error);
        const GridProcess extra[] = {theta};
        report.max_lemma_violation =
            std::max(report.max_lemma_violation,
                     conditional_orthogonality_defect(space, m, ref.dec.orthogonal, extra));
    }
    report.passed = report.min_excess >= -report.tolerance &&
                    report.max_identity_error <= report.tolerance &&
                    report.max_lemma_violation <= report.tolerance;
    return report;
}

}  // namespace gkwpi
