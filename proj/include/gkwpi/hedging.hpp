// SPDX-License-Identifier: MIT
/// @file hedging.hpp
/// @brief Risk-minimizing hedging when stock holdings may only use the
///        observed filtration H.
///
/// A strategy holds theta (H-predictable) shares of the risky asset M and eta
/// (F- or FM-adapted) in the riskless asset with unit price. Value, cost and
/// risk on the grid:
///   V_t = theta_t M_t + eta_t
///   C_t = V_t - sum_{1<=s<=t} theta_s dM_s
///   R_t = E[(C_T - C_t)^2 | H_t]
#pragma once

#include "gkwpi/filtered_space.hpp"
#include "gkwpi/gkw.hpp"

#include <cstddef>
#include <cstdint>
#include <span>

namespace gkwpi {

class RandomStream;

struct HedgingStrategy {
    GridProcess theta;  ///< predictable w.r.t. H
    GridProcess eta;    ///< adapted w.r.t. its tag (F or FM)
};

struct StrategyAnalytics {
    GridProcess value;
    GridProcess cost;
    GridProcess risk;  ///< adapted w.r.t. H
    double replication_error = 0.0;       ///< max |V_T - xi|
    bool replicates = false;
    double cost_martingale_defect = 0.0;  ///< w.r.t. the filtration eta is tagged with
    bool mean_self_financing = false;
};

/// Throws MeasurabilityError if theta is not H-predictable or eta is not
/// adapted to its tag.
StrategyAnalytics analyze_strategy(const FiniteFilteredSpace& space, const MartingaleProcess& m,
                                   std::span<const double> xi, const HedgingStrategy& phi,
                                   double tol = 1e-10);

/// theta = H^H (dual-projection route), eta_t = E[xi | F_t] - theta_t M_t.
HedgingStrategy optimal_strategy(const FiniteFilteredSpace& space, const MartingaleProcess& m,
                                 std::span<const double> xi);

/// Mean-self-financing strategy with the given holdings: eta_t = E[xi | F_t] - theta_t M_t.
HedgingStrategy replicating_strategy(const FiniteFilteredSpace& space, const MartingaleProcess& m,
                                     std::span<const double> xi, const GridProcess& theta);

struct PriceFiltrationHedge {
    HedgingStrategy strategy;          ///< eta adapted to FM
    GridProcess projected_orthogonal;  ///< O-hat_t = E[O_t | FM_t]
    double orthogonality = 0.0;        ///< E[O-hat_T (int H^H dM)_T]
    double projected_martingale_defect = 0.0;  ///< O-hat as an FM-martingale
};

/// Variant where the riskless position may only use the price filtration FM,
/// with H <= FM <= F. Requires xi FM_T-measurable and M FM-adapted.
PriceFiltrationHedge optimal_strategy_fm(const FiniteFilteredSpace& space,
                                         const MartingaleProcess& m, std::span<const double> xi);

/// Block-uniform H-predictable holdings on [-2, 2] * scale.
GridProcess random_admissible_theta(const FiniteFilteredSpace& space, double scale,
                                    RandomStream& stream);

struct RiskComparison {
    GridProcess excess_risk;    ///< R_t(psi) - R_t(phi^H)
    GridProcess identity_term;  ///< E[(sum_{s>t} (H^H - theta) dM)^2 | H_t]
    double min_excess = 0.0;
    double identity_error = 0.0;
};

/// Compares the mean-self-financing strategy with holdings `theta` against the
/// optimal one. theta must be H-predictable (MeasurabilityError otherwise).
RiskComparison compare_with_optimal(const FiniteFilteredSpace& space, const MartingaleProcess& m,
                                    std::span<const double> xi, const GridProcess& theta);

/// max over t < k, blocks B of H_{k-1} and phi in {1_B at step k} u extra of
/// |E[(O_T - O_t) sum_{s>t} phi_s dM_s | H_t]|.
double conditional_orthogonality_defect(const FiniteFilteredSpace& space, const MartingaleProcess& m,
                                        const GridProcess& orthogonal,
                                        std::span<const GridProcess> extra = {});

struct DominanceReport {
    std::size_t trials = 0;
    std::uint64_t seed = 0;
    double min_excess = 0.0;  ///< over trials, indices and atoms
    std::size_t worst_trial = 0;
    std::size_t worst_index = 0;
    std::size_t worst_block = 0;
    double max_identity_error = 0.0;
    double max_lemma_violation = 0.0;
    double tolerance = 0.0;  ///< absolute, already scaled by max(1, ||xi||)^2
    bool passed = false;
};

/// Samples `trials` random admissible strategies from per-trial substreams of
/// `seed` and checks R_t(phi^H) <= R_t(psi) + tol at every (t, block).
DominanceReport dominance_check(const FiniteFilteredSpace& space, const MartingaleProcess& m,
                                std::span<const double> xi, std::size_t trials, std::uint64_t seed,
                                double tol = 1e-10);

}  // namespace gkwpi
