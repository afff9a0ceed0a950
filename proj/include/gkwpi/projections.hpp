// SPDX-License-Identifier: MIT
/// @file projections.hpp
/// @brief Doob-Meyer decomposition on the grid, H-predictable dual projections
///        of finite-variation processes and Radon-Nikodym densities between them.
#pragma once

#include "gkwpi/filtered_space.hpp"

#include <vector>

namespace gkwpi {

/// F-adapted process started at 0, with its pathwise total variation.
struct FiniteVariationProcess {
    GridProcess process;
    std::vector<double> total_variation;  ///< per atom, over the whole grid
    double expected_total_variation = 0.0;
};

/// Checks F-adaptedness and G_0 = 0, then records the variation.
FiniteVariationProcess make_finite_variation(const FiniteFilteredSpace& space, GridProcess g);

/// H-predictable finite-variation process started at 0.
struct DualProjection {
    GridProcess process;
};

struct DoobMeyerDecomposition {
    GridProcess martingale;   ///< X - A
    GridProcess compensator;  ///< A, predictable, increasing, A_0 = 0
};

/// Doob-Meyer decomposition of a submartingale adapted to `info`.
/// Throws NotSubmartingaleError naming the index and block of the first
/// conditional increment mean below -tol * max(1, max|x|).
DoobMeyerDecomposition doob_meyer(const FiniteFilteredSpace& space, const GridProcess& x,
                                  Info info = Info::H, double tol = 1e-12);

/// H-predictable dual projection: Jordan split into increasing parts, H-optional
/// projection of each, Doob-Meyer compensator of each, recombined.
DualProjection dual_projection(const FiniteFilteredSpace& space, const FiniteVariationProcess& g,
                               Info info = Info::H);

/// Largest |E[1_B (dG^H_k)] - E[1_B (dG_k)]| over k >= 1 and blocks B of the
/// `info` partition at k-1. These indicators span the H-predictable processes.
double dual_projection_defect(const FiniteFilteredSpace& space, const GridProcess& g,
                              const GridProcess& g_dual, Info info = Info::H);

struct WeightedProjectionReport {
    GridProcess projected_integral;  ///< dual projection of t -> int x dg
    GridProcess integral_of_projection;  ///< t -> int (pred. projection of x) dg
    double max_defect = 0.0;
};

/// Compares (x dg)^H with (^p x) dg for an H-predictable increasing g.
WeightedProjectionReport weighted_projection_identity_check(const FiniteFilteredSpace& space,
                                                            const GridProcess& x,
                                                            const GridProcess& g);

struct RadonNikodymOptions {
    /// Denominator increments at or below this (times max(1, max|den|)) are null.
    double null_tolerance = 1e-13;
    /// Numerator increments above this (times max(1, max|num|)) on a null block are an error.
    double continuity_tolerance = 1e-10;
};

/// Blockwise density d(numerator)/d(denominator); 0 on denominator-null blocks.
GridProcess radon_nikodym(const FiniteFilteredSpace& space, const DualProjection& numerator,
                          const DualProjection& denominator, RadonNikodymOptions options = {});

}  // namespace gkwpi
