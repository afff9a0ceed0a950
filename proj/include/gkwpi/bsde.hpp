// SPDX-License-Identifier: MIT
/// @file bsde.hpp
/// @brief Linear BSDE Y_t = xi - int_t^T Z dM - (O_T - O_t) with H-predictable Z.
#pragma once

#include "gkwpi/filtered_space.hpp"
#include "gkwpi/gkw.hpp"

#include <span>

namespace gkwpi {

struct BsdeSolution {
    GridProcess y;  ///< F-adapted, Y_t = E[xi | F_t]
    GridProcess z;  ///< H-predictable
    GridProcess o;  ///< F-martingale, E[O_0 | H_0] = 0 (O_0 = 0 when H_0 = F_0)
};

/// Solved through the partial-information decomposition: Z = H^H, O from the
/// projection, Y_t = E[xi | F_t].
BsdeSolution solve_linear_bsde(const FiniteFilteredSpace& space, const MartingaleProcess& m,
                               std::span<const double> xi);

/// max over (t, atom) of |Y_t - (xi - sum_{s>t} Z_s dM_s - (O_T - O_t))|
double bsde_residual(const FiniteFilteredSpace& space, const MartingaleProcess& m,
                     std::span<const double> xi, const BsdeSolution& sol);

struct UniquenessReport {
    double y_distance = 0.0;          ///< max atomwise |Y - Y'|
    double o_distance = 0.0;          ///< max atomwise |O - O'|
    double z_distance_ae = 0.0;       ///< max |Z - Z'| on d<M>-charged blocks
    double expected_bracket_gap = 0.0;  ///< E[<O - O'>_T]
    double orthogonality_first = 0.0;   ///< max basis violation of O
    double orthogonality_second = 0.0;  ///< max basis violation of O'
    bool equal = false;
};

/// Compares two solutions of the same data. Inputs whose equation residual,
/// terminal value or measurability fails are rejected with ValidationError or
/// MeasurabilityError.
UniquenessReport verify_uniqueness(const FiniteFilteredSpace& space, const MartingaleProcess& m,
                                   std::span<const double> xi, const BsdeSolution& first,
                                   const BsdeSolution& second, double tol = 1e-10);

}  // namespace gkwpi
