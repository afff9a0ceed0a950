// SPDX-License-Identifier: MIT
/// @file gkw.hpp
/// @brief Galtchouk-Kunita-Watanabe decomposition xi = U_0 + int H dM + O_T
///        under full or partial information.
///
/// Two independent routes are provided:
///  - gkw_projection: weighted least squares of xi onto the span of the
///    indicator basis {1_B : B in H_0} u {1_B dM_k : B in H_{k-1}}.
///  - gkw_via_dual_projection: full-information integrand H^F, then
///    H^H = d(A^H) / d(<M>^H) with A = int H^F d<M>.
/// They must agree on u0 and O_T atomwise and on the integrand wherever
/// d<M> charges the block.
#pragma once

#include "gkwpi/filtered_space.hpp"
#include "gkwpi/projections.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace gkwpi {

struct BasisElement {
    std::size_t index = 0;  ///< 0 for the H_0 indicators, k >= 1 for 1_B dM_k
    std::size_t block = 0;  ///< block of the partition at index (k == 0 ? 0 : k - 1)
    std::vector<double> values;
};

/// Terminal random variables spanning the attainable subspace for `info`.
std::vector<BasisElement> subspace_basis(const FiniteFilteredSpace& space, const MartingaleProcess& m,
                                         Info info = Info::H);

struct GkwDecomposition {
    Info info = Info::H;
    std::vector<double> u0;   ///< per atom, constant on blocks of info_0
    GridProcess integrand;    ///< predictable w.r.t. info, 0 at index 0
    GridProcess orthogonal;   ///< F-martingale, E[O_0 | H_0] = 0 (O_0 = 0 when H_0 = F_0)
    double residual_norm = 0.0;
};

/// max(1, ||xi||_L2): scale factor for every decomposition tolerance.
double claim_scale(const FiniteFilteredSpace& space, std::span<const double> xi);

/// Orthogonal projection of xi onto the attainable subspace, solved with a
/// complete orthogonal decomposition (minimum-norm on rank deficiency).
GkwDecomposition gkw_projection(const FiniteFilteredSpace& space, const MartingaleProcess& m,
                                std::span<const double> xi, Info info = Info::H);

/// gkw_projection with the full filtration F.
GkwDecomposition gkw_full_information(const FiniteFilteredSpace& space, const MartingaleProcess& m,
                                      std::span<const double> xi);

/// Intermediate objects of the dual-projection route.
struct DualProjectionRoute {
    GkwDecomposition full;
    FiniteVariationProcess weighted_bracket;  ///< A = int H^F d<M>
    DualProjection weighted_bracket_dual;     ///< A^H
    DualProjection bracket_dual;              ///< <M>^H
    GkwDecomposition partial;
};

DualProjectionRoute gkw_dual_route(const FiniteFilteredSpace& space, const MartingaleProcess& m,
                                   std::span<const double> xi);

GkwDecomposition gkw_via_dual_projection(const FiniteFilteredSpace& space,
                                         const MartingaleProcess& m, std::span<const double> xi);

struct OrthogonalityReport {
    std::vector<double> values;  ///< E[O_T b] per basis element
    double max_violation = 0.0;
    std::size_t worst_index = 0;
    std::size_t worst_block = 0;
};

/// Evaluates E[O_T b] for every element b of subspace_basis(space, m, info).
OrthogonalityReport orthogonality_check(const FiniteFilteredSpace& space, const MartingaleProcess& m,
                                        std::span<const double> o_terminal, Info info = Info::H);

/// max over atoms of |xi - u0 - (int H dM)_T - O_T|
double reconstruction_error(const FiniteFilteredSpace& space, const MartingaleProcess& m,
                            std::span<const double> xi, const GkwDecomposition& dec);

/// <O, M>; identically zero under full information, diagnostic only otherwise.
GridProcess orthogonal_bracket(const FiniteFilteredSpace& space, const MartingaleProcess& m,
                               const GkwDecomposition& dec);

/// E[1_B d<M>_k] > threshold for the `info` block of atom i at index k-1.
bool is_charged(const FiniteFilteredSpace& space, const MartingaleProcess& m, Info info,
                std::size_t k, std::size_t atom, double threshold = 1e-13);

/// Largest integrand distance over (k, atom) restricted to d<M>-charged blocks.
double integrand_distance_ae(const FiniteFilteredSpace& space, const MartingaleProcess& m,
                             const GridProcess& a, const GridProcess& b, Info info = Info::H);

}  // namespace gkwpi
