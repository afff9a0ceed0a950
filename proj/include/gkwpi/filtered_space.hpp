// SPDX-License-Identifier: MIT
/// @file filtered_space.hpp
/// @brief Finite filtered probability spaces with a full filtration F, an
///        observed sub-filtration H and an optional price filtration F^M.
///
/// Time runs over grid indices k = 0..N. A filtration is one Partition per
/// index. Processes are stored per (index, atom).
///
/// Predictability convention: a process is predictable at index k >= 1 when
/// its values are constant on the blocks of the partition at k-1; at index 0
/// it must be constant on the blocks at 0.
#pragma once

#include "gkwpi/partition.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace gkwpi {

/// Which filtration a process or operation refers to.
enum class Info { F, H, FM };

std::string_view to_string(Info info);

enum class Measurability { Adapted, Predictable };

class FiniteFilteredSpace {
public:
    /// Structural checks only (sizes, positive probabilities); throws ValidationError.
    /// Filtration invariants are reported by validate_space().
    FiniteFilteredSpace(std::vector<double> probabilities, std::vector<double> grid,
                        std::vector<Partition> full, std::vector<Partition> observed,
                        std::optional<std::vector<Partition>> price = std::nullopt,
                        std::vector<std::string> labels = {});

    std::size_t atom_count() const noexcept { return prob_.size(); }
    std::size_t index_count() const noexcept { return grid_.size(); }
    /// Number of steps N (grid indices run 0..N).
    std::size_t step_count() const noexcept { return grid_.size() - 1; }

    std::span<const double> probabilities() const noexcept { return prob_; }
    std::span<const double> grid() const noexcept { return grid_; }
    double horizon() const noexcept { return grid_.back(); }
    const std::vector<std::string>& labels() const noexcept { return labels_; }

    bool has_price_filtration() const noexcept { return price_.has_value(); }
    const std::vector<Partition>& filtration(Info info) const;
    const Partition& partition(Info info, std::size_t k) const { return filtration(info)[k]; }

    FiniteFilteredSpace with_observed(std::vector<Partition> observed) const;
    FiniteFilteredSpace with_price_filtration(std::vector<Partition> price) const;

    double expectation(std::span<const double> x) const;
    double inner(std::span<const double> a, std::span<const double> b) const;
    /// L2(P) norm.
    double norm(std::span<const double> x) const;

    /// E[x | partition of `info` at index k].
    std::vector<double> conditional(std::span<const double> x, Info info, std::size_t k) const;

private:
    std::vector<double> prob_;
    std::vector<double> grid_;
    std::vector<Partition> full_;
    std::vector<Partition> observed_;
    std::optional<std::vector<Partition>> price_;
    std::vector<std::string> labels_;
};

struct ValidationReport {
    std::vector<std::string> violations;
    bool ok() const noexcept { return violations.empty(); }
};

/// Lists every violated space invariant; empty iff the space is valid.
ValidationReport validate_space(const FiniteFilteredSpace& space);

/// Throws ValidationError carrying the full report when the space is invalid.
void require_valid(const FiniteFilteredSpace& space);

/// Real values per (grid index, atom), tagged with a measurability kind and filtration.
class GridProcess {
public:
    GridProcess() = default;
    GridProcess(std::size_t indices, std::size_t atoms, Measurability kind, Info filtration,
                double fill = 0.0);

    /// rows[k][atom]
    static GridProcess from_rows(const std::vector<std::vector<double>>& rows, Measurability kind,
                                 Info filtration);

    std::size_t index_count() const noexcept { return indices_; }
    std::size_t atom_count() const noexcept { return atoms_; }
    Measurability kind() const noexcept { return kind_; }
    Info filtration() const noexcept { return filtration_; }

    double operator()(std::size_t k, std::size_t atom) const { return values_[k * atoms_ + atom]; }
    double& operator()(std::size_t k, std::size_t atom) { return values_[k * atoms_ + atom]; }

    std::span<const double> row(std::size_t k) const {
        return {values_.data() + k * atoms_, atoms_};
    }
    std::span<double> row(std::size_t k) { return {values_.data() + k * atoms_, atoms_}; }
    std::span<const double> terminal() const { return row(indices_ - 1); }

    /// Increment X_k - X_{k-1} (k >= 1).
    std::vector<double> increment(std::size_t k) const;

    GridProcess retagged(Measurability kind, Info filtration) const;

    std::vector<std::vector<double>> rows() const;

    double max_abs() const;

private:
    std::size_t indices_ = 0;
    std::size_t atoms_ = 0;
    Measurability kind_ = Measurability::Adapted;
    Info filtration_ = Info::F;
    std::vector<double> values_;
};

GridProcess operator+(const GridProcess& a, const GridProcess& b);
GridProcess operator-(const GridProcess& a, const GridProcess& b);
GridProcess operator*(double s, const GridProcess& a);

/// Maximum pointwise distance between two processes of equal shape.
double max_abs_difference(const GridProcess& a, const GridProcess& b);

/// Describes the first measurability violation of `x` against its own tags, if any.
std::optional<std::string> measurability_violation(const FiniteFilteredSpace& space,
                                                   const GridProcess& x, double tol = 1e-12);

/// Throws MeasurabilityError naming `op`, the index and the block on violation.
void require_measurable(const FiniteFilteredSpace& space, const GridProcess& x,
                        std::string_view op, double tol = 1e-12);

/// max_k max_blocks |E[X_k - X_{k-1} | partition of `info` at k-1]|
double martingale_defect(const FiniteFilteredSpace& space, const GridProcess& x, Info info);

/// An F-martingale together with its predictable quadratic variation.
struct MartingaleProcess {
    GridProcess process;
    GridProcess bracket;
};

/// Validates adaptedness and the martingale property (1e-12, scaled by max|M|)
/// and attaches <M>.
MartingaleProcess make_martingale(const FiniteFilteredSpace& space, GridProcess values);

struct DelaySpec {
    double tau = 0.0;
};

/// H_k := F_{j(k)}, j(k) the largest grid index with t_j <= (t_k - tau)^+.
FiniteFilteredSpace delayed_filtration(const FiniteFilteredSpace& space, DelaySpec delay);

/// Grid index j(k) used by delayed_filtration.
std::size_t delayed_index(std::span<const double> grid, std::size_t k, double tau);

/// E[x_k | H_{k-1}] for k >= 1 and E[x_0 | H_0] at index 0. Result is H-predictable.
GridProcess predictable_projection(const FiniteFilteredSpace& space, const GridProcess& x,
                                   Info info = Info::H);

/// E[x_k | H_k] at every index. Result is H-adapted.
GridProcess optional_projection(const FiniteFilteredSpace& space, const GridProcess& x,
                                Info info = Info::H);

/// (int phi dM)_k = sum_{1<=j<=k} phi_j (M_j - M_{j-1}); phi must be predictable.
GridProcess stochastic_integral(const FiniteFilteredSpace& space, const GridProcess& phi,
                                const MartingaleProcess& m);

/// Predictable covariation on the grid: increments E[dA_k dB_k | F_{k-1}].
GridProcess predictable_covariation(const FiniteFilteredSpace& space, const GridProcess& a,
                                    const GridProcess& b);

/// <m, other> where `other` is an adapted F-martingale.
GridProcess bracket_of_pair(const FiniteFilteredSpace& space, const MartingaleProcess& m,
                            const GridProcess& other);

/// t -> E[x_T | F_t]
GridProcess martingale_closure(const FiniteFilteredSpace& space, std::span<const double> terminal,
                               Info info = Info::F);

}  // namespace gkwpi
