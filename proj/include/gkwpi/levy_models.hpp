// SPDX-License-Identifier: MIT
/// @file levy_models.hpp
/// @brief Brownian and compensated-Poisson martingales on a uniform grid,
///        their Markovian integrands and the delayed-information integrand,
///        with Monte Carlo verification.
///
/// For a claim h(M_T) the full-information integrand is F(t, x), a function of
/// the left limit M_{t-}. Under the delayed filtration H_t = F_{(t - tau)^+} the
/// H-predictable integrand is c(t, M_{(t - tau)^+}) with
///   c(t, y) = int F(t, y + z) rho_{t ^ tau}(dz),
/// rho_s the law of M_s. Because F(t, M_t) is itself a martingale, c(t, y) is
/// the derivative kernel of the claim over the total horizon T - t + (t ^ tau)
/// (the "collapsed" route); the nested quadrature is kept as a cross-check.
///
/// On the grid, step k (1 <= k <= N) integrates dM_k = M_k - M_{k-1} against
/// c evaluated at t_{k-1} and the observed value M_{j(k-1)}.
#pragma once

#include "gkwpi/filtered_space.hpp"
#include "gkwpi/quadrature.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace gkwpi {

enum class LevyKind { Brownian, CompensatedPoisson };

std::string_view to_string(LevyKind kind);

class LevyModel {
public:
    /// Throws ValidationError unless the parameters are positive and T / dt
    /// is an integer within 1e-9.
    LevyModel(LevyKind kind, double parameter, double horizon, double step);

    static LevyModel brownian(double sigma, double horizon, double step) {
        return {LevyKind::Brownian, sigma, horizon, step};
    }
    static LevyModel compensated_poisson(double intensity, double horizon, double step) {
        return {LevyKind::CompensatedPoisson, intensity, horizon, step};
    }

    LevyKind kind() const noexcept { return kind_; }
    /// sigma (Brownian) or lambda (Poisson, unit jumps).
    double parameter() const noexcept { return parameter_; }
    double horizon() const noexcept { return horizon_; }
    double step() const noexcept { return step_; }
    std::size_t step_count() const noexcept { return steps_; }
    double time(std::size_t k) const noexcept { return static_cast<double>(k) * step_; }
    std::vector<double> grid() const;

    /// d<M>_t / dt: sigma^2 or lambda.
    double bracket_rate() const noexcept;

    /// E[g(M_{s+u} - M_s)] for an increment over duration u.
    double increment_expectation(const std::function<double(double)>& g, double duration,
                                 const QuadratureOptions& options = {}) const;

    /// d/dy E[h(y + M_{s+u} - M_s)]: the Gaussian score identity for Brownian,
    /// the unit forward difference for Poisson. u = 0 falls back to a
    /// difference quotient of h itself.
    double derivative_kernel(const std::function<double(double)>& h, double duration, double y,
                             const QuadratureOptions& options = {}) const;

private:
    LevyKind kind_;
    double parameter_;
    double horizon_;
    double step_;
    std::size_t steps_;
};

using ClaimFunction = std::function<double(double)>;

class MarkovIntegrand {
public:
    /// Checks E[h(M_T)^2] < infinity numerically; throws ValidationError otherwise.
    MarkovIntegrand(LevyModel model, ClaimFunction h, QuadratureOptions options = {});

    const LevyModel& model() const noexcept { return model_; }
    const ClaimFunction& claim() const noexcept { return h_; }
    const QuadratureOptions& options() const noexcept { return options_; }

    /// F(t, x)
    double operator()(double t, double x) const;

    /// E[h(M_T)]
    double claim_mean() const;
    /// Var(h(M_T))
    double claim_variance() const;

    /// E[int_0^T F(t, M_t)^2 d<M>_t], left-point rule on the model grid.
    double integrability() const;

private:
    LevyModel model_;
    ClaimFunction h_;
    QuadratureOptions options_;
};

class DelayedIntegrand {
public:
    /// Accepts 0 <= tau <= T; throws ValidationError otherwise.
    DelayedIntegrand(MarkovIntegrand full, double tau);

    double tau() const noexcept { return tau_; }
    const MarkovIntegrand& full() const noexcept { return full_; }

    /// c(t, y) by the collapsed kernel.
    double operator()(double t, double y) const;
    /// c(t, y) as the quadrature of F(t, y + .) against rho_{t ^ tau}.
    double nested(double t, double y) const;
    /// c with an explicit unobserved gap in place of t ^ tau.
    double with_gap(double t, double gap, double y) const;

    /// Observed grid index j(k-1) used by step k >= 1.
    std::size_t observed_index(std::size_t k) const;
    /// Integrand for step k >= 1 on a path sampled on the model grid.
    double on_grid(std::size_t k, std::span<const double> path) const;

    /// Var(h(M_T)) - sum_k d<M>_k E[c_k^2]: the residual variance of the grid
    /// strategy, exact for claims of degree <= 2.
    double grid_residual_variance() const;

private:
    MarkovIntegrand full_;
    double tau_;
    std::vector<double> grid_;
};

/// Simulates one path into out (size N + 1) from stream (seed, path).
void simulate_path(const LevyModel& model, std::uint64_t seed, std::uint64_t path,
                   std::span<double> out);

struct PathBatch {
    LevyModel model;
    std::uint64_t seed = 0;
    std::size_t paths = 0;
    std::vector<double> values;  ///< row-major, paths x (N + 1)

    std::span<const double> path(std::size_t p) const {
        const std::size_t w = model.step_count() + 1;
        return {values.data() + p * w, w};
    }
};

/// Thread count from GKWPI_THREADS, else hardware concurrency (at least 1).
std::size_t default_thread_count();

/// Paths are independent of `threads`: path p always uses stream (seed, p).
PathBatch simulate_paths(const LevyModel& model, std::size_t paths, std::uint64_t seed,
                         std::size_t threads = 0);

struct Estimate {
    std::string name;
    double mean = 0.0;
    double standard_error = 0.0;

    double z_score(double target = 0.0) const;
};

struct McOptions {
    std::size_t threads = 0;  ///< 0: default_thread_count()
    double perturbation = 0.1;  ///< size of the theta shifts used for dominance
    double sigma_band = 3.0;
};

struct McReport {
    std::string model;
    double tau = 0.0;
    std::size_t paths = 0;
    std::uint64_t seed = 0;
    double claim_mean = 0.0;                 ///< U_0 = E[h(M_T)]
    Estimate residual_variance;              ///< E[(xi - U_0 - sum c dM)^2]
    double grid_oracle = 0.0;                ///< DelayedIntegrand::grid_residual_variance
    std::vector<Estimate> orthogonality;     ///< E[O_T sum phi dM] per test integrand
    std::vector<Estimate> dominance;         ///< R_0(psi) - R_0(phi^H) per perturbation
    bool orthogonality_ok = false;
    bool dominance_ok = false;
    bool oracle_ok = false;
};

/// Chunks of 4096 paths are reduced in a fixed order, so the report does not
/// depend on the thread count.
McReport mc_verify_decomposition(const DelayedIntegrand& c, std::size_t paths, std::uint64_t seed,
                                 const McOptions& options = {});

/// Compensated Poisson with jump counts truncated at max_jumps per step. The
/// truncated law is renormalized and compensated by its own mean, so M is an
/// exact martingale on the resulting space.
struct PoissonDiscretization {
    FiniteFilteredSpace space;
    MartingaleProcess martingale;
    double truncated_mass = 0.0;  ///< Poisson mass above max_jumps per step
    double step_variance = 0.0;
    double step_third_moment = 0.0;
};

PoissonDiscretization discretize_poisson(const LevyModel& model, std::size_t max_jumps,
                                         double tau);

struct GridConsistencyReport {
    double max_difference = 0.0;  ///< over charged (step, block) pairs
    double truncation_budget = 0.0;
    double grid_budget = 0.0;
    bool within_budget = false;
};

/// Runs gkw_projection on discretize_poisson(...) with xi = h(M_T) and compares
/// H^H with c on every charged block.
GridConsistencyReport poisson_grid_consistency(const DelayedIntegrand& c, std::size_t max_jumps);

}  // namespace gkwpi
