// SPDX-License-Identifier: MIT
#include "gkwpi/levy_models.hpp"

#include "gkwpi/errors.hpp"
#include "gkwpi/gkw.hpp"
#include "gkwpi/philox.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <thread>
#include <utility>

namespace gkwpi {

std::string_view to_string(LevyKind kind) {
    return kind == LevyKind::Brownian ? "brownian" : "compensated_poisson";
}

// ---------------------------------------------------------------------------
// LevyModel

LevyModel::LevyModel(LevyKind kind, double parameter, double horizon, double step)
    : kind_(kind), parameter_(parameter), horizon_(horizon), step_(step), steps_(0) {
    auto positive = [](double v) { return v > 0.0 && std::isfinite(v); };
    if (!positive(parameter)) {
        throw ValidationError(std::string(kind == LevyKind::Brownian ? "volatility" : "intensity") +
                              " must be positive");
    }
    if (!positive(horizon)) throw ValidationError("horizon must be positive");
    if (!positive(step) || step > horizon) throw ValidationError("grid step must lie in (0, T]");
    const double ratio = horizon / step;
    const double rounded = std::round(ratio);
    if (std::abs(ratio - rounded) > 1e-9 * std::max(1.0, ratio)) {
        std::ostringstream os;
        os << "T / dt = " << ratio << " is not an integer";
        throw ValidationError(os.str());
    }
    steps_ = static_cast<std::size_t>(rounded);
}

std::vector<double> LevyModel::grid() const {
    std::vector<double> g(steps_ + 1);
    for (std::size_t k = 0; k <= steps_; ++k) g[k] = time(k);
    g.back() = horizon_;
    return g;
}

double LevyModel::bracket_rate() const noexcept {
    return kind_ == LevyKind::Brownian ? parameter_ * parameter_ : parameter_;
}

double LevyModel::increment_expectation(const std::function<double(double)>& g, double duration,
                                        const QuadratureOptions& options) const {
    if (duration <= 0.0) return g(0.0);
    if (kind_ == LevyKind::Brownian) {
        const double s = parameter_ * std::sqrt(duration);
        return normal_expectation([&](double z) { return g(s * z); }, options).value;
    }
    const double mean = parameter_ * duration;
    return poisson_expectation([&](double n) { return g(n - mean); }, mean).value;
}

double LevyModel::derivative_kernel(const std::function<double(double)>& h, double duration,
                                    double y, const QuadratureOptions& options) const {
    if (kind_ == LevyKind::CompensatedPoisson) {
        if (duration <= 0.0) return h(y + 1.0) - h(y);
        const double mean = parameter_ * duration;
        return poisson_expectation(
                   [&](double n) { return h(y + 1.0 + n - mean) - h(y + n - mean); }, mean)
            .value;
    }
    if (duration <= 0.0) {
        const double e = 1e-5 * std::max(1.0, std::abs(y));
        return (h(y + e) - h(y - e)) / (2.0 * e);
    }
    // d/dy E[h(y + sZ)] = E[h(y + sZ) Z] / s
    const double s = parameter_ * std::sqrt(duration);
    return normal_expectation([&](double z) { return h(y + s * z) * z; }, options).value / s;
}

// ---------------------------------------------------------------------------
// MarkovIntegrand

MarkovIntegrand::MarkovIntegrand(LevyModel model, ClaimFunction h, QuadratureOptions options)
    : model_(std::move(model)), h_(std::move(h)), options_(options) {
    if (!h_) throw ValidationError("claim function is empty");
    const double second = model_.increment_expectation(
        [&](double x) { return h_(x) * h_(x); }, model_.horizon(), options_);
    if (!std::isfinite(second)) {
        throw ValidationError("claim has no finite second moment under the terminal law");
    }
}

double MarkovIntegrand::operator()(double t, double x) const {
    return model_.derivative_kernel(h_, model_.horizon() - t, x, options_);
}

double MarkovIntegrand::claim_mean() const {
    return model_.increment_expectation(h_, model_.horizon(), options_);
}

double MarkovIntegrand::claim_variance() const {
    const double mean = claim_mean();
    const double second = model_.increment_expectation(
        [&](double x) { return h_(x) * h_(x); }, model_.horizon(), options_);
    return std::max(0.0, second - mean * mean);
}

double MarkovIntegrand::integrability() const {
    const std::size_t pieces = std::min<std::size_t>(model_.step_count(), 64);
    const double dt = model_.horizon() / static_cast<double>(pieces);
    double total = 0.0;
    for (std::size_t k = 0; k < pieces; ++k) {
        const double t = dt * static_cast<double>(k);
        const double f2 = model_.increment_expectation(
            [&](double x) {
                const double f = (*this)(t, x);
                return f * f;
            },
            t, options_);
        total += f2 * model_.bracket_rate() * dt;
    }
    return total;
}

// ---------------------------------------------------------------------------
// DelayedIntegrand

DelayedIntegrand::DelayedIntegrand(MarkovIntegrand full, double tau)
    : full_(std::move(full)), tau_(tau) {
    if (!(tau >= 0.0) || tau > full_.model().horizon()) {
        std::ostringstream os;
        os << "delay must lie in [0, T], got " << tau;
        throw ValidationError(os.str());
    }
    grid_ = full_.model().grid();
}

double DelayedIntegrand::with_gap(double t, double gap, double y) const {
    const LevyModel& model = full_.model();
    return model.derivative_kernel(full_.claim(), model.horizon() - t + gap, y, full_.options());
}

double DelayedIntegrand::operator()(double t, double y) const {
    return with_gap(t, std::min(t, tau_), y);
}

double DelayedIntegrand::nested(double t, double y) const {
    return full_.model().increment_expectation([&](double z) { return full_(t, y + z); },
                                               std::min(t, tau_), full_.options());
}

std::size_t DelayedIntegrand::observed_index(std::size_t k) const {
    return delayed_index(grid_, k - 1, tau_);
}

double DelayedIntegrand::on_grid(std::size_t k, std::span<const double> path) const {
    const std::size_t j = observed_index(k);
    return with_gap(grid_[k - 1], grid_[k - 1] - grid_[j], path[j]);
}

double DelayedIntegrand::grid_residual_variance() const {
    const LevyModel& model = full_.model();
    std::map<std::size_t, double> second_moment;  // by observed index j
    double explained = 0.0;
    for (std::size_t k = 1; k < grid_.size(); ++k) {
        const std::size_t j = observed_index(k);
        auto it = second_moment.find(j);
        if (it == second_moment.end()) {
            const double tj = grid_[j];
            const double v = model.increment_expectation(
                [&](double y) {
                    const double c = with_gap(tj, 0.0, y);
                    return c * c;
                },
                tj, full_.options());
            it = second_moment.emplace(j, v).first;
        }
        explained += model.bracket_rate() * (grid_[k] - grid_[k - 1]) * it->second;
    }
    return full_.claim_variance() - explained;
}

// ---------------------------------------------------------------------------
// simulation

void simulate_path(const LevyModel& model, std::uint64_t seed, std::uint64_t path,
                   std::span<double> out) {
    RandomStream stream(seed, path);
    const double dt = model.step();
    out[0] = 0.0;
    if (model.kind() == LevyKind::Brownian) {
        const double sd = model.parameter() * std::sqrt(dt);
        for (std::size_t k = 1; k < out.size(); ++k) out[k] = out[k - 1] + sd * stream.normal();
    } else {
        const double mean = model.parameter() * dt;
        for (std::size_t k = 1; k < out.size(); ++k) {
            out[k] = out[k - 1] + static_cast<double>(stream.poisson(mean)) - mean;
        }
    }
}

std::size_t default_thread_count() {
    if (const char* env = std::getenv("GKWPI_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v > 0) return static_cast<std::size_t>(v);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

namespace {

constexpr std::size_t kChunk = 4096;

/// Runs body(chunk) for every chunk index on `threads` workers.
template <class Body>
void for_each_chunk(std::size_t chunks, std::size_t threads, Body body) {
    threads = std::max<std::size_t>(1, std::min(threads, chunks));
    if (threads == 1) {
        for (std::size_t c = 0; c < chunks; ++c) body(c);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    std::exception_ptr failure;
    std::atomic<bool> failed{false};
    for (std::size_t w = 0; w < threads; ++w) {
        pool.emplace_back([&] {
            for (std::size_t c; (c = next.fetch_add(1)) < chunks;) {
                if (failed.load()) return;
                try {
                    body(c);
                } catch (...) {
                    if (!failed.exchange(true)) failure = std::current_exception();
                    return;
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

/// Count, mean and centered sum of squares, merged with Chan's rule.
struct Moments {
    double n = 0.0;
    double mean = 0.0;
    double m2 = 0.0;

    void add(double x) {
        n += 1.0;
        const double d = x - mean;
        mean += d / n;
        m2 += d * (x - mean);
    }
    void merge(const Moments& o) {
        if (o.n == 0.0) return;
        const double total = n + o.n;
        const double d = o.mean - mean;
        mean += d * o.n / total;
        m2 += o.m2 + d * d * n * o.n / total;
        n = total;
    }
    Estimate estimate(std::string name) const {
        const double var = n > 1.0 ? m2 / (n - 1.0) : 0.0;
        return {std::move(name), mean, n > 0.0 ? std::sqrt(var / n) : 0.0};
    }
};

struct TestIntegrand {
    const char* name;
    double (*phi)(double t, double tau, double y);
};

constexpr TestIntegrand kBattery[] = {
    {"zero", [](double, double, double) { return 0.0; }},
    {"one", [](double, double, double) { return 1.0; }},
    {"observed", [](double, double, double y) { return y; }},
    {"observed_squared", [](double, double, double y) { return y * y; }},
    {"cos_observed", [](double, double, double y) { return std::cos(y); }},
    {"after_delay", [](double t, double tau, double) { return t >= tau ? 1.0 : 0.0; }},
};

}  // namespace

PathBatch simulate_paths(const LevyModel& model, std::size_t paths, std::uint64_t seed,
                         std::size_t threads) {
    if (paths == 0) throw ValidationError("simulate_paths: need at least one path");
    PathBatch batch{model, seed, paths, {}};
    const std::size_t width = model.step_count() + 1;
    batch.values.assign(paths * width, 0.0);
    const std::size_t chunks = (paths + kChunk - 1) / kChunk;
    for_each_chunk(chunks, threads == 0 ? default_thread_count() : threads, [&](std::size_t c) {
        const std::size_t end = std::min(paths, (c + 1) * kChunk);
        for (std::size_t p = c * kChunk; p < end; ++p) {
            simulate_path(model, seed, p, {batch.values.data() + p * width, width});
        }
    });
    return batch;
}

double Estimate::z_score(double target) const {
    const double d = mean - target;
    if (standard_error > 0.0) return d / standard_error;
    return d == 0.0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), d);
}

McReport mc_verify_decomposition(const DelayedIntegrand& c, std::size_t paths, std::uint64_t seed,
                                 const McOptions& options) {
    if (paths < 2) throw ValidationError("mc_verify_decomposition: need at least two paths");
    const MarkovIntegrand& full = c.full();
    const LevyModel& model = full.model();
    const std::size_t steps = model.step_count();
    const std::vector<double> grid = model.grid();
    const double u0 = full.claim_mean();
    const double scale = std::max(1.0, std::sqrt(full.claim_variance() + u0 * u0));

    constexpr std::size_t kTests = std::size(kBattery);
    const double shift = options.perturbation * scale;
    // theta = c + delta * g(y): (+shift, 1), (-shift, 1), (+shift, cos y)
    constexpr std::size_t kShifts = 3;

    struct ChunkStats {
        Moments residual;
        Moments orth[kTests];
        Moments dom[kShifts];
    };
    const std::size_t chunks = (paths + kChunk - 1) / kChunk;
    std::vector<ChunkStats> stats(chunks);

    for_each_chunk(chunks, options.threads == 0 ? default_thread_count() : options.threads,
                   [&](std::size_t ch) {
                       std::vector<double> path(steps + 1);
                       ChunkStats& s = stats[ch];
                       const std::size_t end = std::min(paths, (ch + 1) * kChunk);
                       for (std::size_t p = ch * kChunk; p < end; ++p) {
                           simulate_path(model, seed, p, path);
                           double hedge = 0.0;
                           double tests[kTests] = {};
                           double moves[kShifts] = {};
                           for (std::size_t k = 1; k <= steps; ++k) {
                               const double dm = path[k] - path[k - 1];
                               const double y = path[c.observed_index(k)];
                               hedge += c.on_grid(k, path) * dm;
                               for (std::size_t f = 0; f < kTests; ++f) {
                                   tests[f] += kBattery[f].phi(grid[k - 1], c.tau(), y) * dm;
                               }
                               moves[0] += dm;
                               moves[2] += std::cos(y) * dm;
                           }
                           moves[1] = -moves[0];
                           const double r = full.claim()(path[steps]) - u0 - hedge;
                           s.residual.add(r * r);
                           for (std::size_t f = 0; f < kTests; ++f) s.orth[f].add(r * tests[f]);
                           for (std::size_t d = 0; d < kShifts; ++d) {
                               const double alt = r - shift * moves[d];
                               s.dom[d].add(alt * alt - r * r);
                           }
                       }
                   });

    ChunkStats total;
    for (const ChunkStats& s : stats) {
        total.residual.merge(s.residual);
        for (std::size_t f = 0; f < kTests; ++f) total.orth[f].merge(s.orth[f]);
        for (std::size_t d = 0; d < kShifts; ++d) total.dom[d].merge(s.dom[d]);
    }

    McReport report;
    report.model = std::string(to_string(model.kind()));
    report.tau = c.tau();
    report.paths = paths;
    report.seed = seed;
    report.claim_mean = u0;
    report.residual_variance = total.residual.estimate("residual_variance");
    report.grid_oracle = c.grid_residual_variance();
    const double band = options.sigma_band;
    report.oracle_ok = std::abs(report.residual_variance.z_score(report.grid_oracle)) <= band;
    report.orthogonality_ok = true;
    for (std::size_t f = 0; f < kTests; ++f) {
        report.orthogonality.push_back(total.orth[f].estimate(kBattery[f].name));
        report.orthogonality_ok =
            report.orthogonality_ok && std::abs(report.orthogonality.back().z_score()) <= band;
    }
    static constexpr const char* kShiftNames[kShifts] = {"shift_up", "shift_down", "shift_cos"};
    report.dominance_ok = true;
    for (std::size_t d = 0; d < kShifts; ++d) {
        report.dominance.push_back(total.dom[d].estimate(kShiftNames[d]));
        report.dominance_ok = report.dominance_ok && report.dominance.back().z_score() >= -band;
    }
    return report;
}

// ---------------------------------------------------------------------------
// finite discretization of the compensated Poisson model

PoissonDiscretization discretize_poisson(const LevyModel& model, std::size_t max_jumps,
                                         double tau) {
    if (model.kind() != LevyKind::CompensatedPoisson) {
        throw ValidationError("discretize_poisson: model is not compensated Poisson");
    }
    const std::size_t steps = model.step_count();
    const std::size_t base = max_jumps + 1;
    double atoms_d = std::pow(static_cast<double>(base), static_cast<double>(steps));
    if (atoms_d > 4096.0) {
        std::ostringstream os;
        os << "discretize_poisson: " << atoms_d << " atoms exceed the limit of 4096";
        throw ValidationError(os.str());
    }
    const auto atoms = static_cast<std::size_t>(atoms_d);

    const double mu = model.parameter() * model.step();
    std::vector<double> pmf = poisson_pmf(mu, max_jumps);
    double kept = 0.0;
    for (double p : pmf) kept += p;
    for (double& p : pmf) p /= kept;
    double mean = 0.0;
    for (std::size_t n = 0; n < base; ++n) mean += pmf[n] * static_cast<double>(n);
    double var = 0.0;
    double third = 0.0;
    for (std::size_t n = 0; n < base; ++n) {
        const double d = static_cast<double>(n) - mean;
        var += pmf[n] * d * d;
        third += pmf[n] * d * d * d;
    }

    // Atom a has jump count digit_s(a) at step s (most significant first).
    std::vector<double> prob(atoms, 1.0);
    std::vector<std::string> labels(atoms);
    std::vector<std::vector<double>> rows(steps + 1, std::vector<double>(atoms, 0.0));
    std::vector<std::vector<long long>> prefix(steps + 1, std::vector<long long>(atoms, 0));
    for (std::size_t a = 0; a < atoms; ++a) {
        std::size_t rest = a;
        std::vector<std::size_t> digits(steps);
        for (std::size_t s = steps; s-- > 0;) {
            digits[s] = rest % base;
            rest /= base;
        }
        long long code = 0;
        for (std::size_t s = 0; s < steps; ++s) {
            prob[a] *= pmf[digits[s]];
            rows[s + 1][a] = rows[s][a] + static_cast<double>(digits[s]) - mean;
            code = code * static_cast<long long>(base) + static_cast<long long>(digits[s]);
            prefix[s + 1][a] = code;
            labels[a] += (s ? "-" : "n") + std::to_string(digits[s]);
        }
    }
    std::vector<Partition> f;
    for (std::size_t k = 0; k <= steps; ++k) f.emplace_back(prefix[k]);

    FiniteFilteredSpace base_space(prob, model.grid(), f, f, std::nullopt, labels);
    FiniteFilteredSpace space = delayed_filtration(base_space, DelaySpec{tau});
    MartingaleProcess m = make_martingale(
        space, GridProcess::from_rows(rows, Measurability::Adapted, Info::F));

    return PoissonDiscretization{std::move(space), std::move(m), 1.0 - kept, var, third};
}

GridConsistencyReport poisson_grid_consistency(const DelayedIntegrand& c, std::size_t max_jumps) {
    const LevyModel& model = c.full().model();
    PoissonDiscretization disc = discretize_poisson(model, max_jumps, c.tau());
    const FiniteFilteredSpace& space = disc.space;
    const MartingaleProcess& m = disc.martingale;

    std::vector<double> xi(space.atom_count());
    for (std::size_t i = 0; i < xi.size(); ++i) xi[i] = c.full().claim()(m.process(space.step_count(), i));
    const GkwDecomposition dec = gkw_projection(space, m, xi, Info::H);

    GridConsistencyReport report;
    double c_max = 0.0;
    std::vector<double> path(space.index_count());
    for (std::size_t i = 0; i < space.atom_count(); ++i) {
        for (std::size_t k = 0; k < space.index_count(); ++k) path[k] = m.process(k, i);
        for (std::size_t k = 1; k < space.index_count(); ++k) {
            if (!is_charged(space, m, Info::H, k, i)) continue;
            const double target = c.on_grid(k, path);
            c_max = std::max(c_max, std::abs(target));
            report.max_difference =
                std::max(report.max_difference, std::abs(dec.integrand(k, i) - target));
        }
    }
    const double mu = model.parameter() * model.step();
    const double level = std::max(1.0, c_max);
    report.truncation_budget = 10.0 *
                               (std::abs(disc.step_variance / mu - 1.0) +
                                std::abs(disc.step_third_moment / mu - 1.0) + disc.truncated_mass) *
                               level;
    report.grid_budget = model.step() * level;
    report.within_budget = report.max_difference <= report.truncation_budget + report.grid_budget;
    return report;
}

}  // namespace gkwpi
