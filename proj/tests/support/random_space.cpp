// SPDX-License-Identifier: MIT
#include "random_space.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace gkwpi::testkit {

namespace {

struct Node {
    std::size_t parent = 0;
    double value = 0.0;
    double prob = 1.0;
};

std::vector<Partition> identity_track(const std::vector<Partition>& f) { return f; }

/// Random coarsening of p: each block is sent to one of `labels` groups.
Partition coarsen(std::mt19937_64& rng, const Partition& p, std::size_t labels) {
    std::uniform_int_distribution<std::size_t> pick(0, labels - 1);
    std::vector<long long> group(p.block_count());
    for (auto& g : group) g = static_cast<long long>(pick(rng));
    std::vector<long long> out(p.atom_count());
    for (std::size_t i = 0; i < p.atom_count(); ++i) out[i] = group[p.block_of(i)];
    return Partition(out);
}

}  // namespace

FiniteFilteredSpace random_observed(std::mt19937_64& rng, const FiniteFilteredSpace& space,
                                    ObservedMode mode) {
    const auto& f = space.filtration(Info::F);
    const std::size_t n = space.atom_count();
    std::vector<Partition> h;
    switch (mode) {
        case ObservedMode::Full: h = identity_track(f); break;
        case ObservedMode::Trivial: h.assign(f.size(), Partition::trivial(n)); break;
        case ObservedMode::StepDelay: {
            std::uniform_int_distribution<std::size_t> lag(1, std::max<std::size_t>(1, f.size() - 1));
            const std::size_t d = lag(rng);
            for (std::size_t k = 0; k < f.size(); ++k) h.push_back(f[k >= d ? k - d : 0]);
            break;
        }
        case ObservedMode::TimeDelay: {
            std::uniform_real_distribution<double> tau(0.0, space.horizon());
            return delayed_filtration(space, DelaySpec{tau(rng)});
        }
        case ObservedMode::Signal: {
            std::uniform_int_distribution<std::size_t> lag_pick(0, 2);
            std::uniform_int_distribution<std::size_t> groups(1, 3);
            const std::size_t lag = lag_pick(rng);
            Partition current = coarsen(rng, f[0], groups(rng));
            h.push_back(current);
            for (std::size_t k = 1; k < f.size(); ++k) {
                const Partition signal = coarsen(rng, f[k >= lag ? k - lag : 0], groups(rng));
                current = Partition::join(current, signal);
                h.push_back(current);
            }
            break;
        }
    }
    return space.with_observed(std::move(h));
}

RandomInstance random_instance(std::mt19937_64& rng, const RandomSpaceOptions& options) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_int_distribution<std::size_t> step_pick(1, options.max_steps);
    std::size_t steps = step_pick(rng);

    std::vector<std::vector<Node>> levels(1);
    const std::size_t roots = options.allow_two_roots && unit(rng) < 0.3 ? 2 : 1;
    // Nodes that must split need roots * 2^steps <= max_atoms.
    const bool must_split = options.deterministic_bracket || !options.allow_flat_nodes;
    while (must_split && steps > 1 && (roots << steps) > options.max_atoms) --steps;
    for (std::size_t r = 0; r < roots; ++r) {
        levels[0].push_back({0, roots == 1 ? 0.0 : normal(rng), 1.0 / static_cast<double>(roots)});
    }

    std::vector<double> level_variance(steps + 1);
    for (auto& v : level_variance) v = 0.25 + 2.0 * unit(rng);

    for (std::size_t k = 1; k <= steps; ++k) {
        const auto& prev = levels[k - 1];
        std::vector<Node> next;
        // Every node gets `base` children; extra ones while the budget lasts.
        const std::size_t base = must_split ? 2 : 1;
        std::size_t budget = options.max_atoms - base * prev.size();
        for (std::size_t p = 0; p < prev.size(); ++p) {
            const std::size_t want = std::max(base, 1 + static_cast<std::size_t>(unit(rng) * 3.0));
            const std::size_t extra = std::min(want - base, budget);
            budget -= extra;
            const std::size_t children = base + extra;

            std::vector<double> q(children);
            for (auto& x : q) x = 0.2 + unit(rng);
            const double qs = std::accumulate(q.begin(), q.end(), 0.0);
            for (auto& x : q) x /= qs;

            std::vector<double> d(children, 0.0);
            const bool flat = options.allow_flat_nodes && !options.deterministic_bracket &&
                              children > 1 && unit(rng) < 0.1;
            if (children > 1 && !flat) {
                // Conditional spread of at least 0.05: the rounding error in E[dM | F]
                // is then negligible against E[dM^2 | F], so the orthogonal-basis
                // oracle stays exact to ~1e-14.
                double var = 0.0;
                while (var < 0.0025) {
                    for (auto& x : d) x = normal(rng);
                    double mean = 0.0;
                    for (std::size_t c = 0; c < children; ++c) mean += q[c] * d[c];
                    var = 0.0;
                    for (std::size_t c = 0; c < children; ++c) {
                        d[c] -= mean;
                        var += q[c] * d[c] * d[c];
                    }
                }
                if (options.deterministic_bracket) {
                    const double s = std::sqrt(level_variance[k] / var);
                    for (auto& x : d) x *= s;
                }
            }
            for (std::size_t c = 0; c < children; ++c) {
                next.push_back({p, prev[p].value + d[c], prev[p].prob * q[c]});
            }
        }
        levels.push_back(std::move(next));
    }

    const auto& leaves = levels.back();
    const std::size_t n = leaves.size();
    std::vector<double> prob(n);
    for (std::size_t i = 0; i < n; ++i) prob[i] = leaves[i].prob;
    const double total = std::accumulate(prob.begin(), prob.end(), 0.0);
    for (auto& p : prob) p /= total;

    // ancestor[k][i]: node index at level k above leaf i.
    std::vector<std::vector<std::size_t>> ancestor(steps + 1, std::vector<std::size_t>(n));
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t node = i;
        for (std::size_t k = steps + 1; k-- > 0;) {
            ancestor[k][i] = node;
            if (k > 0) node = levels[k][node].parent;
        }
    }
    std::vector<Partition> f;
    std::vector<std::vector<double>> rows(steps + 1, std::vector<double>(n));
    for (std::size_t k = 0; k <= steps; ++k) {
        std::vector<long long> labels(n);
        for (std::size_t i = 0; i < n; ++i) {
            labels[i] = static_cast<long long>(ancestor[k][i]);
            rows[k][i] = levels[k][ancestor[k][i]].value;
        }
        f.emplace_back(labels);
    }
    std::vector<double> grid(steps + 1, 0.0);
    for (std::size_t k = 1; k <= steps; ++k) grid[k] = grid[k - 1] + 0.2 + 1.3 * unit(rng);

    FiniteFilteredSpace full(prob, grid, f, f);
    const ObservedMode mode = static_cast<ObservedMode>(rng() % 5);
    FiniteFilteredSpace space = random_observed(rng, full, mode);
    MartingaleProcess m =
        make_martingale(space, GridProcess::from_rows(rows, Measurability::Adapted, Info::F));

    std::vector<double> xi(n);
    const auto kind = rng() % 3;
    const double strike = normal(rng);
    for (std::size_t i = 0; i < n; ++i) {
        const double x = rows[steps][i];
        if (kind == 0) xi[i] = 3.0 * normal(rng);
        else if (kind == 1) xi[i] = x * x + 0.5 * x;
        else xi[i] = std::max(x - strike, 0.0) + 0.1 * normal(rng);
    }

    static const char* const kModes[] = {"full", "trivial", "step-delay", "time-delay", "signal"};
    std::string description = std::to_string(n) + " atoms, " + std::to_string(steps) +
                              " steps, H " + kModes[static_cast<int>(mode)];
    return {std::move(space), std::move(m), std::move(xi), mode, std::move(description)};
}

std::vector<double> brute_conditional(const std::vector<double>& x,
                                      std::span<const std::size_t> labels,
                                      std::span<const double> prob) {
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        double mass = 0.0;
        double acc = 0.0;
        for (std::size_t j = 0; j < x.size(); ++j) {
            if (labels[j] == labels[i]) {
                mass += prob[j];
                acc += prob[j] * x[j];
            }
        }
        out[i] = acc / mass;
    }
    return out;
}

OracleDecomposition orthogonal_basis_oracle(const FiniteFilteredSpace& space,
                                            const MartingaleProcess& m,
                                            const std::vector<double>& xi, Info info) {
    const std::size_t n = space.atom_count();
    const auto prob = space.probabilities();
    OracleDecomposition out;
    out.u0 = brute_conditional(xi, space.partition(info, 0).labels(), prob);
    out.integrand.assign(space.index_count(), std::vector<double>(n, 0.0));
    std::vector<double> attained = out.u0;
    for (std::size_t k = 1; k < space.index_count(); ++k) {
        const auto labels = space.partition(info, k - 1).labels();
        for (std::size_t i = 0; i < n; ++i) {
            double num = 0.0;
            double den = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                if (labels[j] != labels[i]) continue;
                const double dm = m.process(k, j) - m.process(k - 1, j);
                num += prob[j] * xi[j] * dm;
                den += prob[j] * dm * dm;
            }
            out.integrand[k][i] = den > 0.0 ? num / den : 0.0;
        }
        for (std::size_t i = 0; i < n; ++i) {
            attained[i] += out.integrand[k][i] * (m.process(k, i) - m.process(k - 1, i));
        }
    }
    out.orthogonal_terminal.resize(n);
    for (std::size_t i = 0; i < n; ++i) out.orthogonal_terminal[i] = xi[i] - attained[i];
    return out;
}

DelayedWalk delayed_walk() {
    const std::vector<double> prob(4, 0.25);
    const std::vector<Partition> f{Partition::trivial(4), Partition({0, 0, 1, 1}),
                                   Partition::discrete(4)};
    const std::vector<Partition> h{f[0], f[0], f[1]};
    FiniteFilteredSpace space(prob, {0.0, 1.0, 2.0}, f, h, std::nullopt, {"uu", "ud", "du", "dd"});
    MartingaleProcess m = make_martingale(
        space, GridProcess::from_rows({{0, 0, 0, 0}, {1, 1, -1, -1}, {2, 0, 0, -2}},
                                      Measurability::Adapted, Info::F));
    return {std::move(space), std::move(m), {4.0, 0.0, 0.0, 4.0}};
}

CoinWalk coin_walk() {
    // Atom order: s1 in {+1, -1}, coin c in {1, 2}, s2 in {+, -}.
    std::vector<double> m1, m2;
    std::vector<long long> f1, fm1;
    std::vector<std::string> labels;
    for (int s1 : {1, -1}) {
        for (int c : {1, 2}) {
            for (int s2 : {1, -1}) {
                m1.push_back(s1);
                m2.push_back(s1 + s2 * c);
                f1.push_back((s1 > 0 ? 0 : 2) + (c - 1));
                fm1.push_back(s1 > 0 ? 0 : 1);
                labels.push_back(std::string(s1 > 0 ? "u" : "d") + std::to_string(c) +
                                 (s2 > 0 ? "u" : "d"));
            }
        }
    }
    const std::vector<double> prob(8, 0.125);
    const std::vector<Partition> f{Partition::trivial(8), Partition(f1), Partition::discrete(8)};
    std::vector<long long> m2_labels;
    for (double v : m2) m2_labels.push_back(static_cast<long long>(std::lround(v + 10.0)));
    const Partition fm2 = Partition::join(Partition(fm1), Partition(m2_labels));
    const std::vector<Partition> fm{Partition::trivial(8), Partition(fm1), fm2};
    const std::vector<Partition> h{fm[0], fm[0], fm[1]};
    FiniteFilteredSpace space(prob, {0.0, 1.0, 2.0}, f, h, fm, labels);
    MartingaleProcess m = make_martingale(
        space, GridProcess::from_rows({std::vector<double>(8, 0.0), m1, m2},
                                      Measurability::Adapted, Info::F));
    std::vector<double> xi;
    for (double v : m2) xi.push_back(v * v);
    return {std::move(space), std::move(m), std::move(xi)};
}

}  // namespace gkwpi::testkit
