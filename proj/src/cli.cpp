// SPDX-License-Identifier: MIT
#include "gkwpi/cli.hpp"

#include "gkwpi/bsde.hpp"
#include "gkwpi/claim_expression.hpp"
#include "gkwpi/errors.hpp"
#include "gkwpi/gkw.hpp"
#include "gkwpi/hedging.hpp"
#include "gkwpi/levy_models.hpp"
#include "gkwpi/projections.hpp"
#include "gkwpi/space_io.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace gkwpi::cli {

std::uint64_t fnv1a(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

namespace {

namespace fs = std::filesystem;
using ordered = nlohmann::ordered_json;

/// A property check failed; maps to exit code 1.
struct Violation {
    std::string what;
};

struct RunConfig {
    std::string command;
    std::string space;
    std::string claim;
    std::vector<std::string> parameter_args;
    std::map<std::string, double> parameters;
    std::optional<double> delay;
    std::optional<std::uint64_t> seed;
    std::size_t trials = 100;
    std::string out;
    double tolerance = 1e-10;
    std::size_t threads = 0;
    std::string model;
    double sigma = 1.0;
    double intensity = 1.0;
    double horizon = 1.0;
    double step = 1.0 / 64.0;
    std::size_t paths = 10000;
    std::size_t write_paths = 0;
    std::size_t max_jumps = 0;
    bool price_filtration = false;
};

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string hex(std::uint64_t v) {
    char buf[24];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open " + path.string());
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

void write_file(const fs::path& path, const std::string& content) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write " + path.string());
    out << content;
}

// ---------------------------------------------------------------------------
// configuration

std::optional<fs::path> find_config(int argc, const char* const* argv) {
    for (int i = 1; i < argc; ++i) {
        const std::string_view a = argv[i];
        if (a == "--config" && i + 1 < argc) return fs::path(argv[i + 1]);
        if (a.starts_with("--config=")) return fs::path(std::string(a.substr(9)));
    }
    return std::nullopt;
}

void apply_config_file(const fs::path& path, RunConfig& cfg) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(read_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError("config " + path.string() + ": " + e.what());
    }
    if (!doc.is_object()) throw ValidationError("config " + path.string() + ": expected an object");
    const fs::path base = path.parent_path();
    auto resolve = [&](const std::string& p) {
        const fs::path fp(p);
        return (fp.is_absolute() || base.empty() ? fp : base / fp).string();
    };
    try {
        for (const auto& [key, v] : doc.items()) {
            if (key == "space") cfg.space = resolve(v.get<std::string>());
            else if (key == "out") cfg.out = resolve(v.get<std::string>());
            else if (key == "claim") cfg.claim = v.get<std::string>();
            else if (key == "parameters") cfg.parameters = v.get<std::map<std::string, double>>();
            else if (key == "delay") cfg.delay = v.get<double>();
            else if (key == "seed") cfg.seed = v.get<std::uint64_t>();
            else if (key == "trials") cfg.trials = v.get<std::size_t>();
            else if (key == "tolerance") cfg.tolerance = v.get<double>();
            else if (key == "threads") cfg.threads = v.get<std::size_t>();
            else if (key == "model") cfg.model = v.get<std::string>();
            else if (key == "sigma") cfg.sigma = v.get<double>();
            else if (key == "intensity") cfg.intensity = v.get<double>();
            else if (key == "horizon") cfg.horizon = v.get<double>();
            else if (key == "step") cfg.step = v.get<double>();
            else if (key == "paths") cfg.paths = v.get<std::size_t>();
            else if (key == "write_paths") cfg.write_paths = v.get<std::size_t>();
            else if (key == "max_jumps") cfg.max_jumps = v.get<std::size_t>();
            else if (key == "price_filtration") cfg.price_filtration = v.get<bool>();
            else throw ValidationError("config " + path.string() + ": unknown key '" + key + "'");
        }
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError("config " + path.string() + ": " + e.what());
    }
}

void finalize(RunConfig& cfg) {
    for (const std::string& p : cfg.parameter_args) {
        const auto eq = p.find('=');
        if (eq == std::string::npos || eq == 0) {
            throw ValidationError("--param expects NAME=VALUE, got '" + p + "'");
        }
        try {
            std::size_t used = 0;
            const std::string value = p.substr(eq + 1);
            cfg.parameters[p.substr(0, eq)] = std::stod(value, &used);
            if (used != value.size()) throw std::invalid_argument(value);
        } catch (const std::exception&) {
            throw ValidationError("--param " + p + ": value is not a number");
        }
    }
    if (!(cfg.tolerance > 0.0)) throw ValidationError("tolerance must be positive");
    if (cfg.delay && !(*cfg.delay >= 0.0)) throw ValidationError("delay must be non-negative");
}

/// Canonical form of everything that influences results; excludes paths to
/// outputs and the thread count.
std::string config_hash(const RunConfig& cfg) {
    nlohmann::json c;
    c["command"] = cfg.command;
    if (!cfg.space.empty()) c["space_digest"] = hex(fnv1a(read_file(cfg.space)));
    c["claim"] = cfg.claim;
    c["parameters"] = cfg.parameters;
    c["delay"] = cfg.delay ? nlohmann::json(*cfg.delay) : nlohmann::json();
    c["seed"] = cfg.seed ? nlohmann::json(*cfg.seed) : nlohmann::json();
    c["trials"] = cfg.trials;
    c["tolerance"] = cfg.tolerance;
    c["model"] = cfg.model;
    c["sigma"] = cfg.sigma;
    c["intensity"] = cfg.intensity;
    c["horizon"] = cfg.horizon;
    c["step"] = cfg.step;
    c["paths"] = cfg.paths;
    c["write_paths"] = cfg.write_paths;
    c["max_jumps"] = cfg.max_jumps;
    c["price_filtration"] = cfg.price_filtration;
    return hex(fnv1a(c.dump()));
}

ordered summary_header(const RunConfig& cfg, bool uses_seed) {
    ordered s;
    s["command"] = cfg.command;
    s["config_hash"] = config_hash(cfg);
    s["seed"] = uses_seed && cfg.seed ? ordered(*cfg.seed) : ordered();
    return s;
}

fs::path require_out(const RunConfig& cfg) {
    if (cfg.out.empty()) throw ValidationError(cfg.command + ": --out is required");
    return cfg.out;
}

std::uint64_t require_seed(const RunConfig& cfg) {
    if (!cfg.seed) throw ValidationError(cfg.command + ": --seed is required for stochastic runs");
    return *cfg.seed;
}

// ---------------------------------------------------------------------------
// finite-space loading

struct Loaded {
    SpaceDocument doc;
    std::vector<double> xi;
};

Loaded load(const RunConfig& cfg) {
    if (cfg.space.empty()) throw ValidationError(cfg.command + ": --space is required");
    SpaceDocument doc = load_space(cfg.space);
    if (cfg.delay) {
        doc.space = delayed_filtration(doc.space, DelaySpec{*cfg.delay});
        require_valid(doc.space);
    }
    std::vector<double> xi;
    std::optional<std::string> expr;
    if (!cfg.claim.empty()) expr = cfg.claim;
    else if (doc.claim) xi = *doc.claim;
    else if (doc.claim_expression) expr = doc.claim_expression;
    else throw ValidationError(cfg.command + ": no claim given (use --claim or a 'claim' field)");
    if (expr) {
        const ClaimExpression h = ClaimExpression::parse(*expr, cfg.parameters);
        const auto terminal = doc.martingale.process.terminal();
        for (double x : terminal) xi.push_back(h(x));
    }
    for (std::size_t i = 0; i < xi.size(); ++i) {
        if (!std::isfinite(xi[i])) {
            throw ValidationError(cfg.command + ": claim is not finite on atom " + std::to_string(i));
        }
    }
    return {std::move(doc), std::move(xi)};
}

ordered per_h0_block(const FiniteFilteredSpace& space, std::span<const double> values) {
    const Partition& h0 = space.partition(Info::H, 0);
    if (h0.block_count() == 1) return values[0];
    ordered arr = ordered::array();
    for (double v : values) arr.push_back(v);
    return arr;
}

std::string long_header(const std::vector<std::string>& columns) {
    std::string h = "index,time,atom,label";
    for (const auto& c : columns) h += "," + c;
    return h + "\n";
}

/// One row per (index, atom) with the given process columns.
std::string long_csv(const FiniteFilteredSpace& space, const std::vector<std::string>& names,
                     const std::vector<const GridProcess*>& columns) {
    std::ostringstream os;
    os << long_header(names);
    for (std::size_t k = 0; k < space.index_count(); ++k) {
        for (std::size_t i = 0; i < space.atom_count(); ++i) {
            os << k << ',' << fmt(space.grid()[k]) << ',' << i << ',' << space.labels()[i];
            for (const GridProcess* c : columns) os << ',' << fmt((*c)(k, i));
            os << '\n';
        }
    }
    return os.str();
}

// ---------------------------------------------------------------------------
// commands

int cmd_decompose(const RunConfig& cfg, std::ostream& out) {
    const fs::path dir = require_out(cfg);
    const Loaded in = load(cfg);
    const FiniteFilteredSpace& space = in.doc.space;
    const MartingaleProcess& m = in.doc.martingale;
    const double scale = claim_scale(space, in.xi);

    const GkwDecomposition dec = gkw_projection(space, m, in.xi, Info::H);
    const GkwDecomposition dual = gkw_via_dual_projection(space, m, in.xi);
    const GridProcess integral = stochastic_integral(space, dec.integrand, m);
    GridProcess u0(space.index_count(), space.atom_count(), Measurability::Adapted, Info::H);
    for (std::size_t k = 0; k < space.index_count(); ++k) {
        for (std::size_t i = 0; i < space.atom_count(); ++i) u0(k, i) = dec.u0[i];
    }
    write_file(dir / "decomposition.csv",
               long_csv(space, {"u0", "integrand", "integral", "orthogonal"},
                        {&u0, &dec.integrand, &integral, &dec.orthogonal}));

    double u0_gap = 0.0;
    for (std::size_t i = 0; i < space.atom_count(); ++i) {
        u0_gap = std::max(u0_gap, std::abs(dec.u0[i] - dual.u0[i]));
    }
    const double o_gap = max_abs_difference(dec.orthogonal, dual.orthogonal);
    const double z_gap = integrand_distance_ae(space, m, dec.integrand, dual.integrand, Info::H);
    const OrthogonalityReport orth = orthogonality_check(space, m, dec.orthogonal.terminal());
    const double recon = reconstruction_error(space, m, in.xi, dec);
    const double o_norm = space.norm(dec.orthogonal.terminal());

    ordered s = summary_header(cfg, false);
    s["u0"] = per_h0_block(space, dec.u0);
    s["orthogonal_norm"] = o_norm;
    s["orthogonal_norm_squared"] = o_norm * o_norm;
    s["max_orthogonality_violation"] = orth.max_violation;
    s["worst_basis_index"] = orth.worst_index;
    s["worst_basis_block"] = orth.worst_block;
    s["reconstruction_error"] = recon;
    s["route_gap"] = {{"u0", u0_gap}, {"integrand_ae", z_gap}, {"orthogonal", o_gap}};
    s["tolerance"] = cfg.tolerance * scale;
    write_file(dir / "summary.json", s.dump(2) + "\n");

    out << "decompose: u0 " << fmt(dec.u0[0]) << ", |O_T|^2 " << fmt(o_norm * o_norm)
        << ", max orthogonality violation " << fmt(orth.max_violation) << "\n";
    const double tol = cfg.tolerance * scale;
    if (recon > tol) throw Violation{"decompose: reconstruction error " + fmt(recon)};
    if (orth.max_violation > tol) {
        throw Violation{"decompose: orthogonality violated at index " +
                        std::to_string(orth.worst_index) + ", block " +
                        std::to_string(orth.worst_block)};
    }
    if (std::max({u0_gap, o_gap, z_gap}) > tol) {
        throw Violation{"decompose: the projection and dual-projection routes disagree"};
    }
    return kExitOk;
}

int cmd_bsde(const RunConfig& cfg, std::ostream& out) {
    const fs::path dir = require_out(cfg);
    const Loaded in = load(cfg);
    const FiniteFilteredSpace& space = in.doc.space;
    const MartingaleProcess& m = in.doc.martingale;
    const BsdeSolution sol = solve_linear_bsde(space, m, in.xi);

    std::ostringstream os;
    os << "block,atom,label";
    for (std::size_t k = 0; k < space.index_count(); ++k) os << ",k" << k;
    os << '\n';
    const std::pair<const char*, const GridProcess*> blocks[] = {
        {"Y", &sol.y}, {"Z", &sol.z}, {"O", &sol.o}};
    for (const auto& [name, proc] : blocks) {
        for (std::size_t i = 0; i < space.atom_count(); ++i) {
            os << name << ',' << i << ',' << space.labels()[i];
            for (std::size_t k = 0; k < space.index_count(); ++k) os << ',' << fmt((*proc)(k, i));
            os << '\n';
        }
    }
    write_file(dir / "bsde.csv", os.str());

    const double residual = bsde_residual(space, m, in.xi, sol);
    const double orth = orthogonality_check(space, m, sol.o.terminal()).max_violation;
    ordered s = summary_header(cfg, false);
    s["y0"] = per_h0_block(space, sol.y.row(0));
    s["residual"] = residual;
    s["max_orthogonality_violation"] = orth;
    write_file(dir / "summary.json", s.dump(2) + "\n");

    out << "bsde: residual " << fmt(residual) << "\n";
    const double tol = cfg.tolerance * claim_scale(space, in.xi);
    if (residual > tol) throw Violation{"bsde: equation residual " + fmt(residual)};
    if (orth > tol) throw Violation{"bsde: orthogonality violated"};
    return kExitOk;
}

int cmd_hedge(const RunConfig& cfg, std::ostream& out) {
    const fs::path dir = require_out(cfg);
    const Loaded in = load(cfg);
    const FiniteFilteredSpace& space = in.doc.space;
    const MartingaleProcess& m = in.doc.martingale;

    HedgingStrategy strategy;
    std::optional<PriceFiltrationHedge> fm;
    if (cfg.price_filtration) {
        fm = optimal_strategy_fm(space, m, in.xi);
        strategy = fm->strategy;
    } else {
        strategy = optimal_strategy(space, m, in.xi);
    }
    const StrategyAnalytics a = analyze_strategy(space, m, in.xi, strategy, cfg.tolerance);

    std::vector<std::string> names{"theta", "eta", "value", "cost", "risk"};
    std::vector<const GridProcess*> cols{&strategy.theta, &strategy.eta, &a.value, &a.cost, &a.risk};
    if (fm) {
        names.push_back("projected_orthogonal");
        cols.push_back(&fm->projected_orthogonal);
    }
    write_file(dir / "hedge.csv", long_csv(space, names, cols));

    ordered s = summary_header(cfg, false);
    s["variant"] = fm ? "price_filtration" : "full_filtration";
    s["initial_risk"] = per_h0_block(space, a.risk.row(0));
    s["replication_error"] = a.replication_error;
    s["replicates"] = a.replicates;
    s["cost_martingale_defect"] = a.cost_martingale_defect;
    s["mean_self_financing"] = a.mean_self_financing;
    if (fm) {
        s["projected_orthogonality"] = fm->orthogonality;
        s["projected_martingale_defect"] = fm->projected_martingale_defect;
    }
    write_file(dir / "summary.json", s.dump(2) + "\n");

    out << "hedge: R_0 " << fmt(a.risk(0, 0)) << ", replicates " << (a.replicates ? "yes" : "no")
        << "\n";
    if (!a.replicates) throw Violation{"hedge: strategy does not replicate the claim"};
    if (!a.mean_self_financing) throw Violation{"hedge: cost process is not a martingale"};
    return kExitOk;
}

int cmd_project(const RunConfig& cfg, std::ostream& out) {
    const fs::path dir = require_out(cfg);
    const Loaded in = load(cfg);
    const FiniteFilteredSpace& space = in.doc.space;
    const MartingaleProcess& m = in.doc.martingale;
    const DualProjectionRoute route = gkw_dual_route(space, m, in.xi);

    write_file(dir / "projection.csv",
               long_csv(space,
                        {"bracket", "bracket_dual", "weighted_bracket", "weighted_bracket_dual",
                         "density"},
                        {&m.bracket, &route.bracket_dual.process, &route.weighted_bracket.process,
                         &route.weighted_bracket_dual.process, &route.partial.integrand}));

    const double d_bracket = dual_projection_defect(space, m.bracket, route.bracket_dual.process);
    const double d_weighted = dual_projection_defect(space, route.weighted_bracket.process,
                                                     route.weighted_bracket_dual.process);
    ordered s = summary_header(cfg, false);
    s["bracket_defect"] = d_bracket;
    s["weighted_bracket_defect"] = d_weighted;
    s["expected_total_variation"] = route.weighted_bracket.expected_total_variation;
    write_file(dir / "summary.json", s.dump(2) + "\n");

    out << "project: defects " << fmt(d_bracket) << ", " << fmt(d_weighted) << "\n";
    const double tol = cfg.tolerance * std::max(1.0, route.weighted_bracket.process.max_abs());
    if (std::max(d_bracket, d_weighted) > tol) throw Violation{"project: dual projection identity fails"};
    return kExitOk;
}

DelayedIntegrand model_integrand(const RunConfig& cfg) {
    if (cfg.claim.empty()) throw ValidationError(cfg.command + ": --claim is required with --model");
    LevyKind kind;
    double parameter;
    if (cfg.model == "brownian") {
        kind = LevyKind::Brownian;
        parameter = cfg.sigma;
    } else if (cfg.model == "compensated_poisson" || cfg.model == "poisson") {
        kind = LevyKind::CompensatedPoisson;
        parameter = cfg.intensity;
    } else {
        throw ValidationError("unknown model '" + cfg.model + "' (brownian | compensated_poisson)");
    }
    const LevyModel model(kind, parameter, cfg.horizon, cfg.step);
    const ClaimExpression h = ClaimExpression::parse(cfg.claim, cfg.parameters);
    return DelayedIntegrand(MarkovIntegrand(model, h), cfg.delay.value_or(0.0));
}

ordered estimate_json(const Estimate& e, double target = 0.0) {
    return {{"name", e.name},
            {"mean", e.mean},
            {"standard_error", e.standard_error},
            {"z_score", e.z_score(target)}};
}

ordered mc_json(const McReport& r) {
    ordered j;
    j["model"] = r.model;
    j["tau"] = r.tau;
    j["paths"] = r.paths;
    j["claim_mean"] = r.claim_mean;
    j["residual_variance"] = estimate_json(r.residual_variance, r.grid_oracle);
    j["grid_oracle"] = r.grid_oracle;
    j["orthogonality"] = ordered::array();
    for (const auto& e : r.orthogonality) j["orthogonality"].push_back(estimate_json(e));
    j["dominance"] = ordered::array();
    for (const auto& e : r.dominance) j["dominance"].push_back(estimate_json(e));
    j["oracle_ok"] = r.oracle_ok;
    j["orthogonality_ok"] = r.orthogonality_ok;
    j["dominance_ok"] = r.dominance_ok;
    return j;
}

int cmd_simulate(const RunConfig& cfg, std::ostream& out) {
    const fs::path dir = require_out(cfg);
    const std::uint64_t seed = require_seed(cfg);
    if (cfg.model.empty()) throw ValidationError("simulate: --model is required");
    const DelayedIntegrand c = model_integrand(cfg);
    McOptions opts;
    opts.threads = cfg.threads;
    const McReport r = mc_verify_decomposition(c, cfg.paths, seed, opts);

    ordered s = summary_header(cfg, true);
    s["report"] = mc_json(r);
    write_file(dir / "mc_report.json", s.dump(2) + "\n");

    std::ostringstream csv;
    csv << "group,name,mean,standard_error,z_score\n";
    auto row = [&](const char* group, const Estimate& e, double target) {
        csv << group << ',' << e.name << ',' << fmt(e.mean) << ',' << fmt(e.standard_error) << ','
            << fmt(e.z_score(target)) << '\n';
    };
    row("residual", r.residual_variance, r.grid_oracle);
    for (const auto& e : r.orthogonality) row("orthogonality", e, 0.0);
    for (const auto& e : r.dominance) row("dominance", e, 0.0);
    write_file(dir / "mc_estimates.csv", csv.str());

    if (cfg.write_paths > 0) {
        const PathBatch batch = simulate_paths(c.full().model(), cfg.write_paths, seed, cfg.threads);
        std::ostringstream p;
        p << "path";
        for (std::size_t k = 0; k <= batch.model.step_count(); ++k) p << ",k" << k;
        p << '\n';
        for (std::size_t i = 0; i < batch.paths; ++i) {
            p << i;
            for (double v : batch.path(i)) p << ',' << fmt(v);
            p << '\n';
        }
        write_file(dir / "paths.csv", p.str());
    }

    out << "simulate: residual variance " << fmt(r.residual_variance.mean) << " +- "
        << fmt(r.residual_variance.standard_error) << " (grid oracle " << fmt(r.grid_oracle)
        << ")\n";
    if (!(r.oracle_ok && r.orthogonality_ok && r.dominance_ok)) {
        throw Violation{"simulate: Monte Carlo estimates fall outside the 3 s.e. band"};
    }
    return kExitOk;
}

struct CheckList {
    ordered items = ordered::array();
    bool all = true;

    void add(const std::string& name, double value, double tolerance, bool passed,
             std::ostream& out) {
        items.push_back({{"name", name}, {"value", value}, {"tolerance", tolerance}, {"passed", passed}});
        all = all && passed;
        out << (passed ? "PASS " : "FAIL ") << name << " value=" << fmt(value)
            << " tolerance=" << fmt(tolerance) << "\n";
    }
    void at_most(const std::string& name, double value, double tolerance, std::ostream& out) {
        add(name, value, tolerance, value <= tolerance, out);
    }
};

void verify_space(const RunConfig& cfg, CheckList& checks, ordered& s, std::ostream& out) {
    const Loaded in = load(cfg);
    const FiniteFilteredSpace& space = in.doc.space;
    const MartingaleProcess& m = in.doc.martingale;
    const double scale = claim_scale(space, in.xi);
    const double tol = cfg.tolerance * scale;

    const GkwDecomposition proj = gkw_projection(space, m, in.xi, Info::H);
    const DualProjectionRoute route = gkw_dual_route(space, m, in.xi);
    const GkwDecomposition& dual = route.partial;

    double u0_gap = 0.0;
    for (std::size_t i = 0; i < space.atom_count(); ++i) {
        u0_gap = std::max(u0_gap, std::abs(proj.u0[i] - dual.u0[i]));
    }
    checks.at_most("route_agreement_u0", u0_gap, tol, out);
    checks.at_most("route_agreement_integrand",
                   integrand_distance_ae(space, m, proj.integrand, dual.integrand), tol, out);
    checks.at_most("route_agreement_orthogonal", max_abs_difference(proj.orthogonal, dual.orthogonal),
                   tol, out);
    checks.at_most("reconstruction", reconstruction_error(space, m, in.xi, proj), tol, out);
    checks.at_most("orthogonality",
                   orthogonality_check(space, m, proj.orthogonal.terminal()).max_violation, tol, out);
    double h0_mean = 0.0;
    for (double v : space.conditional(proj.orthogonal.terminal(), Info::H, 0)) {
        h0_mean = std::max(h0_mean, std::abs(v));
    }
    checks.at_most("orthogonal_h0_mean", h0_mean, tol, out);

    const GridProcess integral = stochastic_integral(space, proj.integrand, m);
    std::vector<double> attained(space.atom_count());
    for (std::size_t i = 0; i < attained.size(); ++i) {
        attained[i] = proj.u0[i] + integral(space.step_count(), i);
    }
    const double o2 = space.inner(proj.orthogonal.terminal(), proj.orthogonal.terminal());
    const double pyth = std::abs(space.inner(in.xi, in.xi) - space.inner(attained, attained) - o2);
    checks.at_most("pythagoras", pyth, tol * scale, out);

    const GkwDecomposition full = gkw_full_information(space, m, in.xi);
    checks.at_most("full_information_strong_orthogonality",
                   orthogonal_bracket(space, m, full).max_abs(), tol, out);
    const double full_norm = space.norm(full.orthogonal.terminal());
    const double partial_norm = space.norm(proj.orthogonal.terminal());
    checks.add("refinement_monotone", full_norm - partial_norm, tol, full_norm <= partial_norm + tol,
               out);

    const BsdeSolution sol = solve_linear_bsde(space, m, in.xi);
    checks.at_most("bsde_residual", bsde_residual(space, m, in.xi, sol), tol, out);

    const double bracket_tol = cfg.tolerance * std::max(1.0, m.bracket.max_abs());
    checks.at_most("dual_projection_bracket",
                   dual_projection_defect(space, m.bracket, route.bracket_dual.process), bracket_tol,
                   out);
    checks.at_most("dual_projection_weighted_bracket",
                   dual_projection_defect(space, route.weighted_bracket.process,
                                          route.weighted_bracket_dual.process),
                   cfg.tolerance * std::max(1.0, route.weighted_bracket.process.max_abs()), out);

    const HedgingStrategy opt = optimal_strategy(space, m, in.xi);
    const StrategyAnalytics a = analyze_strategy(space, m, in.xi, opt, cfg.tolerance);
    checks.at_most("optimal_replicates", a.replication_error, tol, out);
    checks.at_most("optimal_mean_self_financing", a.cost_martingale_defect, tol, out);

    if (cfg.trials > 0) {
        const std::uint64_t seed = require_seed(cfg);
        const DominanceReport d = dominance_check(space, m, in.xi, cfg.trials, seed, cfg.tolerance);
        checks.add("risk_dominance", d.min_excess, d.tolerance, d.min_excess >= -d.tolerance, out);
        checks.at_most("risk_identity", d.max_identity_error, d.tolerance, out);
        checks.at_most("conditional_orthogonality", d.max_lemma_violation, d.tolerance, out);
        s["dominance"] = {{"trials", d.trials},
                          {"worst_trial", d.worst_trial},
                          {"worst_index", d.worst_index},
                          {"worst_block", d.worst_block}};
    }
    if (space.has_price_filtration()) {
        const PriceFiltrationHedge fm = optimal_strategy_fm(space, m, in.xi);
        checks.at_most("price_filtration_orthogonality", std::abs(fm.orthogonality), tol * scale, out);
        checks.at_most("price_filtration_martingale", fm.projected_martingale_defect, tol, out);
    }
}

void verify_model(const RunConfig& cfg, CheckList& checks, ordered& s, std::ostream& out) {
    const std::uint64_t seed = require_seed(cfg);
    const DelayedIntegrand c = model_integrand(cfg);
    McOptions opts;
    opts.threads = cfg.threads;
    const McReport r = mc_verify_decomposition(c, cfg.paths, seed, opts);
    s["report"] = mc_json(r);
    checks.add("mc_residual_variance", r.residual_variance.z_score(r.grid_oracle), 3.0, r.oracle_ok,
               out);
    for (const auto& e : r.orthogonality) {
        checks.add("mc_orthogonality_" + e.name, e.z_score(), 3.0, std::abs(e.z_score()) <= 3.0, out);
    }
    for (const auto& e : r.dominance) {
        checks.add("mc_dominance_" + e.name, e.z_score(), -3.0, e.z_score() >= -3.0, out);
    }
    if (c.full().model().kind() == LevyKind::CompensatedPoisson && cfg.max_jumps > 0) {
        const GridConsistencyReport g = poisson_grid_consistency(c, cfg.max_jumps);
        checks.add("poisson_grid_consistency", g.max_difference,
                   g.truncation_budget + g.grid_budget, g.within_budget, out);
    }
}

int cmd_verify(const RunConfig& cfg, std::ostream& out) {
    CheckList checks;
    const bool model_mode = !cfg.model.empty();
    ordered s = summary_header(cfg, model_mode || cfg.trials > 0);
    if (model_mode) verify_model(cfg, checks, s, out);
    else verify_space(cfg, checks, s, out);
    s["checks"] = checks.items;
    s["passed"] = checks.all;
    if (!cfg.out.empty()) write_file(fs::path(cfg.out) / "verify.json", s.dump(2) + "\n");
    out << (checks.all ? "verify: all checks passed\n" : "verify: property violations found\n");
    return checks.all ? kExitOk : kExitViolation;
}

void add_space_options(CLI::App* sub, RunConfig& cfg) {
    sub->add_option("--space", cfg.space, "Space description (JSON)");
    sub->add_option("--claim", cfg.claim, "Claim expression h(x), x = M_T");
    sub->add_option("--param", cfg.parameter_args, "Expression parameter NAME=VALUE");
    sub->add_option("--delay", cfg.delay, "Replace H by the delayed filtration with this tau");
    sub->add_option("--out", cfg.out, "Output directory");
    sub->add_option("--tolerance", cfg.tolerance, "Base tolerance, scaled by max(1, |xi|)");
}

void add_model_options(CLI::App* sub, RunConfig& cfg) {
    sub->add_option("--model", cfg.model, "brownian | compensated_poisson");
    sub->add_option("--sigma", cfg.sigma, "Brownian volatility");
    sub->add_option("--intensity", cfg.intensity, "Poisson intensity (unit jumps)");
    sub->add_option("--horizon", cfg.horizon, "Horizon T");
    sub->add_option("--step", cfg.step, "Grid step dt; T / dt must be an integer");
    sub->add_option("--paths", cfg.paths, "Monte Carlo paths");
    sub->add_option("--threads", cfg.threads, "Worker threads (default: GKWPI_THREADS or all cores)");
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    RunConfig cfg;
    CLI::App app{"Martingale decompositions, linear BSDEs and risk-minimizing hedges "
                 "under partial information"};
    app.name("gkwpi");
    app.require_subcommand(1, 1);
    std::string config_path;
    app.add_option("--config", config_path, "JSON file with option values; flags override it");

    auto* decompose = app.add_subcommand("decompose", "Decomposition CSV and JSON summary");
    auto* bsde = app.add_subcommand("bsde", "Solve the linear BSDE, write (Y, Z, O)");
    auto* hedge = app.add_subcommand("hedge", "Risk-minimizing strategy, value, cost and risk");
    auto* project = app.add_subcommand("project", "Dual projections of <M> and int H^F d<M>");
    auto* simulate = app.add_subcommand("simulate", "Monte Carlo check on a Levy model");
    auto* verify = app.add_subcommand("verify", "Run the property suite; exit 1 on violation");
    for (auto* sub : {decompose, bsde, hedge, project, simulate, verify}) {
        sub->add_option("--config", config_path, "JSON file with option values");
        add_space_options(sub, cfg);
    }
    hedge->add_flag("--price-filtration", cfg.price_filtration,
                    "Riskless position adapted to the space's FM track");
    for (auto* sub : {simulate, verify}) {
        add_model_options(sub, cfg);
        sub->add_option("--seed", cfg.seed, "Seed for every random draw");
    }
    simulate->add_option("--write-paths", cfg.write_paths, "Also write this many paths to paths.csv");
    verify->add_option("--trials", cfg.trials, "Random strategies for the dominance check");
    verify->add_option("--max-jumps", cfg.max_jumps,
                       "Poisson grid-consistency check with this jump truncation (0: skip)");

    try {
        if (const auto path = find_config(argc, argv)) apply_config_file(*path, cfg);
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitConfig;
    } catch (const Error& e) {
        err << "gkwpi: " << e.what() << "\n";
        return kExitConfig;
    }

    const CLI::App* chosen = app.get_subcommands().front();
    cfg.command = chosen->get_name();
    try {
        finalize(cfg);
        if (chosen == decompose) return cmd_decompose(cfg, out);
        if (chosen == bsde) return cmd_bsde(cfg, out);
        if (chosen == hedge) return cmd_hedge(cfg, out);
        if (chosen == project) return cmd_project(cfg, out);
        if (chosen == simulate) return cmd_simulate(cfg, out);
        return cmd_verify(cfg, out);
    } catch (const Violation& v) {
        err << "gkwpi " << cfg.command << ": " << v.what << "\n";
        return kExitViolation;
    } catch (const NotSubmartingaleError& e) {
        err << "gkwpi " << cfg.command << ": " << e.what() << "\n";
        return kExitViolation;
    } catch (const AbsoluteContinuityError& e) {
        err << "gkwpi " << cfg.command << ": " << e.what() << "\n";
        return kExitViolation;
    } catch (const Error& e) {
        err << "gkwpi " << cfg.command << ": " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        err << "gkwpi " << cfg.command << ": " << e.what() << "\n";
        return kExitConfig;
    }
}

}  // namespace gkwpi::cli
