// SPDX-License-Identifier: MIT
#include "gkwpi/filtered_space.hpp"

#include "gkwpi/errors.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <utility>

namespace gkwpi {

std::string_view to_string(Info info) {
    switch (info) {
        case Info::F: return "F";
        case Info::H: return "H";
        case Info::FM: return "FM";
    }
    return "?";
}

namespace {

void check_track(const std::vector<Partition>& track, std::size_t indices, std::size_t atoms,
                 std::string_view name) {
    if (track.size() != indices) {
        std::ostringstream os;
        os << "filtration " << name << " has " << track.size() << " partitions, grid has "
           << indices << " points";
        throw ValidationError(os.str());
    }
    for (std::size_t k = 0; k < track.size(); ++k) {
        if (track[k].atom_count() != atoms) {
            std::ostringstream os;
            os << "filtration " << name << " at index " << k << " labels " << track[k].atom_count()
               << " atoms, expected " << atoms;
            throw ValidationError(os.str());
        }
    }
}

}  // namespace

FiniteFilteredSpace::FiniteFilteredSpace(std::vector<double> probabilities, std::vector<double> grid,
                                         std::vector<Partition> full,
                                         std::vector<Partition> observed,
                                         std::optional<std::vector<Partition>> price,
                                         std::vector<std::string> labels)
    : prob_(std::move(probabilities)),
      grid_(std::move(grid)),
      full_(std::move(full)),
      observed_(std::move(observed)),
      price_(std::move(price)),
      labels_(std::move(labels)) {
    if (prob_.empty()) throw ValidationError("space has no atoms");
    if (grid_.empty()) throw ValidationError("space has an empty time grid");
    for (std::size_t i = 0; i < prob_.size(); ++i) {
        if (!(prob_[i] > 0.0) || !std::isfinite(prob_[i])) {
            std::ostringstream os;
            os << "atom " << i << " has non-positive probability " << prob_[i];
            throw ValidationError(os.str());
        }
    }
    check_track(full_, grid_.size(), prob_.size(), "F");
    check_track(observed_, grid_.size(), prob_.size(), "H");
    if (price_) check_track(*price_, grid_.size(), prob_.size(), "FM");
    if (labels_.empty()) {
        labels_.reserve(prob_.size());
        for (std::size_t i = 0; i < prob_.size(); ++i) labels_.push_back("w" + std::to_string(i));
    } else if (labels_.size() != prob_.size()) {
        throw ValidationError("atom label count does not match atom count");
    }
}

const std::vector<Partition>& FiniteFilteredSpace::filtration(Info info) const {
    switch (info) {
        case Info::F: return full_;
        case Info::H: return observed_;
        case Info::FM:
            if (!price_) throw ValidationError("space has no price filtration FM");
            return *price_;
    }
    return full_;
}

FiniteFilteredSpace FiniteFilteredSpace::with_observed(std::vector<Partition> observed) const {
    return FiniteFilteredSpace(prob_, grid_, full_, std::move(observed), price_, labels_);
}

FiniteFilteredSpace FiniteFilteredSpace::with_price_filtration(std::vector<Partition> price) const {
    return FiniteFilteredSpace(prob_, grid_, full_, observed_, std::move(price), labels_);
}

double FiniteFilteredSpace::expectation(std::span<const double> x) const {
    double s = 0.0;
    for (std::size_t i = 0; i < prob_.size(); ++i) s += prob_[i] * x[i];
    return s;
}

double FiniteFilteredSpace::inner(std::span<const double> a, std::span<const double> b) const {
    double s = 0.0;
    for (std::size_t i = 0; i < prob_.size(); ++i) s += prob_[i] * a[i] * b[i];
    return s;
}

double FiniteFilteredSpace::norm(std::span<const double> x) const { return std::sqrt(inner(x, x)); }

std::vector<double> FiniteFilteredSpace::conditional(std::span<const double> x, Info info,
                                                     std::size_t k) const {
    return conditional_expectation(x, partition(info, k), prob_);
}

// ---------------------------------------------------------------------------
// validation

namespace {

void check_increasing(const std::vector<Partition>& track, std::string_view name,
                      std::vector<std::string>& out) {
    for (std::size_t k = 0; k + 1 < track.size(); ++k) {
        if (!track[k + 1].refines(track[k])) {
            std::ostringstream os;
            os << name << " not increasing: partition at index " << k + 1
               << " does not refine index " << k;
            out.push_back(os.str());
        }
    }
}

void check_coarser(const std::vector<Partition>& coarse, std::string_view coarse_name,
                   const std::vector<Partition>& fine, std::string_view fine_name,
                   std::vector<std::string>& out) {
    for (std::size_t k = 0; k < coarse.size(); ++k) {
        if (!fine[k].refines(coarse[k])) {
            std::ostringstream os;
            os << coarse_name << " not coarser than " << fine_name << " at index " << k;
            out.push_back(os.str());
        }
    }
}

}  // namespace

ValidationReport validate_space(const FiniteFilteredSpace& space) {
    ValidationReport report;
    auto& v = report.violations;

    const auto grid = space.grid();
    if (grid.front() != 0.0) v.push_back("grid does not start at 0");
    for (std::size_t k = 1; k < grid.size(); ++k) {
        if (!(grid[k] > grid[k - 1])) {
            std::ostringstream os;
            os << "grid not strictly increasing at index " << k;
            v.push_back(os.str());
        }
    }

    double total = 0.0;
    for (double p : space.probabilities()) total += p;
    if (std::abs(total - 1.0) > 1e-12) {
        std::ostringstream os;
        os.precision(17);
        os << "probabilities sum to " << total << ", not 1";
        v.push_back(os.str());
    }

    const auto& f = space.filtration(Info::F);
    const auto& h = space.filtration(Info::H);
    check_increasing(f, "F", v);
    check_increasing(h, "H", v);
    check_coarser(h, "H", f, "F", v);
    if (!f.back().separates_atoms()) v.push_back("F at the horizon does not separate all atoms");

    if (space.has_price_filtration()) {
        const auto& fm = space.filtration(Info::FM);
        check_increasing(fm, "FM", v);
        check_coarser(fm, "FM", f, "F", v);
        check_coarser(h, "H", fm, "FM", v);
    }
    return report;
}

void require_valid(const FiniteFilteredSpace& space) {
    const auto report = validate_space(space);
    if (report.ok()) return;
    std::ostringstream os;
    os << "invalid space:";
    for (const auto& msg : report.violations) os << "\n  - " << msg;
    throw ValidationError(os.str());
}

// ---------------------------------------------------------------------------
// GridProcess

GridProcess::GridProcess(std::size_t indices, std::size_t atoms, Measurability kind, Info filtration,
                         double fill)
    : indices_(indices), atoms_(atoms), kind_(kind), filtration_(filtration),
      values_(indices * atoms, fill) {}

GridProcess GridProcess::from_rows(const std::vector<std::vector<double>>& rows, Measurability kind,
                                   Info filtration) {
    if (rows.empty()) throw ValidationError("process has no grid indices");
    GridProcess out(rows.size(), rows.front().size(), kind, filtration);
    for (std::size_t k = 0; k < rows.size(); ++k) {
        if (rows[k].size() != out.atoms_) {
            std::ostringstream os;
            os << "process row " << k << " has " << rows[k].size() << " values, expected "
               << out.atoms_;
            throw ValidationError(os.str());
        }
        std::copy(rows[k].begin(), rows[k].end(), out.row(k).begin());
    }
    return out;
}

std::vector<double> GridProcess::increment(std::size_t k) const {
    std::vector<double> d(atoms_);
    for (std::size_t i = 0; i < atoms_; ++i) d[i] = (*this)(k, i) - (*this)(k - 1, i);
    return d;
}

GridProcess GridProcess::retagged(Measurability kind, Info filtration) const {
    GridProcess out = *this;
    out.kind_ = kind;
    out.filtration_ = filtration;
    return out;
}

std::vector<std::vector<double>> GridProcess::rows() const {
    std::vector<std::vector<double>> out;
    out.reserve(indices_);
    for (std::size_t k = 0; k < indices_; ++k) {
        auto r = row(k);
        out.emplace_back(r.begin(), r.end());
    }
    return out;
}

double GridProcess::max_abs() const {
    double m = 0.0;
    for (double v : values_) m = std::max(m, std::abs(v));
    return m;
}

namespace {

void require_same_shape(const GridProcess& a, const GridProcess& b) {
    if (a.index_count() != b.index_count() || a.atom_count() != b.atom_count()) {
        throw ValidationError("process shapes differ");
    }
}

template <class Op>
GridProcess combine(const GridProcess& a, const GridProcess& b, Op op) {
    require_same_shape(a, b);
    GridProcess out = a;
    for (std::size_t k = 0; k < a.index_count(); ++k) {
        for (std::size_t i = 0; i < a.atom_count(); ++i) out(k, i) = op(a(k, i), b(k, i));
    }
    return out;
}

}  // namespace

GridProcess operator+(const GridProcess& a, const GridProcess& b) {
    return combine(a, b, [](double x, double y) { return x + y; });
}

GridProcess operator-(const GridProcess& a, const GridProcess& b) {
    return combine(a, b, [](double x, double y) { return x - y; });
}

GridProcess operator*(double s, const GridProcess& a) {
    GridProcess out = a;
    for (std::size_t k = 0; k < a.index_count(); ++k) {
        for (double& v : out.row(k)) v *= s;
    }
    return out;
}

double max_abs_difference(const GridProcess& a, const GridProcess& b) {
    require_same_shape(a, b);
    double m = 0.0;
    for (std::size_t k = 0; k < a.index_count(); ++k) {
        for (std::size_t i = 0; i < a.atom_count(); ++i) m = std::max(m, std::abs(a(k, i) - b(k, i)));
    }
    return m;
}

// ---------------------------------------------------------------------------
// measurability

std::optional<std::string> measurability_violation(const FiniteFilteredSpace& space,
                                                   const GridProcess& x, double tol) {
    if (x.atom_count() != space.atom_count() || x.index_count() != space.index_count()) {
        return std::string("process shape does not match the space");
    }
    const auto& track = space.filtration(x.filtration());
    const double scaled = tol * std::max(1.0, x.max_abs());
    for (std::size_t k = 0; k < x.index_count(); ++k) {
        const std::size_t ref = (x.kind() == Measurability::Predictable && k > 0) ? k - 1 : k;
        const Partition& part = track[ref];
        std::vector<double> first(part.block_count(), 0.0);
        std::vector<bool> seen(part.block_count(), false);
        for (std::size_t i = 0; i < x.atom_count(); ++i) {
            const std::size_t b = part.block_of(i);
            if (!seen[b]) {
                seen[b] = true;
                first[b] = x(k, i);
            } else if (std::abs(x(k, i) - first[b]) > scaled) {
                std::ostringstream os;
                os << "process tagged "
                   << (x.kind() == Measurability::Predictable ? "predictable" : "adapted")
                   << " w.r.t. " << to_string(x.filtration()) << " varies at index " << k
                   << " within block " << b << " of the partition at index " << ref;
                return os.str();
            }
        }
    }
    return std::nullopt;
}

void require_measurable(const FiniteFilteredSpace& space, const GridProcess& x, std::string_view op,
                        double tol) {
    if (auto msg = measurability_violation(space, x, tol)) {
        throw MeasurabilityError(std::string(op) + ": " + *msg);
    }
}

double martingale_defect(const FiniteFilteredSpace& space, const GridProcess& x, Info info) {
    double worst = 0.0;
    for (std::size_t k = 1; k < x.index_count(); ++k) {
        const auto d = x.increment(k);
        for (double v : block_means(d, space.partition(info, k - 1), space.probabilities())) {
            worst = std::max(worst, std::abs(v));
        }
    }
    return worst;
}

// ---------------------------------------------------------------------------
// martingales and integrals

GridProcess predictable_covariation(const FiniteFilteredSpace& space, const GridProcess& a,
                                    const GridProcess& b) {
    GridProcess out(space.index_count(), space.atom_count(), Measurability::Predictable, Info::F);
    for (std::size_t k = 1; k < space.index_count(); ++k) {
        const auto da = a.increment(k);
        const auto db = b.increment(k);
        std::vector<double> prod(da.size());
        for (std::size_t i = 0; i < da.size(); ++i) prod[i] = da[i] * db[i];
        const auto inc = space.conditional(prod, Info::F, k - 1);
        for (std::size_t i = 0; i < da.size(); ++i) out(k, i) = out(k - 1, i) + inc[i];
    }
    return out;
}

MartingaleProcess make_martingale(const FiniteFilteredSpace& space, GridProcess values) {
    values = values.retagged(Measurability::Adapted, Info::F);
    require_measurable(space, values, "make_martingale");
    const double defect = martingale_defect(space, values, Info::F);
    if (defect > 1e-12 * std::max(1.0, values.max_abs())) {
        std::ostringstream os;
        os << "make_martingale: conditional increment mean " << defect
           << " violates the martingale property";
        throw ValidationError(os.str());
    }
    GridProcess bracket = predictable_covariation(space, values, values);
    return MartingaleProcess{std::move(values), std::move(bracket)};
}

GridProcess bracket_of_pair(const FiniteFilteredSpace& space, const MartingaleProcess& m,
                            const GridProcess& other) {
    return predictable_covariation(space, m.process, other);
}

GridProcess stochastic_integral(const FiniteFilteredSpace& space, const GridProcess& phi,
                                const MartingaleProcess& m) {
    if (phi.kind() != Measurability::Predictable) {
        throw MeasurabilityError("stochastic_integral: integrand is not tagged predictable");
    }
    require_measurable(space, phi, "stochastic_integral");
    GridProcess out(space.index_count(), space.atom_count(), Measurability::Adapted, Info::F);
    for (std::size_t k = 1; k < space.index_count(); ++k) {
        for (std::size_t i = 0; i < space.atom_count(); ++i) {
            out(k, i) = out(k - 1, i) + phi(k, i) * (m.process(k, i) - m.process(k - 1, i));
        }
    }
    return out;
}

GridProcess martingale_closure(const FiniteFilteredSpace& space, std::span<const double> terminal,
                               Info info) {
    GridProcess out(space.index_count(), space.atom_count(), Measurability::Adapted, info);
    for (std::size_t k = 0; k < space.index_count(); ++k) {
        const auto v = space.conditional(terminal, info, k);
        std::copy(v.begin(), v.end(), out.row(k).begin());
    }
    return out;
}

// ---------------------------------------------------------------------------
// delays and projections

std::size_t delayed_index(std::span<const double> grid, std::size_t k, double tau) {
    const double target = std::max(0.0, grid[k] - tau);
    const double slack = 1e-12 * std::max(1.0, grid.back());
    std::size_t j = 0;
    while (j + 1 <= k && grid[j + 1] <= target + slack) ++j;
    return j;
}

FiniteFilteredSpace delayed_filtration(const FiniteFilteredSpace& space, DelaySpec delay) {
    if (!(delay.tau >= 0.0)) {
        std::ostringstream os;
        os << "delayed_filtration: delay must be non-negative, got " << delay.tau;
        throw ValidationError(os.str());
    }
    const auto& f = space.filtration(Info::F);
    std::vector<Partition> h;
    h.reserve(f.size());
    for (std::size_t k = 0; k < f.size(); ++k) h.push_back(f[delayed_index(space.grid(), k, delay.tau)]);
    return space.with_observed(std::move(h));
}

GridProcess predictable_projection(const FiniteFilteredSpace& space, const GridProcess& x, Info info) {
    require_measurable(space, x, "predictable_projection");
    GridProcess out(space.index_count(), space.atom_count(), Measurability::Predictable, info);
    for (std::size_t k = 0; k < space.index_count(); ++k) {
        const auto v = space.conditional(x.row(k), info, k == 0 ? 0 : k - 1);
        std::copy(v.begin(), v.end(), out.row(k).begin());
    }
    return out;
}

GridProcess optional_projection(const FiniteFilteredSpace& space, const GridProcess& x, Info info) {
    require_measurable(space, x, "optional_projection");
    GridProcess out(space.index_count(), space.atom_count(), Measurability::Adapted, info);
    for (std::size_t k = 0; k < space.index_count(); ++k) {
        const auto v = space.conditional(x.row(k), info, k);
        std::copy(v.begin(), v.end(), out.row(k).begin());
    }
    return out;
}

}  // namespace gkwpi
