// SPDX-License-Identifier: MIT
#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace gkwpi {

/// A partition of the atom set, stored as one block label per atom.
///
/// Labels are canonical: blocks are numbered 0, 1, ... in order of first
/// appearance, so two partitions are equal iff their label arrays are equal.
class Partition {
public:
    Partition() = default;

    /// Accepts arbitrary non-negative labels and renumbers them canonically.
    explicit Partition(const std::vector<long long>& labels);

    static Partition trivial(std::size_t atoms);
    static Partition discrete(std::size_t atoms);

    /// Coarsest partition refining both inputs.
    static Partition join(const Partition& a, const Partition& b);

    std::size_t atom_count() const noexcept { return labels_.size(); }
    std::size_t block_count() const noexcept { return block_count_; }
    std::size_t block_of(std::size_t atom) const { return labels_[atom]; }
    std::span<const std::size_t> labels() const noexcept { return labels_; }

    /// True iff every block of *this lies inside a single block of `coarser`.
    bool refines(const Partition& coarser) const;

    bool separates_atoms() const noexcept { return block_count_ == labels_.size(); }

    /// Atom indices grouped by block.
    std::vector<std::vector<std::size_t>> blocks() const;

    friend bool operator==(const Partition&, const Partition&) = default;

private:
    std::vector<std::size_t> labels_;
    std::size_t block_count_ = 0;
};

/// E[x | partition] under the atom weights `prob`.
std::vector<double> conditional_expectation(std::span<const double> x, const Partition& partition,
                                            std::span<const double> prob);

/// Block values of E[x | partition], indexed by block label.
std::vector<double> block_means(std::span<const double> x, const Partition& partition,
                                std::span<const double> prob);

/// Total probability of each block.
std::vector<double> block_masses(const Partition& partition, std::span<const double> prob);

}  // namespace gkwpi
