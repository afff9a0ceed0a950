// SPDX-License-Identifier: MIT
#include "gkwpi/partition.hpp"

#include "gkwpi/errors.hpp"

#include <map>
#include <string>
#include <utility>

namespace gkwpi {

Partition::Partition(const std::vector<long long>& labels) {
    std::map<long long, std::size_t> canonical;
    labels_.reserve(labels.size());
    for (long long raw : labels) {
        if (raw < 0) {
            throw ValidationError("partition label must be non-negative, got " + std::to_string(raw));
        }
        auto [it, inserted] = canonical.try_emplace(raw, canonical.size());
        labels_.push_back(it->second);
    }
    block_count_ = canonical.size();
}

Partition Partition::trivial(std::size_t atoms) {
    return Partition(std::vector<long long>(atoms, 0));
}

Partition Partition::discrete(std::size_t atoms) {
    std::vector<long long> labels(atoms);
    for (std::size_t i = 0; i < atoms; ++i) labels[i] = static_cast<long long>(i);
    return Partition(labels);
}

Partition Partition::join(const Partition& a, const Partition& b) {
    if (a.atom_count() != b.atom_count()) {
        throw ValidationError("partition join: atom counts differ");
    }
    std::map<std::pair<std::size_t, std::size_t>, long long> pairs;
    std::vector<long long> labels(a.atom_count());
    for (std::size_t i = 0; i < a.atom_count(); ++i) {
        auto key = std::make_pair(a.block_of(i), b.block_of(i));
        auto [it, inserted] = pairs.try_emplace(key, static_cast<long long>(pairs.size()));
        labels[i] = it->second;
    }
    return Partition(labels);
}

bool Partition::refines(const Partition& coarser) const {
    if (coarser.atom_count() != atom_count()) return false;
    constexpr std::size_t unset = static_cast<std::size_t>(-1);
    std::vector<std::size_t> image(block_count_, unset);
    for (std::size_t i = 0; i < labels_.size(); ++i) {
        std::size_t& target = image[labels_[i]];
        if (target == unset) {
            target = coarser.block_of(i);
        } else if (target != coarser.block_of(i)) {
            return false;
        }
    }
    return true;
}

std::vector<std::vector<std::size_t>> Partition::blocks() const {
    std::vector<std::vector<std::size_t>> out(block_count_);
    for (std::size_t i = 0; i < labels_.size(); ++i) out[labels_[i]].push_back(i);
    return out;
}

std::vector<double> block_masses(const Partition& partition, std::span<const double> prob) {
    std::vector<double> mass(partition.block_count(), 0.0);
    for (std::size_t i = 0; i < partition.atom_count(); ++i) mass[partition.block_of(i)] += prob[i];
    return mass;
}

std::vector<double> block_means(std::span<const double> x, const Partition& partition,
                                std::span<const double> prob) {
    std::vector<double> num(partition.block_count(), 0.0);
    std::vector<double> den(partition.block_count(), 0.0);
    for (std::size_t i = 0; i < partition.atom_count(); ++i) {
        num[partition.block_of(i)] += prob[i] * x[i];
        den[partition.block_of(i)] += prob[i];
    }
    for (std::size_t b = 0; b < num.size(); ++b) num[b] /= den[b];
    return num;
}

std::vector<double> conditional_expectation(std::span<const double> x, const Partition& partition,
                                            std::span<const double> prob) {
    if (x.size() != partition.atom_count() || prob.size() != partition.atom_count()) {
        throw ValidationError("conditional_expectation: partition does not cover the atoms");
    }
    const auto means = block_means(x, partition, prob);
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = means[partition.block_of(i)];
    return out;
}

}  // namespace gkwpi
