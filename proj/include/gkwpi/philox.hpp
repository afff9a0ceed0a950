// SPDX-License-Identifier: MIT
/// @file philox.hpp
/// @brief Philox4x32-10 counter-based generator and per-stream sampling.
///
/// A (seed, stream) pair addresses an independent sequence: the seed is the
/// key, the stream id occupies the upper two counter words and the draw index
/// the lower two. Work split across threads stays bit-identical as long as each
/// logical unit (a path, a trial) owns its stream id.
#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace gkwpi {

struct Philox4x32 {
    using Counter = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    /// Ten-round bijection of the counter under the key.
    static Counter block(Counter counter, Key key) noexcept;
};

class RandomStream {
public:
    using result_type = std::uint32_t;

    RandomStream(std::uint64_t seed, std::uint64_t stream) noexcept;

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }
    result_type operator()() noexcept;

    /// Uniform on the open interval (0, 1) with 53 random bits.
    double uniform() noexcept;
    double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }
    /// Standard normal via Box-Muller.
    double normal() noexcept;
    /// Poisson(mean) by inversion, in chunks of mean <= 30.
    std::uint64_t poisson(double mean) noexcept;

private:
    void refill() noexcept;

    Philox4x32::Key key_;
    std::uint64_t stream_;
    std::uint64_t draw_ = 0;
    Philox4x32::Counter buffer_{};
    int used_ = 4;
    double spare_normal_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace gkwpi
