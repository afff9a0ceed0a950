// SPDX-License-Identifier: MIT
/// @file cli.hpp
/// @brief Batch front end: decompose | bsde | hedge | project | simulate | verify.
///
/// Exit codes: 0 success, 1 property violation, 2 configuration or schema error.
#pragma once

#include <cstdint>
#include <iosfwd>
#include <string_view>

namespace gkwpi::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitViolation = 1;
inline constexpr int kExitConfig = 2;

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// 64-bit FNV-1a, used for the config hash embedded in every JSON summary.
std::uint64_t fnv1a(std::string_view bytes);

}  // namespace gkwpi::cli
