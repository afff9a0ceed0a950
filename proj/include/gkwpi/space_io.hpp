// SPDX-License-Identifier: MIT
/// @file space_io.hpp
/// @brief JSON description of a finite filtered space, its martingale and an
///        optional claim. The schema is documented in docs/space_schema.md.
#pragma once

#include "gkwpi/filtered_space.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace gkwpi {

struct SpaceDocument {
    FiniteFilteredSpace space;
    MartingaleProcess martingale;
    std::optional<std::vector<double>> claim;      ///< per-atom values
    std::optional<std::string> claim_expression;   ///< h(M_T) source text
};

/// Parses and validates (validate_space, martingale property). Errors are
/// ValidationError / MeasurabilityError naming the field, index or block.
SpaceDocument parse_space(std::string_view json_text);

SpaceDocument load_space(const std::filesystem::path& path);

/// Inverse of parse_space for a space, its martingale and an optional claim.
std::string space_to_json(const FiniteFilteredSpace& space, const MartingaleProcess& m,
                          const std::optional<std::vector<double>>& claim = std::nullopt);

}  // namespace gkwpi
