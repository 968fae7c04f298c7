#pragma once

#include <cstddef>
#include <string_view>

namespace evorl::evo {

/// Unit-cost insert/delete/substitute edit distance.
std::size_t edit_distance(std::string_view a, std::string_view b);

/// edit_distance / max(|a|, |b|); 0 when both are empty.
double lev_distance_norm(std::string_view a, std::string_view b);

}  // namespace evorl::evo
