#pragma once

// Classical elementary cellular automata (C_R) as a reference baseline.

#include <array>
#include <vector>

#include "qca/rules.hpp"

namespace qca {

using BitString = std::vector<int>;

/// One synchronous update: every site reads the pre-step snapshot. Sites past
/// the edge take the boundary's pinned value, or wrap for periodic chains.
BitString eca_step(const BitString& bits, const std::array<int, 8>& table, BoundarySpec boundary = {});

/// Returns steps + 1 rows; row 0 is `initial`.
std::vector<BitString> eca_evolve(const BitString& initial, int rule_number, int steps, BoundarySpec boundary = {});

}  // namespace qca
