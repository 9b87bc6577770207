#include "qca/classical.hpp"

#include <stdexcept>

namespace qca {

BitString eca_step(const BitString& bits, const std::array<int, 8>& table, BoundarySpec boundary) {
    const int n = static_cast<int>(bits.size());
    if (n == 0) return {};
    const BitString snapshot = bits;
    auto read = [&](int s) {
        if (s >= 0 && s < n) return snapshot[s];
        if (boundary.kind == BoundaryKind::periodic) return snapshot[((s % n) + n) % n];
        return boundary.pinned_bit();
    };
    BitString next(n);
    for (int s = 0; s < n; ++s) {
        const int config = (read(s - 1) << 2) | (read(s) << 1) | read(s + 1);
        next[s] = table[config];
    }
    return next;
}

std::vector<BitString> eca_evolve(const BitString& initial, int rule_number, int steps, BoundarySpec boundary) {
    if (steps < 0) throw std::invalid_argument("steps must be non-negative");
    for (int b : initial) {
        if (b != 0 && b != 1) throw std::domain_error("bits must be 0 or 1");
    }
    const auto table = decode_eca(rule_number);
    std::vector<BitString> rows{initial};
    rows.reserve(static_cast<std::size_t>(steps) + 1);
    for (int t = 0; t < steps; ++t) rows.push_back(eca_step(rows.back(), table, boundary));
    return rows;
}

}  // namespace qca
