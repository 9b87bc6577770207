#include "qca/rules.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <optional>
#include <sstream>
#include <stdexcept>

namespace qca {

namespace {

void check_range(int r, int lo, int hi, const char* family) {
    if (r < lo || r > hi) {
        throw std::domain_error(std::string(family) + " rule number " + std::to_string(r) + " outside [" +
                                std::to_string(lo) + ", " + std::to_string(hi) + "]");
    }
}

template <std::size_t N>
std::array<int, N> binary_digits(int r) {
    std::array<int, N> c{};
    for (std::size_t i = 0; i < N; ++i) c[i] = (r >> i) & 1;
    return c;
}

template <std::size_t N>
int from_digits(const std::array<int, N>& c) {
    int r = 0;
    for (std::size_t i = 0; i < N; ++i) {
        if (c[i] != 0 && c[i] != 1) throw std::domain_error("rule coefficients must be 0 or 1");
        r |= c[i] << i;
    }
    return r;
}

double parse_double(std::string_view s) {
    double v = 0.0;
    std::istringstream in{std::string(s)};
    if (!(in >> v) || !in.eof()) throw std::invalid_argument("cannot parse number '" + std::string(s) + "'");
    return v;
}

int parse_int(std::string_view s) {
    int v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size()) {
        throw std::invalid_argument("cannot parse rule number '" + std::string(s) + "'");
    }
    return v;
}

}  // namespace

Matrix2 ActivationSpec::matrix() const {
    switch (kind) {
        case ActivationKind::hadamard:
            return pauli::hadamard();
        case ActivationKind::hadamard_phase: {
            const complex e = std::polar(1.0, angle);
            Matrix2 m;
            m << 1.0, e, 1.0, -e;
            return m / std::sqrt(2.0);
        }
        case ActivationKind::pauli_x:
            return pauli::x();
        case ActivationKind::exp_x:
            return std::cos(angle) * pauli::identity() - complex(0, std::sin(angle)) * pauli::x();
    }
    throw std::logic_error("unknown activation kind");
}

bool ActivationSpec::is_unitary() const {
    const Matrix2 m = matrix();
    return (m.adjoint() * m - Matrix2::Identity()).cwiseAbs().maxCoeff() <= kSingleApplyTolerance;
}

bool ActivationSpec::is_hermitian() const {
    const Matrix2 m = matrix();
    return (m - m.adjoint()).cwiseAbs().maxCoeff() <= kSingleApplyTolerance;
}

std::string ActivationSpec::to_string() const {
    std::ostringstream out;
    switch (kind) {
        case ActivationKind::hadamard: return "hadamard";
        case ActivationKind::hadamard_phase: out << "phase=" << angle; return out.str();
        case ActivationKind::pauli_x: return "paulix";
        case ActivationKind::exp_x: out << "expx=" << angle; return out.str();
    }
    return "?";
}

std::string BoundarySpec::to_string() const {
    switch (kind) {
        case BoundaryKind::fixed_zero: return "zero";
        case BoundaryKind::fixed_one: return "one";
        case BoundaryKind::periodic: return "periodic";
    }
    return "?";
}

BoundarySpec parse_boundary(std::string_view text) {
    if (text == "zero" || text == "fixed-zero") return {BoundaryKind::fixed_zero};
    if (text == "one" || text == "fixed-one") return {BoundaryKind::fixed_one};
    if (text == "periodic") return {BoundaryKind::periodic};
    throw std::invalid_argument("unknown boundary '" + std::string(text) + "' (zero, one, periodic)");
}

std::array<int, 8> decode_eca(int r) {
    check_range(r, 0, 255, "ECA");
    return binary_digits<8>(r);
}

std::array<int, 4> decode_t(int r) {
    check_range(r, 0, 15, "T");
    return binary_digits<4>(r);
}

std::array<int, 5> decode_f(int r) {
    check_range(r, 0, 31, "F");
    return binary_digits<5>(r);
}

int encode_eca(const std::array<int, 8>& c) { return from_digits(c); }
int encode_t(const std::array<int, 4>& c) { return from_digits(c); }
int encode_f(const std::array<int, 5>& c) { return from_digits(c); }

std::vector<double> RuleSpec::config_weights() const {
    switch (family) {
        case RuleFamily::digital_t:
        case RuleFamily::analog_t:
            // Configuration index 2m + n is exactly the bit position of c_mn.
            return {double(coefficients.at(0)), double(coefficients.at(1)), double(coefficients.at(2)),
                    double(coefficients.at(3))};
        case RuleFamily::analog_f: {
            std::vector<double> w(16);
            for (unsigned c = 0; c < 16; ++c) w[c] = coefficients.at(std::popcount(c));
            return w;
        }
        case RuleFamily::analog_r2_general: {
            std::vector<double> w(16);
            for (std::size_t c = 0; c < 16; ++c) w[c] = coefficients.at(c);
            return w;
        }
        case RuleFamily::classical_eca:
            break;
    }
    throw std::logic_error("classical rules have no quantum configuration table");
}

std::string RuleSpec::label() const {
    switch (family) {
        case RuleFamily::classical_eca: return "C" + std::to_string(rule_number);
        case RuleFamily::digital_t: return "T" + std::to_string(rule_number);
        case RuleFamily::analog_t: return "AT" + std::to_string(rule_number);
        case RuleFamily::analog_f: return "F" + std::to_string(rule_number);
        case RuleFamily::analog_r2_general: return "G" + std::to_string(rule_number);
    }
    return "?";
}

std::string RuleSpec::to_string() const {
    if (family == RuleFamily::classical_eca) return label() + "@" + boundary.to_string();
    return label() + ":" + activation.to_string() + "@" + boundary.to_string();
}

RuleSpec make_eca_rule(int r, BoundarySpec boundary) {
    const auto c = decode_eca(r);
    return {RuleFamily::classical_eca, r, 1, {c.begin(), c.end()}, ActivationSpec::pauli_x(), boundary};
}

RuleSpec make_digital_rule(int r, ActivationSpec activation, BoundarySpec boundary) {
    if (!activation.is_unitary()) throw std::logic_error("digital activation must be unitary");
    const auto c = decode_t(r);
    return {RuleFamily::digital_t, r, 1, {c.begin(), c.end()}, activation, boundary};
}

RuleSpec make_analog_t_rule(int r, ActivationSpec activation, BoundarySpec boundary) {
    if (!activation.is_hermitian()) throw std::logic_error("analog activation must be Hermitian");
    const auto c = decode_t(r);
    return {RuleFamily::analog_t, r, 1, {c.begin(), c.end()}, activation, boundary};
}

RuleSpec make_analog_f_rule(int r, ActivationSpec activation, BoundarySpec boundary) {
    if (!activation.is_hermitian()) throw std::logic_error("analog activation must be Hermitian");
    const auto c = decode_f(r);
    return {RuleFamily::analog_f, r, 2, {c.begin(), c.end()}, activation, boundary};
}

RuleSpec make_analog_r2_rule(int r, ActivationSpec activation, BoundarySpec boundary) {
    check_range(r, 0, 65535, "radius-2");
    if (!activation.is_hermitian()) throw std::logic_error("analog activation must be Hermitian");
    const auto c = binary_digits<16>(r);
    return {RuleFamily::analog_r2_general, r, 2, {c.begin(), c.end()}, activation, boundary};
}

RuleSpec parse_rule(std::string_view text, BoundarySpec boundary) {
    std::string_view head = text;
    std::string_view suffix;
    if (auto colon = text.find(':'); colon != std::string_view::npos) {
        head = text.substr(0, colon);
        suffix = text.substr(colon + 1);
    }
    if (head.empty()) throw std::invalid_argument("empty rule string");

    std::optional<ActivationSpec> activation;
    if (!suffix.empty()) {
        if (suffix == "hadamard") {
            activation = ActivationSpec::hadamard();
        } else if (suffix == "paulix") {
            activation = ActivationSpec::pauli_x();
        } else if (suffix.starts_with("phase=")) {
            activation = ActivationSpec::hadamard_phase(parse_double(suffix.substr(6)));
        } else if (suffix.starts_with("expx=")) {
            activation = ActivationSpec::exp_x(parse_double(suffix.substr(5)));
        } else {
            throw std::invalid_argument("unknown activation '" + std::string(suffix) + "'");
        }
    }

    if (head.starts_with("AT")) {
        return make_analog_t_rule(parse_int(head.substr(2)), activation.value_or(ActivationSpec::pauli_x()), boundary);
    }
    const char family = head.front();
    const int r = parse_int(head.substr(1));
    switch (family) {
        case 'C':
            if (activation) throw std::invalid_argument("classical rules take no activation");
            return make_eca_rule(r, boundary);
        case 'T':
            return make_digital_rule(r, activation.value_or(ActivationSpec::hadamard()), boundary);
        case 'F':
            return make_analog_f_rule(r, activation.value_or(ActivationSpec::pauli_x()), boundary);
        default:
            throw std::invalid_argument("unknown rule family in '" + std::string(text) + "'");
    }
}

namespace {

// Embeds a per-configuration single-site block into a dense neighborhood
// matrix on 2r + 1 sites with the center at position r.
CMatrix embed_conditioned(int radius, const std::vector<Matrix2>& blocks) {
    const int sites = 2 * radius + 1;
    const Eigen::Index dim = Eigen::Index{1} << sites;
    CMatrix out = CMatrix::Zero(dim, dim);
    const int center_shift = radius;  // bit position of the center inside the local index
    for (Eigen::Index row = 0; row < dim; ++row) {
        for (Eigen::Index col = 0; col < dim; ++col) {
            const std::size_t r = static_cast<std::size_t>(row), c = static_cast<std::size_t>(col);
            const std::size_t center_mask = std::size_t{1} << center_shift;
            if ((r & ~center_mask) != (c & ~center_mask)) continue;
            const std::size_t right = r & (center_mask - 1);
            const std::size_t left = r >> (center_shift + 1);
            const std::size_t config = (left << radius) | right;
            const int rb = (r & center_mask) ? 1 : 0;
            const int cb = (c & center_mask) ? 1 : 0;
            out(row, col) = blocks[config](rb, cb);
        }
    }
    return out;
}

}  // namespace

LocalOperator digital_neighborhood_unitary(const RuleSpec& rule) {
    if (rule.family != RuleFamily::digital_t) throw std::invalid_argument("digital unitary needs a T rule");
    if (!rule.activation.is_unitary()) throw std::logic_error("digital activation must be unitary");
    const Matrix2 v = rule.activation.matrix();
    const auto w = rule.config_weights();
    std::vector<Matrix2> blocks;
    for (double c : w) blocks.push_back(c != 0.0 ? v : Matrix2::Identity());
    LocalOperator op{{0, 1, 2}, embed_conditioned(1, blocks), OperatorKind::unitary};
    op.validate();
    return op;
}

LocalOperator analog_neighborhood_hamiltonian(const RuleSpec& rule) {
    if (!rule.is_analog()) throw std::invalid_argument("analog Hamiltonian needs an analog rule");
    if (!rule.activation.is_hermitian()) throw std::logic_error("analog activation must be Hermitian");
    const Matrix2 h = rule.activation.matrix();
    const auto w = rule.config_weights();
    std::vector<Matrix2> blocks;
    for (double c : w) blocks.push_back(c * h);
    std::vector<int> support(2 * rule.radius + 1);
    for (int i = 0; i < static_cast<int>(support.size()); ++i) support[i] = i;
    LocalOperator op{support, embed_conditioned(rule.radius, blocks), OperatorKind::hermitian};
    op.validate();
    return op;
}

LocalOperator totalistic_projector(int q) {
    if (q < 0 || q > 4) throw std::domain_error("totalistic index q must lie in [0, 4]");
    CMatrix m = CMatrix::Zero(16, 16);
    for (unsigned c = 0; c < 16; ++c) {
        if (std::popcount(c) == q) m(c, c) = 1.0;
    }
    return {{0, 1, 2, 3}, m, OperatorKind::hermitian};
}

RuleSpec digital_counterpart(const RuleSpec& analog_t, double dt) {
    if (analog_t.family != RuleFamily::analog_t) throw std::invalid_argument("expected an analog T rule");
    if (analog_t.activation.kind != ActivationKind::pauli_x) {
        throw std::invalid_argument("digital counterpart requires a sigma^x activation");
    }
    return make_digital_rule(analog_t.rule_number, ActivationSpec::exp_x(dt), analog_t.boundary);
}

}  // namespace qca
