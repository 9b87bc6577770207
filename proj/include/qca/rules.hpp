#pragma once

// Rule numbering and neighborhood operators.
//
//   C_R  classical ECA, R = sum_n c_n 2^n, n = k2 k1 k0 (left, center, right)
//   T_R  3-site quantum rule, R = sum_{m,n} c_mn 2^{2m+n}, m = left, n = right
//   F_R  5-site totalistic rule, R = sum_q c_q 2^q, q = neighbors in |1>
//
// Every quantum rule reduces to a table indexed by the neighbor configuration
// (neighbors read left to right, leftmost neighbor = most significant bit).
// Dense neighborhood matrices order their sites left to right as well.

#include <array>
#include <string>
#include <string_view>
#include <vector>

#include "qca/state.hpp"

namespace qca {

enum class RuleFamily { classical_eca, digital_t, analog_t, analog_f, analog_r2_general };

enum class ActivationKind { hadamard, hadamard_phase, pauli_x, exp_x };

struct ActivationSpec {
    ActivationKind kind = ActivationKind::hadamard;
    double angle = 0.0;  // upsilon for hadamard_phase, theta for exp_x

    static ActivationSpec hadamard() { return {ActivationKind::hadamard, 0.0}; }
    static ActivationSpec hadamard_phase(double upsilon) { return {ActivationKind::hadamard_phase, upsilon}; }
    static ActivationSpec pauli_x() { return {ActivationKind::pauli_x, 0.0}; }
    /// exp(-i theta sigma^x)
    static ActivationSpec exp_x(double theta) { return {ActivationKind::exp_x, theta}; }

    Matrix2 matrix() const;
    bool is_unitary() const;
    bool is_hermitian() const;
    std::string to_string() const;
};

enum class BoundaryKind { fixed_zero, fixed_one, periodic };

struct BoundarySpec {
    BoundaryKind kind = BoundaryKind::fixed_zero;

    /// Pinned value of virtual sites; only meaningful for fixed kinds.
    int pinned_bit() const { return kind == BoundaryKind::fixed_one ? 1 : 0; }
    std::string to_string() const;
};

BoundarySpec parse_boundary(std::string_view text);

struct RuleSpec {
    RuleFamily family = RuleFamily::digital_t;
    int rule_number = 0;
    int radius = 1;
    std::vector<int> coefficients;
    ActivationSpec activation;
    BoundarySpec boundary;

    bool is_digital() const { return family == RuleFamily::digital_t; }
    bool is_analog() const {
        return family == RuleFamily::analog_t || family == RuleFamily::analog_f ||
               family == RuleFamily::analog_r2_general;
    }
    int num_neighbors() const { return 2 * radius; }

    /// Coefficient per neighbor configuration (2^{2r} entries).
    std::vector<double> config_weights() const;

    /// Short label, e.g. "T6", "F4", "C110".
    std::string label() const;
    /// Label plus activation and boundary, e.g. "T6:hadamard@zero".
    std::string to_string() const;
};

std::array<int, 8> decode_eca(int rule_number);
std::array<int, 4> decode_t(int rule_number);
std::array<int, 5> decode_f(int rule_number);

int encode_eca(const std::array<int, 8>& c);
int encode_t(const std::array<int, 4>& c);
int encode_f(const std::array<int, 5>& c);

RuleSpec make_eca_rule(int rule_number, BoundarySpec boundary = {});
RuleSpec make_digital_rule(int rule_number, ActivationSpec activation = ActivationSpec::hadamard(),
                           BoundarySpec boundary = {});
RuleSpec make_analog_t_rule(int rule_number, ActivationSpec activation = ActivationSpec::pauli_x(),
                            BoundarySpec boundary = {});
RuleSpec make_analog_f_rule(int rule_number, ActivationSpec activation = ActivationSpec::pauli_x(),
                            BoundarySpec boundary = {});
/// Non-totalistic radius-2 rule: R = sum_c c_c 2^c over the 16 neighbor configurations.
RuleSpec make_analog_r2_rule(int rule_number, ActivationSpec activation = ActivationSpec::pauli_x(),
                             BoundarySpec boundary = {});

/// Parses "C201", "T6", "F4", optionally with an activation suffix
/// ("T6:hadamard", "T6:phase=0.5", "F4:paulix", "T3:expx=0.1"). A leading "A"
/// on a T rule ("AT6") selects the analog three-site family.
RuleSpec parse_rule(std::string_view text, BoundarySpec boundary = {});

/// Sum over (m, n) of P^(m) (x) V^{c_mn} (x) P^(n) on sites (0, 1, 2).
LocalOperator digital_neighborhood_unitary(const RuleSpec& rule);

/// h (x) sum_i c_i P_i, embedded on 3 or 5 contiguous sites (0..2r).
LocalOperator analog_neighborhood_hamiltonian(const RuleSpec& rule);

/// Projector onto exactly q of four neighbor sites in |1> (16 x 16).
LocalOperator totalistic_projector(int q);

/// Digital rule with activation replaced by V = exp(-i dt sigma^x), the
/// circuit that matches one analog layer of the same T rule.
RuleSpec digital_counterpart(const RuleSpec& analog_t, double dt);

}  // namespace qca
