#pragma once

// Physical-implementation layer: Ising and Rydberg Hamiltonians for analog
// rules, chain and zigzag atom geometries, propagation and comparison with the
// ideal automaton.
//
// Units: energies in MHz, times in units of 2 pi microseconds, so a coefficient
// E contributes exp(-i E t). The Rydberg excitation n_j is the projector onto
// |0>_j.

#include <array>
#include <optional>
#include <vector>

#include "qca/evolve.hpp"

namespace qca {

inline constexpr double kC6 = 863000.0;       // MHz um^6 (863 GHz um^6)
inline constexpr double kRabiFrequency = 2.0;  // Omega, MHz
inline constexpr double kBlockadeEnergy = 36.0;  // V_a, MHz

enum class GeometryKind { linear_chain, zigzag };

struct GeometrySpec {
    GeometryKind kind = GeometryKind::linear_chain;
    double a = 0.0;  // nearest spacing, um
    std::vector<std::array<double, 2>> positions;

    /// Chain: (j a, 0). Zigzag: (j a / 2, (j mod 2) a sqrt(3) / 2), so sites
    /// one and two apart are both at distance a.
    static GeometrySpec build(GeometryKind kind, int num_sites, double a);
    double distance(int j, int k) const;
};

/// H = h_x sum sigma^x + h_z sum sigma^z + J sum_{bonds in range r} sigma^z sigma^z.
struct IsingParams {
    double h_x = 1.0;
    double h_z = 0.0;
    double J = kBlockadeEnergy / 4.0;
    int radius = 1;
};

/// Neighbor magnetization (#|0> - #|1>) at which the rule activates; throws
/// std::domain_error unless the rule activates exactly on one full
/// magnetization class.
int resonant_magnetization(const RuleSpec& rule);

/// h_z = -m J for the rule's resonant magnetization m.
IsingParams rule_to_ising(const RuleSpec& rule, double h_x = 1.0, double J = kBlockadeEnergy / 4.0);

/// Largest flip probability amplitude bound h_x / sqrt(h_x^2 + (h_z + J m)^2)
/// of the central spin in a frozen neighbor field with magnetization m.
double rabi_flip_bound(const IsingParams& ising, int m);

struct RydbergParams {
    double omega = kRabiFrequency;
    double delta = 0.0;                  // bulk detuning
    std::vector<double> boundary_deltas;  // offset for edge depth d = 0..r-1 (both ends)
    double c6 = kC6;
    int radius = 1;
    GeometrySpec geometry;

    double v_a() const;
    /// Detuning of site j on an L-site chain.
    double detuning(int site, int num_sites) const;
};

/// Omega = 2 h_x, Delta = 2 (h_z - 2 r J), spacing with C6 / a^6 = 4 J. The
/// boundary offsets are seeded with V_a per missing in-range neighbor, which
/// emulates excited (|0>) virtual sites.
RydbergParams ising_to_rydberg(const IsingParams& ising, GeometryKind kind, int num_sites, double c6 = kC6);

/// Geometry used for a rule: chain for r = 1, zigzag for r = 2.
GeometryKind geometry_for(const RuleSpec& rule);

struct PairTerm {
    int j = 0;
    int k = 0;
    double v = 0.0;
};

/// Omega/2 sum sigma^x + sum Delta_j n_j + sum_{j<k} V_jk n_j n_k.
struct RydbergHamiltonian {
    int num_sites = 0;
    double half_omega = 0.0;
    std::vector<double> detunings;
    std::vector<PairTerm> pairs;

    /// Diagonal energy of a computational basis state.
    double diagonal_energy(std::size_t basis_index) const;
};

/// Pairs within the automaton neighborhood (|j-k| <= r) always; all other
/// pairs only when include_higher_order. Coincident atoms are a domain error.
RydbergHamiltonian build_rydberg_hamiltonian(const RydbergParams& params, int num_sites, bool include_higher_order);

/// Strang splitting between the diagonal part (exact phases) and the
/// commuting sigma^x rotations.
class RydbergPropagator {
public:
    RydbergPropagator(const RydbergHamiltonian& h, double dt);
    void advance(StateVector& state, long steps) const;
    double dt() const { return dt_; }

private:
    void apply_phases(StateVector& state, const std::vector<complex>& phases) const;
    void apply_rotations(StateVector& state) const;

    int num_sites_;
    double dt_;
    std::vector<complex> half_phases_;
    std::vector<complex> full_phases_;
    ConditionedOp rotation_;
};

/// Samples sigma^z etc. every `stride` up to total_time.
Trajectory rydberg_run(const RydbergHamiltonian& h, const InitialState& init, double total_time, double dt,
                       double stride);

/// Mean over sites and common sample times in [0, t_max] of
/// |<sigma^z>_a - <sigma^z>_b| / 2, in percent.
double compare_traces(const Trajectory& a, const Trajectory& b, double t_max = 20.0);

struct RydbergOptions {
    int num_sites = 17;
    double total_time = 20.0;
    double dt = 0.01;         // Omega dt = 0.02
    double qca_dt = 0.05;
    double stride = 0.1;
    int solve_sites = 8;      // chain length for the boundary-detuning fit
    bool include_higher_order = true;
};

/// Initial state used for the comparison: central |1> for T rules, central
/// |101> for F rules.
InitialState rydberg_initial_state(const RuleSpec& rule, int num_sites);

/// Ideal analog trajectory for an analog or digital T / F rule (digital rules
/// use their analog counterpart).
Trajectory qca_reference(const RuleSpec& rule, const RydbergOptions& options, int num_sites);

/// Boundary offsets minimizing the deviation at options.solve_sites, by
/// golden-section coordinate descent around the missing-neighbor seed.
std::vector<double> solve_boundary_detuning(const RuleSpec& rule, const RydbergOptions& options);

struct RydbergComparison {
    RuleSpec rule;
    RydbergParams params;
    double deviation = 0.0;  // percent
    Trajectory qca;
    Trajectory rydberg;
};

/// Full comparison; boundary offsets are solved unless given.
RydbergComparison compare_rule(const RuleSpec& rule, const RydbergOptions& options,
                               const std::optional<std::vector<double>>& boundary_deltas = std::nullopt);

}  // namespace qca
