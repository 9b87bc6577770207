#pragma once

// Statevector kernel: storage, local operator application, partial traces and
// expectation values.
//
// Basis convention: site 0 is the most significant bit of the basis index. For
// an L-site chain, site s occupies bit position L - 1 - s. |0> is the +1
// eigenstate of sigma^z and |1> the -1 eigenstate.

#include <complex>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace qca {

using complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using Matrix2 = Eigen::Matrix2cd;

inline constexpr double kNormTolerance = 1e-10;
inline constexpr double kSingleApplyTolerance = 1e-12;

inline std::size_t site_mask(int num_sites, int site) {
    return std::size_t{1} << (num_sites - 1 - site);
}

class StateVector {
public:
    /// All-|0> state on `num_sites` qubits.
    explicit StateVector(int num_sites);
    /// Takes ownership of `amplitudes`; throws unless the length is 2^num_sites
    /// and the norm is 1 within kNormTolerance.
    StateVector(int num_sites, std::vector<complex> amplitudes);

    int num_sites() const { return num_sites_; }
    std::size_t dim() const { return amps_.size(); }
    std::span<const complex> amplitudes() const { return amps_; }
    std::span<complex> mutable_amplitudes() { return amps_; }
    complex operator[](std::size_t i) const { return amps_[i]; }

    double norm() const;
    void normalize();

    bool operator==(const StateVector&) const = default;

private:
    int num_sites_;
    std::vector<complex> amps_;
};

/// Single-qubit product factor e^{i phi} delta |0> + sqrt(1 - delta^2) |1>.
struct QubitSpec {
    double delta = 1.0;
    double phi = 0.0;

    static QubitSpec from_bit(int bit) { return bit ? QubitSpec{0.0, 0.0} : QubitSpec{1.0, 0.0}; }
};

struct DensityMatrix {
    std::vector<int> sites;  // first listed site is the most significant index bit
    CMatrix matrix;
};

enum class OperatorKind { unitary, hermitian };

struct LocalOperator {
    std::vector<int> support;  // contiguous, ascending
    CMatrix matrix;
    OperatorKind kind = OperatorKind::unitary;

    /// Validates shape, contiguity and the unitary/Hermitian flag.
    void validate() const;
};

StateVector product_state(std::span<const QubitSpec> sites);
StateVector product_state_bits(std::span<const int> bits);

/// Standard-normal real and imaginary parts, then normalized (mt19937_64).
StateVector random_state(int num_sites, std::uint64_t seed);

/// Applies `op` in place by strided gather/scatter over its support.
void apply_local_unitary(StateVector& state, const LocalOperator& op);

/// One neighbor leg of a conditioned update: either a real site or a pinned
/// virtual site with a fixed computational-basis value.
struct NeighborLeg {
    int site = -1;    // >= 0 for a real site
    int pinned = 0;   // value used when site < 0

    static NeighborLeg real(int s) { return {s, 0}; }
    static NeighborLeg virtual_site(int bit) { return {-1, bit}; }
    bool is_virtual() const { return site < 0; }
};

/// Single-site blocks indexed by neighbor configuration; `active[c] == 0`
/// marks identity blocks that are skipped.
struct ConditionedOp {
    std::vector<Matrix2> blocks;
    std::vector<std::uint8_t> active;
};

/// Applies sum_c P_c (x) op.blocks[c] to `target`, where c is the neighbor
/// configuration read from `legs` with the first leg as the most significant
/// bit.
void apply_conditioned_site_op(StateVector& state, int target, std::span<const NeighborLeg> legs,
                               const ConditionedOp& op);

/// Applies the op at every target; the resulting site ops must mutually
/// commute (no target appears among another's legs), which allows cache
/// blocking over the low-order sites.
void apply_conditioned_layer(StateVector& state, std::span<const int> targets,
                             std::span<const std::vector<NeighborLeg>> legs, const ConditionedOp& op);

/// Partial trace onto `sites`; the cap limits |sites| (default: half the chain,
/// rounded up).
DensityMatrix reduced_density(const StateVector& state, std::span<const int> sites, int max_sites = -1);

/// All single-site reduced densities, indexed by site.
std::vector<Matrix2> single_site_densities(const StateVector& state);

/// Two-site reduced densities for every pair j < k in row-major pair order
/// (0,1), (0,2), ..., (L-2,L-1). Site j is the high index bit.
std::vector<Eigen::Matrix4cd> pair_densities(const StateVector& state);

/// Reduced density of sites [0, cut) obtained from the reshaped amplitudes.
CMatrix left_block_density(const StateVector& state, int cut);

/// Tr(rho_A^2) for A = sites [0, cut), computed on the smaller side of the cut.
double left_block_purity(const StateVector& state, int cut);

double expectation(const StateVector& state, int site, const Matrix2& observable);

/// <sigma^z_j sigma^z_k> for two distinct real sites.
double zz_correlation(const StateVector& state, int j, int k);

namespace pauli {
Matrix2 identity();
Matrix2 x();
Matrix2 y();
Matrix2 z();
Matrix2 projector(int bit);  // |bit><bit|
Matrix2 hadamard();
}  // namespace pauli

}  // namespace qca
