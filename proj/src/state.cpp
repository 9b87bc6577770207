#include "qca/state.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>

namespace qca {

namespace {

void check_sites(int num_sites) {
    if (num_sites < 1 || num_sites > 30) {
        throw std::invalid_argument("num_sites must lie in [1, 30], got " + std::to_string(num_sites));
    }
}

void check_site(int num_sites, int site) {
    if (site < 0 || site >= num_sites) {
        throw std::out_of_range("site " + std::to_string(site) + " outside [0, " + std::to_string(num_sites) + ")");
    }
}

// Inserts a zero bit at each position in `masks` (ascending single-bit masks).
inline std::size_t expand_index(std::size_t x, std::span<const std::size_t> masks) {
    for (std::size_t m : masks) {
        const std::size_t low = x & (m - 1);
        x = ((x ^ low) << 1) | low;
    }
    return x;
}

std::vector<std::size_t> ascending_masks(int num_sites, std::span<const int> sites) {
    std::vector<std::size_t> masks;
    masks.reserve(sites.size());
    for (int s : sites) masks.push_back(site_mask(num_sites, s));
    std::sort(masks.begin(), masks.end());
    return masks;
}

// Offsets of the 2^k local basis states; sites[0] is the most significant bit.
std::vector<std::size_t> local_offsets(int num_sites, std::span<const int> sites) {
    const std::size_t k = sites.size();
    std::vector<std::size_t> offsets(std::size_t{1} << k, 0);
    for (std::size_t a = 0; a < offsets.size(); ++a) {
        std::size_t off = 0;
        for (std::size_t b = 0; b < k; ++b) {
            if ((a >> (k - 1 - b)) & 1U) off |= site_mask(num_sites, sites[b]);
        }
        offsets[a] = off;
    }
    return offsets;
}

void check_distinct(int num_sites, std::span<const int> sites) {
    std::vector<int> sorted(sites.begin(), sites.end());
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
        throw std::domain_error("duplicate site indices");
    }
    for (int s : sites) check_site(num_sites, s);
}

}  // namespace

StateVector::StateVector(int num_sites) : num_sites_(num_sites) {
    check_sites(num_sites);
    amps_.assign(std::size_t{1} << num_sites, complex{0.0, 0.0});
    amps_[0] = 1.0;
}

StateVector::StateVector(int num_sites, std::vector<complex> amplitudes)
    : num_sites_(num_sites), amps_(std::move(amplitudes)) {
    check_sites(num_sites);
    if (amps_.size() != (std::size_t{1} << num_sites)) {
        throw std::invalid_argument("amplitude array length must be 2^num_sites");
    }
    if (std::abs(norm() - 1.0) > kNormTolerance) {
        throw std::invalid_argument("state is not normalized");
    }
}

double StateVector::norm() const {
    double acc = 0.0;
    for (const auto& a : amps_) acc += std::norm(a);
    return std::sqrt(acc);
}

void StateVector::normalize() {
    const double n = norm();
    if (n == 0.0) throw std::domain_error("cannot normalize the zero vector");
    for (auto& a : amps_) a /= n;
}

void LocalOperator::validate() const {
    if (support.empty()) throw std::invalid_argument("operator support is empty");
    for (std::size_t i = 1; i < support.size(); ++i) {
        if (support[i] != support[i - 1] + 1) throw std::invalid_argument("operator support must be contiguous");
    }
    const Eigen::Index dim = Eigen::Index{1} << support.size();
    if (matrix.rows() != dim || matrix.cols() != dim) {
        throw std::invalid_argument("operator matrix dimension does not match its support");
    }
    if (kind == OperatorKind::unitary) {
        const double err = (matrix.adjoint() * matrix - CMatrix::Identity(dim, dim)).cwiseAbs().maxCoeff();
        if (err > kNormTolerance) throw std::logic_error("operator flagged unitary is not unitary");
    } else {
        const double err = (matrix - matrix.adjoint()).cwiseAbs().maxCoeff();
        if (err > kSingleApplyTolerance) throw std::logic_error("operator flagged Hermitian is not Hermitian");
    }
}

StateVector product_state(std::span<const QubitSpec> sites) {
    const int n = static_cast<int>(sites.size());
    check_sites(n);
    std::vector<complex> factors0(n), factors1(n);
    for (int s = 0; s < n; ++s) {
        const auto& q = sites[s];
        if (!(q.delta >= 0.0 && q.delta <= 1.0)) {
            throw std::domain_error("delta must lie in [0, 1], got " + std::to_string(q.delta));
        }
        factors0[s] = std::polar(q.delta, q.phi);
        factors1[s] = std::sqrt(1.0 - q.delta * q.delta);
    }
    std::vector<complex> amps(std::size_t{1} << n);
    for (std::size_t i = 0; i < amps.size(); ++i) {
        complex a = 1.0;
        for (int s = 0; s < n && a != 0.0; ++s) {
            a *= (i & site_mask(n, s)) ? factors1[s] : factors0[s];
        }
        amps[i] = a;
    }
    StateVector out(n);
    std::copy(amps.begin(), amps.end(), out.mutable_amplitudes().begin());
    out.normalize();
    return out;
}

StateVector product_state_bits(std::span<const int> bits) {
    std::vector<QubitSpec> specs;
    specs.reserve(bits.size());
    for (int b : bits) {
        if (b != 0 && b != 1) throw std::domain_error("bits must be 0 or 1");
        specs.push_back(QubitSpec::from_bit(b));
    }
    return product_state(specs);
}

StateVector random_state(int num_sites, std::uint64_t seed) {
    check_sites(num_sites);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    StateVector out(num_sites);
    auto amps = out.mutable_amplitudes();
    for (auto& a : amps) {
        const double re = gauss(rng);
        const double im = gauss(rng);
        a = complex{re, im};
    }
    out.normalize();
    return out;
}

void apply_local_unitary(StateVector& state, const LocalOperator& op) {
    if (op.kind != OperatorKind::unitary) throw std::logic_error("apply_local_unitary requires a unitary operator");
    op.validate();
    const int n = state.num_sites();
    check_distinct(n, op.support);
    const auto masks = ascending_masks(n, op.support);
    const auto offsets = local_offsets(n, op.support);
    const std::size_t local_dim = offsets.size();
    const std::size_t outer = state.dim() >> op.support.size();
    auto amps = state.mutable_amplitudes();
    Eigen::VectorXcd in(local_dim), out(local_dim);
    for (std::size_t x = 0; x < outer; ++x) {
        const std::size_t base = expand_index(x, masks);
        for (std::size_t a = 0; a < local_dim; ++a) in[a] = amps[base | offsets[a]];
        out.noalias() = op.matrix * in;
        for (std::size_t a = 0; a < local_dim; ++a) amps[base | offsets[a]] = out[a];
    }
}

namespace {

// A conditioned op resolved against a chain: sorted bit masks of the involved
// real sites and the blocks of the reachable active configurations.
struct PreparedOp {
    std::size_t tmask = 0;
    std::size_t top = 0;  // highest involved mask
    std::vector<std::size_t> masks;  // ascending, target included
    std::vector<std::pair<std::size_t, const Matrix2*>> blocks;  // (offset, block)
};

PreparedOp prepare_conditioned(int n, int target, std::span<const NeighborLeg> legs, const ConditionedOp& op) {
    check_site(n, target);
    const std::size_t configs = std::size_t{1} << legs.size();
    if (op.blocks.size() != configs || op.active.size() != configs) {
        throw std::invalid_argument("conditioned op table must have 2^legs entries");
    }
    PreparedOp out;
    std::size_t pinned_bits = 0;
    std::size_t virtual_cbits = 0;
    std::vector<std::pair<std::size_t, std::size_t>> real_legs;  // (mask, config bit)
    out.tmask = site_mask(n, target);
    out.masks.push_back(out.tmask);
    for (std::size_t b = 0; b < legs.size(); ++b) {
        const std::size_t cbit = std::size_t{1} << (legs.size() - 1 - b);
        if (legs[b].is_virtual()) {
            virtual_cbits |= cbit;
            if (legs[b].pinned) pinned_bits |= cbit;
        } else {
            check_site(n, legs[b].site);
            if (legs[b].site == target) throw std::invalid_argument("neighbor leg coincides with target");
            real_legs.emplace_back(site_mask(n, legs[b].site), cbit);
            out.masks.push_back(real_legs.back().first);
        }
    }
    std::sort(out.masks.begin(), out.masks.end());
    if (std::adjacent_find(out.masks.begin(), out.masks.end()) != out.masks.end()) {
        throw std::invalid_argument("neighbor legs must be distinct sites");
    }
    out.top = out.masks.back();
    // Virtual legs fix their configuration bit; identity blocks cost nothing.
    for (std::size_t c = 0; c < configs; ++c) {
        if (!op.active[c] || (c & virtual_cbits) != pinned_bits) continue;
        std::size_t offset = 0;
        for (const auto& [m, cb] : real_legs) {
            if (c & cb) offset |= m;
        }
        out.blocks.emplace_back(offset, &op.blocks[c]);
    }
    return out;
}

// Applies a prepared op to amps[0, dim); every mask must lie below dim.
void apply_prepared(complex* amps, std::size_t dim, const PreparedOp& op) {
    // Indices with every involved bit cleared come in contiguous runs of
    // length masks[0].
    const std::size_t run = op.masks.front();
    const std::size_t outer = (dim >> op.masks.size()) / run;
    std::size_t upper[8];
    const std::size_t num_upper = op.masks.size() - 1;
    for (std::size_t i = 0; i < num_upper; ++i) upper[i] = op.masks[i + 1] / (2 * run);

    for (const auto& [offset, block] : op.blocks) {
        const Matrix2& u = *block;
        const double u00r = u(0, 0).real(), u00i = u(0, 0).imag();
        const double u01r = u(0, 1).real(), u01i = u(0, 1).imag();
        const double u10r = u(1, 0).real(), u10i = u(1, 0).imag();
        const double u11r = u(1, 1).real(), u11i = u(1, 1).imag();
        for (std::size_t y = 0; y < outer; ++y) {
            std::size_t hi = y;
            for (std::size_t i = 0; i < num_upper; ++i) {
                const std::size_t low = hi & (upper[i] - 1);
                hi = ((hi ^ low) << 1) | low;
            }
            const std::size_t base = ((hi * run) << 1) | offset;
            complex* p0 = amps + base;
            complex* p1 = amps + (base | op.tmask);
            for (std::size_t t = 0; t < run; ++t) {
                const double ar = p0[t].real(), ai = p0[t].imag();
                const double br = p1[t].real(), bi = p1[t].imag();
                p0[t] = complex(u00r * ar - u00i * ai + u01r * br - u01i * bi,
                                u00r * ai + u00i * ar + u01r * bi + u01i * br);
                p1[t] = complex(u10r * ar - u10i * ai + u11r * br - u11i * bi,
                                u10r * ai + u10i * ar + u11r * bi + u11i * br);
            }
        }
    }
}

constexpr std::size_t kBlockBits = 14;  // 256 KiB of amplitudes per cache block

}  // namespace

void apply_conditioned_site_op(StateVector& state, int target, std::span<const NeighborLeg> legs,
                               const ConditionedOp& op) {
    const auto prepared = prepare_conditioned(state.num_sites(), target, legs, op);
    if (prepared.masks.size() > 9) throw std::invalid_argument("too many neighbor legs");
    apply_prepared(state.mutable_amplitudes().data(), state.dim(), prepared);
}

void apply_conditioned_layer(StateVector& state, std::span<const int> targets,
                             std::span<const std::vector<NeighborLeg>> legs, const ConditionedOp& op) {
    if (targets.size() != legs.size()) throw std::invalid_argument("one leg list per target required");
    const int n = state.num_sites();
    std::vector<PreparedOp> low, high;
    const std::size_t block = std::size_t{1} << kBlockBits;
    for (std::size_t i = 0; i < targets.size(); ++i) {
        auto p = prepare_conditioned(n, targets[i], legs[i], op);
        if (p.masks.size() > 9) throw std::invalid_argument("too many neighbor legs");
        if (p.blocks.empty()) continue;
        (p.top < block && state.dim() > block ? low : high).push_back(std::move(p));
    }
    complex* amps = state.mutable_amplitudes().data();
    if (!low.empty()) {
        for (std::size_t b = 0; b < state.dim(); b += block) {
            for (const auto& p : low) apply_prepared(amps + b, block, p);
        }
    }
    for (const auto& p : high) apply_prepared(amps, state.dim(), p);
}

DensityMatrix reduced_density(const StateVector& state, std::span<const int> sites, int max_sites) {
    const int n = state.num_sites();
    if (max_sites < 0) max_sites = (n + 1) / 2;
    if (sites.empty()) throw std::invalid_argument("reduced_density needs at least one site");
    if (static_cast<int>(sites.size()) > max_sites) {
        throw std::invalid_argument("too many sites for reduced_density (cap " + std::to_string(max_sites) + ")");
    }
    check_distinct(n, sites);
    const auto masks = ascending_masks(n, sites);
    const auto offsets = local_offsets(n, sites);
    const std::size_t local_dim = offsets.size();
    const std::size_t outer = state.dim() >> sites.size();
    CMatrix psi(static_cast<Eigen::Index>(local_dim), static_cast<Eigen::Index>(outer));
    const auto amps = state.amplitudes();
    for (std::size_t x = 0; x < outer; ++x) {
        const std::size_t base = expand_index(x, masks);
        for (std::size_t a = 0; a < local_dim; ++a) psi(a, x) = amps[base | offsets[a]];
    }
    DensityMatrix out;
    out.sites.assign(sites.begin(), sites.end());
    out.matrix = psi * psi.adjoint();
    return out;
}

std::vector<Matrix2> single_site_densities(const StateVector& state) {
    const int n = state.num_sites();
    const auto amps = state.amplitudes();
    std::vector<Matrix2> out(n);
    for (int s = 0; s < n; ++s) {
        const std::size_t m = site_mask(n, s);
        const std::size_t low_mask = m - 1;
        double p0 = 0.0, p1 = 0.0;
        complex c01 = 0.0;
        for (std::size_t x = 0; x < state.dim() / 2; ++x) {
            const std::size_t low = x & low_mask;
            const std::size_t i0 = ((x ^ low) << 1) | low;
            const complex a0 = amps[i0];
            const complex a1 = amps[i0 | m];
            p0 += std::norm(a0);
            p1 += std::norm(a1);
            c01 += a0 * std::conj(a1);
        }
        out[s] << p0, c01, std::conj(c01), p1;
    }
    return out;
}

namespace {

// Sums of v over the indices whose bit b is set, for every bit b (most
// significant first), by repeatedly folding the upper half onto the lower.
// Destroys v.
template <typename T>
std::vector<T> bit_marginals(std::vector<T>& v) {
    std::vector<T> out;
    for (std::size_t size = v.size(); size > 1; size /= 2) {
        const std::size_t half = size / 2;
        T upper{};
        for (std::size_t i = 0; i < half; ++i) {
            upper += v[half + i];
            v[i] += v[half + i];
        }
        out.push_back(upper);
    }
    return out;
}

}  // namespace

std::vector<Eigen::Matrix4cd> pair_densities(const StateVector& state) {
    // Local order 00, 01, 10, 11 with site j (the lower index) high. Elements
    // that keep both bits or flip one bit are bit marginals of vectors
    // restricted to one site, which costs O(dim) per site; only the two-flip
    // coherences need a pass per pair.
    const int n = state.num_sites();
    const complex* amps = state.amplitudes().data();
    const std::size_t dim = state.dim();
    const std::size_t half = dim / 2;

    std::vector<std::size_t> masks(n);
    for (int q = 0; q < n; ++q) masks[q] = site_mask(n, q);
    // both[q][r]: sum of |amp|^2 with q and r set. flip[q][r]: sum of
    // amp(x) conj(amp(x | q)) over x with q clear and r set.
    std::vector<std::vector<double>> both(n, std::vector<double>(n, 0.0));
    std::vector<std::vector<complex>> flip(n, std::vector<complex>(n));
    std::vector<complex> flip_total(n);
    double norm = 0.0;
    for (std::size_t x = 0; x < dim; ++x) norm += std::norm(amps[x]);

    std::vector<double> probs(half);
    std::vector<complex> coh(half);
    for (int q = 0; q < n; ++q) {
        const std::size_t mq = masks[q];
        for (std::size_t y = 0; y < half; ++y) {
            const std::size_t low = y & (mq - 1);
            const std::size_t x = ((y ^ low) << 1) | low;
            probs[y] = std::norm(amps[x | mq]);
            coh[y] = amps[x] * std::conj(amps[x | mq]);
        }
        const auto pm = bit_marginals(probs);
        const auto cm = bit_marginals(coh);
        both[q][q] = probs[0];
        flip_total[q] = coh[0];
        // Marginal slot i refers to the i-th remaining site.
        for (int r = 0, slot = 0; r < n; ++r) {
            if (r == q) continue;
            both[q][r] = pm[slot];
            flip[q][r] = cm[slot];
            ++slot;
        }
    }

    std::vector<Eigen::Matrix4cd> out;
    out.reserve(static_cast<std::size_t>(n) * (n - 1) / 2);
    for (int j = 0; j < n; ++j) {
        for (int k = j + 1; k < n; ++k) {
            const std::size_t mj = masks[j];
            const std::size_t mk = masks[k];  // mk < mj
            double re03 = 0, im03 = 0, re12 = 0, im12 = 0;
            const std::size_t outer = dim / (4 * mk);
            const std::size_t mid = mj / (2 * mk);
            for (std::size_t y = 0; y < outer; ++y) {
                const std::size_t low = y & (mid - 1);
                const std::size_t base = (((y ^ low) << 1) | low) * 2 * mk;
                const complex* p0 = amps + base;
                const complex* p1 = p0 + mk;
                const complex* p2 = p0 + mj;
                const complex* p3 = p2 + mk;
                for (std::size_t t = 0; t < mk; ++t) {
                    re03 += p0[t].real() * p3[t].real() + p0[t].imag() * p3[t].imag();
                    im03 += p0[t].imag() * p3[t].real() - p0[t].real() * p3[t].imag();
                    re12 += p1[t].real() * p2[t].real() + p1[t].imag() * p2[t].imag();
                    im12 += p1[t].imag() * p2[t].real() - p1[t].real() * p2[t].imag();
                }
            }
            const double p11 = both[j][k];
            const double p10 = both[j][j] - p11;
            const double p01 = both[k][k] - p11;
            const double p00 = norm - p11 - p10 - p01;
            const complex flip_k_j1 = flip[k][j];
            const complex flip_k_all = flip_total[k];
            const complex flip_j_k1 = flip[j][k];
            const complex flip_j_all = flip_total[j];

            Eigen::Matrix4cd rho;
            rho.diagonal() << p00, p01, p10, p11;
            rho(0, 1) = flip_k_all - flip_k_j1;
            rho(2, 3) = flip_k_j1;
            rho(0, 2) = flip_j_all - flip_j_k1;
            rho(1, 3) = flip_j_k1;
            rho(0, 3) = complex(re03, im03);
            rho(1, 2) = complex(re12, im12);
            for (int a = 0; a < 4; ++a) {
                for (int b = a + 1; b < 4; ++b) rho(b, a) = std::conj(rho(a, b));
            }
            out.push_back(rho);
        }
    }
    return out;
}

namespace {

using RowMajorMap = Eigen::Map<const Eigen::Matrix<complex, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

RowMajorMap reshape_cut(const StateVector& state, int cut) {
    const int n = state.num_sites();
    if (cut < 1 || cut >= n) throw std::invalid_argument("cut must lie in [1, L)");
    const Eigen::Index rows = Eigen::Index{1} << cut;
    const Eigen::Index cols = Eigen::Index{1} << (n - cut);
    return RowMajorMap(state.amplitudes().data(), rows, cols);
}

}  // namespace

CMatrix left_block_density(const StateVector& state, int cut) {
    const auto psi = reshape_cut(state, cut);
    CMatrix rho = CMatrix::Zero(psi.rows(), psi.rows());
    rho.selfadjointView<Eigen::Lower>().rankUpdate(psi);
    rho.triangularView<Eigen::StrictlyUpper>() = rho.adjoint().eval();
    return rho;
}

double left_block_purity(const StateVector& state, int cut) {
    const auto psi = reshape_cut(state, cut);
    CMatrix gram;
    if (psi.rows() <= psi.cols()) {
        gram = CMatrix::Zero(psi.rows(), psi.rows());
        gram.selfadjointView<Eigen::Lower>().rankUpdate(psi);
    } else {
        gram = CMatrix::Zero(psi.cols(), psi.cols());
        gram.selfadjointView<Eigen::Lower>().rankUpdate(psi.adjoint());
    }
    double diag = 0.0, off = 0.0;
    for (Eigen::Index c = 0; c < gram.cols(); ++c) {
        diag += std::norm(gram(c, c));
        for (Eigen::Index r = c + 1; r < gram.rows(); ++r) off += std::norm(gram(r, c));
    }
    return diag + 2.0 * off;
}

double expectation(const StateVector& state, int site, const Matrix2& observable) {
    check_site(state.num_sites(), site);
    if ((observable - observable.adjoint()).cwiseAbs().maxCoeff() > kSingleApplyTolerance) {
        throw std::invalid_argument("observable must be Hermitian");
    }
    const int sites[] = {site};
    const auto rho = reduced_density(state, sites, 1);
    return (rho.matrix * observable).trace().real();
}

double zz_correlation(const StateVector& state, int j, int k) {
    const int n = state.num_sites();
    check_site(n, j);
    check_site(n, k);
    if (j == k) throw std::invalid_argument("zz_correlation needs distinct sites");
    const std::size_t mj = site_mask(n, j), mk = site_mask(n, k);
    const auto amps = state.amplitudes();
    double acc = 0.0;
    for (std::size_t i = 0; i < amps.size(); ++i) {
        const bool parity = ((i & mj) != 0) != ((i & mk) != 0);
        acc += parity ? -std::norm(amps[i]) : std::norm(amps[i]);
    }
    return acc;
}

namespace pauli {

Matrix2 identity() { return Matrix2::Identity(); }

Matrix2 x() {
    Matrix2 m;
    m << 0, 1, 1, 0;
    return m;
}

Matrix2 y() {
    Matrix2 m;
    m << 0, complex(0, -1), complex(0, 1), 0;
    return m;
}

Matrix2 z() {
    Matrix2 m;
    m << 1, 0, 0, -1;
    return m;
}

Matrix2 projector(int bit) {
    Matrix2 m = Matrix2::Zero();
    m(bit, bit) = 1.0;
    return m;
}

Matrix2 hadamard() { return (z() + x()) / std::sqrt(2.0); }

}  // namespace pauli

}  // namespace qca
