#include <doctest.h>

#include <cmath>
#include <numbers>

#include "oracle.hpp"
#include "qca/evolve.hpp"
#include "qca/state.hpp"

using namespace qca;

namespace {

oracle::Vec to_vec(const StateVector& s) {
    oracle::Vec v(s.dim());
    for (std::size_t i = 0; i < s.dim(); ++i) v[i] = s[i];
    return v;
}

}  // namespace

TEST_CASE("product state from bits puts all weight on one index") {
    const std::vector<int> bits{0, 0, 0, 1, 0, 0, 0};
    const auto s = product_state_bits(bits);
    CHECK(s.dim() == 128);
    for (std::size_t i = 0; i < s.dim(); ++i) CHECK(std::abs(s[i] - complex(i == 0b0001000 ? 1.0 : 0.0)) == 0.0);
}

TEST_CASE("product state with delta one is all zeros") {
    std::vector<QubitSpec> q(4, QubitSpec{1.0, 0.0});
    const auto s = product_state(q);
    CHECK(std::abs(s[0] - complex(1.0)) < 1e-15);
}

TEST_CASE("product state with delta one half") {
    std::vector<QubitSpec> q{QubitSpec{1.0, 0.0}, QubitSpec{0.5, 0.0}, QubitSpec{1.0, 0.0}};
    const auto s = product_state(q);
    CHECK(s[0b000].real() == doctest::Approx(0.5));
    CHECK(s[0b010].real() == doctest::Approx(std::sqrt(3.0) / 2.0));
    CHECK(s.norm() == doctest::Approx(1.0));
}

TEST_CASE("product state phase and delta range") {
    std::vector<QubitSpec> q{QubitSpec{0.6, std::numbers::pi / 2}};
    const auto s = product_state(q);
    CHECK(std::abs(s[0] - complex(0.0, 0.6)) < 1e-15);
    CHECK(std::abs(s[1] - complex(0.8, 0.0)) < 1e-15);
    std::vector<QubitSpec> bad{QubitSpec{1.5, 0.0}};
    CHECK_THROWS_AS(product_state(bad), std::domain_error);
}

TEST_CASE("state vector rejects wrong length and norm") {
    CHECK_THROWS_AS(StateVector(2, std::vector<complex>(3, 0.5)), std::invalid_argument);
    CHECK_THROWS_AS(StateVector(1, std::vector<complex>{1.0, 1.0}), std::invalid_argument);
}

TEST_CASE("random state is seeded and normalized") {
    const auto a = random_state(2, 42);
    const auto b = random_state(2, 42);
    const auto c = random_state(2, 43);
    CHECK(a == b);
    CHECK_FALSE(a == c);
    CHECK(std::abs(random_state(9, 5).norm() - 1.0) < 1e-12);
}

TEST_CASE("random single-qubit states are isotropic in sigma z") {
    const int n = 10000;
    double sum = 0, sum2 = 0;
    for (int i = 0; i < n; ++i) {
        const double z = expectation(random_state(1, 1000 + i), 0, pauli::z());
        sum += z;
        sum2 += z * z;
    }
    const double mean = sum / n;
    const double se = std::sqrt((sum2 / n - mean * mean) / n);
    CHECK(std::abs(mean) < 3 * se);
}

TEST_CASE("hadamard on site zero") {
    StateVector s(1);
    apply_local_unitary(s, LocalOperator{{0}, pauli::hadamard(), OperatorKind::unitary});
    CHECK(s[0].real() == doctest::Approx(1 / std::sqrt(2.0)));
    CHECK(s[1].real() == doctest::Approx(1 / std::sqrt(2.0)));
}

TEST_CASE("identity leaves amplitudes bit for bit") {
    auto s = random_state(5, 9);
    const auto before = s;
    apply_local_unitary(s, LocalOperator{{1, 2, 3}, CMatrix::Identity(8, 8), OperatorKind::unitary});
    CHECK(s == before);
}

TEST_CASE("local unitary matches dense embedding") {
    const int L = 5;
    auto s = random_state(L, 3);
    const oracle::Vec psi = to_vec(s);
    // Random 4x4 unitary from a QR factorization.
    Eigen::Matrix4cd g;
    const auto r = random_state(4, 77);
    for (int i = 0; i < 16; ++i) g(i / 4, i % 4) = r[i];
    const Eigen::Matrix4cd q = Eigen::HouseholderQR<Eigen::Matrix4cd>(g).householderQ();
    apply_local_unitary(s, LocalOperator{{2, 3}, q, OperatorKind::unitary});
    oracle::Mat full = Eigen::kroneckerProduct(oracle::eye(4), oracle::Mat(q)).eval();
    full = Eigen::kroneckerProduct(full, oracle::eye(2)).eval();
    const oracle::Vec expect = full * psi;
    CHECK((to_vec(s) - expect).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("local operator validation") {
    StateVector s(3);
    CHECK_THROWS(apply_local_unitary(s, LocalOperator{{0, 2}, CMatrix::Identity(4, 4), OperatorKind::unitary}));
    CHECK_THROWS(apply_local_unitary(s, LocalOperator{{2, 3}, CMatrix::Identity(4, 4), OperatorKind::unitary}));
    CMatrix nonunitary = CMatrix::Identity(2, 2) * 2.0;
    CHECK_THROWS(apply_local_unitary(s, LocalOperator{{0}, nonunitary, OperatorKind::unitary}));
}

TEST_CASE("conditioned op matches projector sum") {
    const int L = 5;
    auto s = random_state(L, 21);
    const oracle::Vec psi = to_vec(s);
    ConditionedOp op;
    for (int c = 0; c < 4; ++c) {
        const auto r = random_state(2, 100 + c);
        Eigen::Matrix2cd g;
        for (int i = 0; i < 4; ++i) g(i / 2, i % 2) = r[i];
        op.blocks.push_back(Eigen::HouseholderQR<Eigen::Matrix2cd>(g).householderQ());
        op.active.push_back(1);
    }
    const std::vector<NeighborLeg> legs{NeighborLeg::real(4), NeighborLeg::real(1)};
    apply_conditioned_site_op(s, 2, legs, op);
    oracle::Mat U = oracle::Mat::Zero(32, 32);
    for (int c = 0; c < 4; ++c) {
        U += oracle::projector(L, {{4, (c >> 1) & 1}, {1, c & 1}}) * oracle::on_site(L, 2, oracle::Mat(op.blocks[c]));
    }
    CHECK((to_vec(s) - U * psi).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("conditioned op with a pinned leg uses only matching blocks") {
    const int L = 3;
    auto s = random_state(L, 8);
    const oracle::Vec psi = to_vec(s);
    ConditionedOp op;
    op.blocks = {pauli::x(), pauli::hadamard(), pauli::z(), pauli::identity()};
    op.active = {1, 1, 1, 0};
    const std::vector<NeighborLeg> legs{NeighborLeg::virtual_site(1), NeighborLeg::real(1)};
    apply_conditioned_site_op(s, 0, legs, op);
    // Pinned first leg = 1 selects blocks 2 (site 1 in |0>) and 3 (site 1 in |1>).
    const oracle::Mat U = oracle::projector(L, {{1, 0}}) * oracle::on_site(L, 0, oracle::sz()) +
                          oracle::projector(L, {{1, 1}});
    CHECK((to_vec(s) - U * psi).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("conditioned layer equals sequential application") {
    const int L = 16;  // above the cache block so both paths run
    auto a = random_state(L, 4);
    auto b = a;
    ConditionedOp op;
    op.blocks = {pauli::identity(), pauli::hadamard(), pauli::hadamard(), pauli::identity()};
    op.active = {0, 1, 1, 0};
    std::vector<int> targets;
    std::vector<std::vector<NeighborLeg>> legs;
    for (int j = 0; j < L; j += 2) {
        targets.push_back(j);
        legs.push_back(neighborhood_legs(L, j, 1, BoundarySpec{}));
    }
    apply_conditioned_layer(a, targets, legs, op);
    for (std::size_t i = 0; i < targets.size(); ++i) apply_conditioned_site_op(b, targets[i], legs[i], op);
    double diff = 0;
    for (std::size_t i = 0; i < a.dim(); ++i) diff = std::max(diff, std::abs(a[i] - b[i]));
    CHECK(diff < 1e-14);
}

TEST_CASE("reduced density of a basis product state") {
    const auto s = product_state_bits(std::vector<int>{0, 0, 0, 1, 0, 0, 0});
    const int site[] = {3};
    const auto rho = reduced_density(s, site);
    CHECK(std::abs(rho.matrix(1, 1) - complex(1.0)) < 1e-15);
    CHECK(std::abs(rho.matrix(0, 0)) < 1e-15);
}

TEST_CASE("reduced density of a Bell pair is maximally mixed") {
    std::vector<complex> a(4, 0.0);
    a[0] = a[3] = 1 / std::sqrt(2.0);
    const StateVector bell(2, a);
    for (int s : {0, 1}) {
        const int site[] = {s};
        const auto rho = reduced_density(bell, site);
        CHECK(std::abs(rho.matrix(0, 0) - 0.5) < 1e-15);
        CHECK(std::abs(rho.matrix(1, 1) - 0.5) < 1e-15);
        CHECK(std::abs(rho.matrix(0, 1)) < 1e-15);
    }
}

TEST_CASE("reduced density matches brute-force partial trace") {
    const int L = 6;
    const auto s = random_state(L, 17);
    const oracle::Vec psi = to_vec(s);
    const std::vector<std::vector<int>> subsets{{0}, {2}, {1, 3}, {0, 5}, {4, 1}, {0, 2, 5}};
    for (const auto& sites : subsets) {
        const auto rho = reduced_density(s, sites);
        CHECK((rho.matrix - oracle::partial_trace(psi, L, sites)).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("reduced density rejects duplicates and oversized sets") {
    const auto s = random_state(4, 1);
    const int dup[] = {1, 1};
    CHECK_THROWS_AS(reduced_density(s, dup), std::domain_error);
    const int big[] = {0, 1, 2};
    CHECK_THROWS(reduced_density(s, big));
    CHECK_NOTHROW(reduced_density(s, big, 3));
}

TEST_CASE("single and pair densities match the oracle") {
    for (int L : {2, 3, 5, 6}) {
        const auto s = random_state(L, 50 + L);
        const oracle::Vec psi = to_vec(s);
        const auto singles = single_site_densities(s);
        for (int j = 0; j < L; ++j) CHECK((CMatrix(singles[j]) - oracle::partial_trace(psi, L, {j})).cwiseAbs().maxCoeff() < 1e-12);
        const auto pairs = pair_densities(s);
        std::size_t idx = 0;
        for (int j = 0; j < L; ++j) {
            for (int k = j + 1; k < L; ++k, ++idx) {
                CHECK((CMatrix(pairs[idx]) - oracle::partial_trace(psi, L, {j, k})).cwiseAbs().maxCoeff() < 1e-12);
            }
        }
    }
}

TEST_CASE("left block density and purity") {
    const int L = 7;
    const auto s = random_state(L, 5);
    const oracle::Vec psi = to_vec(s);
    for (int cut = 1; cut < L; ++cut) {
        std::vector<int> left;
        for (int i = 0; i < cut; ++i) left.push_back(i);
        const oracle::Mat ref = oracle::partial_trace(psi, L, left);
        CHECK((left_block_density(s, cut) - ref).cwiseAbs().maxCoeff() < 1e-12);
        CHECK(left_block_purity(s, cut) == doctest::Approx((ref * ref).trace().real()).epsilon(1e-12));
    }
}

TEST_CASE("expectations on eigenstates") {
    StateVector zero(1);
    CHECK(expectation(zero, 0, pauli::z()) == doctest::Approx(1.0));
    const auto one = product_state_bits(std::vector<int>{1});
    CHECK(expectation(one, 0, pauli::projector(1)) == doctest::Approx(1.0));
    StateVector plus(1);
    apply_local_unitary(plus, LocalOperator{{0}, pauli::hadamard(), OperatorKind::unitary});
    CHECK(expectation(plus, 0, pauli::x()) == doctest::Approx(1.0));
}

TEST_CASE("zz correlation matches dense operator") {
    const int L = 5;
    const auto s = random_state(L, 31);
    const oracle::Vec psi = to_vec(s);
    const oracle::Mat zz = oracle::on_site(L, 1, oracle::sz()) * oracle::on_site(L, 4, oracle::sz());
    CHECK(zz_correlation(s, 1, 4) == doctest::Approx((psi.adjoint() * zz * psi)(0, 0).real()).epsilon(1e-12));
    CHECK_THROWS(zz_correlation(s, 2, 2));
}

TEST_CASE("norm preserved over many local unitaries") {
    auto s = random_state(8, 2);
    for (int i = 0; i < 1000; ++i) {
        apply_local_unitary(s, LocalOperator{{i % 8}, pauli::hadamard(), OperatorKind::unitary});
    }
    CHECK(std::abs(s.norm() - 1.0) < 1e-10);
}
