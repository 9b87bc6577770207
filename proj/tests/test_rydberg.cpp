#include <doctest.h>

#include <cmath>

#include "oracle.hpp"
#include "qca/rydberg.hpp"

using namespace qca;

namespace {

oracle::Vec to_vec(const StateVector& s) {
    oracle::Vec v(s.dim());
    for (std::size_t i = 0; i < s.dim(); ++i) v[i] = s[i];
    return v;
}

/// n_j = |0><0|_j.
oracle::Mat excitation(int L, int j) { return oracle::on_site(L, j, oracle::proj(0)); }

oracle::Mat dense_rydberg(const RydbergHamiltonian& h) {
    const int L = h.num_sites;
    oracle::Mat H = oracle::Mat::Zero(1 << L, 1 << L);
    for (int j = 0; j < L; ++j) {
        H += h.half_omega * oracle::on_site(L, j, oracle::sx());
        H += h.detunings[j] * excitation(L, j);
    }
    for (const auto& p : h.pairs) H += p.v * excitation(L, p.j) * excitation(L, p.k);
    return H;
}

/// Ising chain with virtual sites fixed to |0> (sigma^z = +1).
oracle::Mat dense_ising(const IsingParams& p, int L) {
    oracle::Mat H = oracle::Mat::Zero(1 << L, 1 << L);
    for (int j = 0; j < L; ++j) {
        H += p.h_x * oracle::on_site(L, j, oracle::sx()) + p.h_z * oracle::on_site(L, j, oracle::sz());
        for (int d = 1; d <= p.radius; ++d) {
            const int k = j + d;
            if (k < L) {
                H += p.J * oracle::on_site(L, j, oracle::sz()) * oracle::on_site(L, k, oracle::sz());
            }
            // Bonds to virtual sites past either end.
            if (j + d >= L) H += p.J * oracle::on_site(L, j, oracle::sz());
            if (j - d < 0) H += p.J * oracle::on_site(L, j, oracle::sz());
        }
    }
    return H;
}

Trajectory constant_trace(int L, double z, int n) {
    Trajectory t;
    for (int i = 0; i < n; ++i) {
        MeasurementRecord r;
        r.time = 0.5 * i;
        r.sigma_z.assign(L, z);
        t.times.push_back(r.time);
        t.records.push_back(r);
    }
    return t;
}

}  // namespace

TEST_CASE("geometry distances and interaction tails") {
    const double a = 7.0;
    const auto chain = GeometrySpec::build(GeometryKind::linear_chain, 6, a);
    CHECK(chain.distance(0, 1) == doctest::Approx(a));
    CHECK(chain.distance(1, 3) == doctest::Approx(2 * a));
    const auto zz = GeometrySpec::build(GeometryKind::zigzag, 6, a);
    CHECK(zz.distance(0, 1) == doctest::Approx(a));
    CHECK(zz.distance(0, 2) == doctest::Approx(a));
    CHECK(zz.distance(0, 3) == doctest::Approx(std::sqrt(3.0) * a));
    CHECK(zz.distance(1, 5) == doctest::Approx(2 * a));

    const auto t1 = ising_to_rydberg(rule_to_ising(make_analog_t_rule(1)), GeometryKind::linear_chain, 6);
    const auto hc = build_rydberg_hamiltonian(t1, 6, true);
    for (const auto& p : hc.pairs) {
        const int d = p.k - p.j;
        CHECK(p.v == doctest::Approx(kBlockadeEnergy / std::pow(d, 6)));
    }
    const auto f4 = ising_to_rydberg(rule_to_ising(make_analog_f_rule(4)), GeometryKind::zigzag, 6);
    const auto hz = build_rydberg_hamiltonian(f4, 6, true);
    for (const auto& p : hz.pairs) {
        if (p.k - p.j <= 2) CHECK(p.v == doctest::Approx(kBlockadeEnergy));
        if (p.k - p.j == 3) CHECK(p.v == doctest::Approx(kBlockadeEnergy / 27.0));
    }
    CHECK(hc.pairs.size() == 15);
    CHECK(build_rydberg_hamiltonian(t1, 6, false).pairs.size() == 5);
    CHECK(build_rydberg_hamiltonian(f4, 6, false).pairs.size() == 9);
    CHECK_THROWS(GeometrySpec::build(GeometryKind::linear_chain, 3, 0.0));
}

TEST_CASE("rule to Ising resonance") {
    const double J = kBlockadeEnergy / 4.0;
    CHECK(rule_to_ising(make_analog_t_rule(6)).h_z == doctest::Approx(0.0));
    CHECK(rule_to_ising(make_analog_t_rule(1)).h_z == doctest::Approx(-2 * J));
    CHECK(rule_to_ising(make_analog_t_rule(8)).h_z == doctest::Approx(2 * J));
    CHECK(rule_to_ising(make_analog_f_rule(4)).h_z == doctest::Approx(0.0));
    CHECK(rule_to_ising(make_digital_rule(1)).h_z == doctest::Approx(-2 * J));
    CHECK_THROWS_AS(rule_to_ising(make_analog_t_rule(14)), std::domain_error);
    CHECK_THROWS_AS(rule_to_ising(make_analog_f_rule(26)), std::domain_error);
    CHECK_THROWS_AS(rule_to_ising(make_analog_t_rule(0)), std::domain_error);
}

TEST_CASE("Rydberg detunings") {
    const double va = kBlockadeEnergy;
    auto delta = [](const RuleSpec& r) { return ising_to_rydberg(rule_to_ising(r), geometry_for(r), 9).delta; };
    CHECK(delta(make_analog_t_rule(1)) == doctest::Approx(-2 * va));
    CHECK(delta(make_analog_t_rule(6)) == doctest::Approx(-va));
    CHECK(delta(make_analog_f_rule(4)) == doctest::Approx(-2 * va));
    const auto p = ising_to_rydberg(rule_to_ising(make_analog_t_rule(1)), GeometryKind::linear_chain, 9);
    CHECK(p.omega == doctest::Approx(kRabiFrequency));
    CHECK(p.v_a() == doctest::Approx(va));
    CHECK(p.detuning(0, 9) == doctest::Approx(-va));
    CHECK(p.detuning(4, 9) == doctest::Approx(-2 * va));
    CHECK(p.detuning(8, 9) == doctest::Approx(-va));
    CHECK(geometry_for(make_analog_f_rule(4)) == GeometryKind::zigzag);
}

TEST_CASE("Rabi flip bound") {
    const auto ising = rule_to_ising(make_analog_t_rule(1));
    CHECK(rabi_flip_bound(ising, 2) == doctest::Approx(1.0));
    const double J = ising.J;
    CHECK(rabi_flip_bound(ising, 0) == doctest::Approx(1.0 / std::sqrt(1.0 + 4 * J * J)));
    CHECK(rabi_flip_bound(ising, 0) < 0.06);
}

TEST_CASE("blockade Rydberg Hamiltonian equals the Ising form up to a constant") {
    for (const auto& rule : {make_analog_t_rule(1), make_analog_t_rule(6), make_analog_f_rule(4)}) {
        const int L = 6;
        const auto ising = rule_to_ising(rule);
        const auto params = ising_to_rydberg(ising, geometry_for(rule), L);
        const oracle::Mat diff = dense_rydberg(build_rydberg_hamiltonian(params, L, false)) - dense_ising(ising, L);
        const auto shift = diff(0, 0);
        CHECK((diff - shift * oracle::eye(1 << L)).cwiseAbs().maxCoeff() < 1e-9);
    }
}

TEST_CASE("diagonal energy matches the dense Hamiltonian") {
    const auto params = ising_to_rydberg(rule_to_ising(make_analog_f_rule(4)), GeometryKind::zigzag, 5);
    const auto h = build_rydberg_hamiltonian(params, 5, true);
    const oracle::Mat H = dense_rydberg(h);
    for (std::size_t x = 0; x < 32; ++x) CHECK(h.diagonal_energy(x) == doctest::Approx(H(x, x).real()));
}

TEST_CASE("Rydberg propagator converges to the dense exponential") {
    const int L = 5;
    auto params = ising_to_rydberg(rule_to_ising(make_analog_t_rule(6)), GeometryKind::linear_chain, L);
    const auto h = build_rydberg_hamiltonian(params, L, true);
    const auto init = random_state(L, 6);
    const double T = 0.2;
    const oracle::Vec exact = oracle::propagator(dense_rydberg(h), T) * to_vec(init);
    double err[2];
    for (int k = 0; k < 2; ++k) {
        const long steps = 200L << k;
        RydbergPropagator prop(h, T / steps);
        auto s = init;
        prop.advance(s, steps);
        err[k] = (to_vec(s) - exact).norm();
        CHECK(std::abs(s.norm() - 1.0) < 1e-12);
    }
    CHECK(err[1] < 1e-3);
    CHECK(err[0] / err[1] == doctest::Approx(4.0).epsilon(0.15));
}

TEST_CASE("without drive or detuning basis states are stationary") {
    RydbergParams p;
    p.omega = 0.0;
    p.delta = 0.0;
    p.geometry = GeometrySpec::build(GeometryKind::linear_chain, 4, 5.0);
    const auto h = build_rydberg_hamiltonian(p, 4, true);
    const auto tr = rydberg_run(h, InitialState::bits({0, 1, 0, 0}), 2.0, 0.01, 0.5);
    CHECK(tr.records.size() == 5);
    const double expect[] = {1.0, -1.0, 1.0, 1.0};
    for (const auto& r : tr.records) {
        for (int j = 0; j < 4; ++j) CHECK(std::abs(r.sigma_z[j] - expect[j]) < 1e-12);
    }
}

TEST_CASE("trace comparison normalization") {
    const auto up = constant_trace(3, 1.0, 10);
    const auto down = constant_trace(3, -1.0, 10);
    CHECK(compare_traces(up, up) == doctest::Approx(0.0));
    CHECK(compare_traces(up, down) == doctest::Approx(100.0));
    CHECK(compare_traces(up, constant_trace(3, 0.0, 10)) == doctest::Approx(50.0));
}

TEST_CASE("initial states for the comparison") {
    CHECK(rydberg_initial_state(make_analog_t_rule(1), 5).build(5) ==
          product_state_bits(std::vector<int>{0, 0, 1, 0, 0}));
    CHECK(rydberg_initial_state(make_analog_f_rule(4), 7).build(7) ==
          product_state_bits(std::vector<int>{0, 0, 1, 0, 1, 0, 0}));
}

TEST_CASE("small T1 comparison stays close to the automaton") {
    RydbergOptions o;
    o.num_sites = 7;
    o.total_time = 5.0;
    o.solve_sites = 5;
    const auto cmp = compare_rule(make_analog_t_rule(1), o);
    CHECK(cmp.deviation >= 0.0);
    CHECK(cmp.deviation < 10.0);
    CHECK(cmp.qca.times == cmp.rydberg.times);
}
