#include <doctest.h>

#include <bit>
#include <cmath>
#include <random>

#include "oracle.hpp"
#include "qca/evolve.hpp"

using namespace qca;

namespace {

oracle::Edge edge_of(BoundarySpec b) {
    switch (b.kind) {
        case BoundaryKind::fixed_zero: return oracle::Edge::zero;
        case BoundaryKind::fixed_one: return oracle::Edge::one;
        default: return oracle::Edge::periodic;
    }
}

const BoundarySpec kBoundaries[] = {{BoundaryKind::fixed_zero}, {BoundaryKind::fixed_one}, {BoundaryKind::periodic}};

oracle::Vec to_vec(const StateVector& s) {
    oracle::Vec v(s.dim());
    for (std::size_t i = 0; i < s.dim(); ++i) v[i] = s[i];
    return v;
}

double distance(const StateVector& a, const oracle::Vec& b) { return (to_vec(a) - b).norm(); }
double distance(const StateVector& a, const StateVector& b) { return (to_vec(a) - to_vec(b)).norm(); }

oracle::Mat sigma_x() { return oracle::sx(); }

}  // namespace

TEST_CASE("T0 leaves any state unchanged") {
    const auto init = random_state(6, 3);
    auto s = init;
    const auto rule = make_digital_rule(0);
    for (int i = 0; i < 5; ++i) digital_step(s, rule);
    CHECK(s == init);
}

TEST_CASE("T1 on |010> with fixed-zero boundaries") {
    auto s = product_state_bits(std::vector<int>{0, 1, 0});
    digital_step(s, make_digital_rule(1));
    const double h = 1 / std::sqrt(2.0);
    CHECK(std::abs(s[0b000] - complex(h)) < 1e-14);
    CHECK(std::abs(s[0b010] - complex(-h)) < 1e-14);
    CHECK(std::abs(s.norm() - 1.0) < 1e-14);
}

TEST_CASE("digital step matches the dense circuit") {
    std::mt19937 rng(11);
    for (const auto& b : kBoundaries) {
        for (int L : {3, 4, 5, 6}) {
            for (int R : {1, 6, 9, 13, 14}) {
                for (auto act : {ActivationSpec::hadamard(), ActivationSpec::hadamard_phase(0.7)}) {
                    const auto rule = make_digital_rule(R, act, b);
                    const auto init = random_state(L, rng());
                    auto s = init;
                    digital_step(s, rule);
                    const oracle::Mat V = act.matrix();
                    const oracle::Vec expect = oracle::t_rule_step(L, R, V, edge_of(b)) * to_vec(init);
                    CHECK(distance(s, expect) < 1e-12);
                }
            }
        }
    }
}

TEST_CASE("digital propagator reuse matches repeated one-off steps") {
    const auto rule = make_digital_rule(6);
    DigitalPropagator prop(rule, 7);
    auto a = random_state(7, 5);
    auto b = a;
    for (int i = 0; i < 10; ++i) {
        prop.step(a);
        digital_step(b, rule);
    }
    CHECK(a == b);
    auto wrong = random_state(6, 5);
    CHECK_THROWS_AS(prop.step(wrong), std::invalid_argument);
}

TEST_CASE("analog F0 is the identity") {
    const auto init = random_state(7, 8);
    auto s = init;
    for (int i = 0; i < 10; ++i) analog_step(s, make_analog_f_rule(0), 0.1);
    CHECK(distance(s, init) < 1e-14);
}

TEST_CASE("Strang steps converge at second order to the dense propagator") {
    for (const auto& b : kBoundaries) {
        const int L = 6;
        const auto init = random_state(L, 21);
        struct Case {
            RuleSpec rule;
            oracle::Mat H;
        };
        std::vector<Case> cases;
        for (int R : {1, 6, 14}) {
            cases.push_back({make_analog_t_rule(R, ActivationSpec::pauli_x(), b),
                             oracle::t_rule_hamiltonian(L, R, sigma_x(), edge_of(b))});
        }
        if (b.kind != BoundaryKind::periodic) {
            for (int R : {4, 26}) {
                cases.push_back({make_analog_f_rule(R, ActivationSpec::pauli_x(), b),
                                 oracle::f_rule_hamiltonian(L, oracle::f_weights(R), sigma_x(), edge_of(b))});
            }
        }
        for (const auto& c : cases) {
            CAPTURE(c.rule.to_string());
            double err[2];
            for (int k = 0; k < 2; ++k) {
                const double dt = 0.2 / (1 << k);
                auto s = init;
                analog_step(s, c.rule, dt);
                err[k] = distance(s, oracle::propagator(c.H, dt) * to_vec(init));
            }
            CHECK(err[0] > 1e-8);
            CHECK(err[0] / err[1] == doctest::Approx(8.0).epsilon(0.2));
        }
    }
}

TEST_CASE("general radius-two rule against the dense Hamiltonian") {
    const int L = 7;
    const int R = 0b1011001000110110;
    const auto rule = make_analog_r2_rule(R);
    oracle::Mat H = oracle::Mat::Zero(1 << L, 1 << L);
    for (int j = 0; j < L; ++j) {
        for (int c = 0; c < 16; ++c) {
            if (!((R >> c) & 1)) continue;
            // First leg (j - 2) is the most significant configuration bit.
            std::vector<int> bits{(c >> 3) & 1, (c >> 2) & 1, (c >> 1) & 1, c & 1};
            H += oracle::neighbor_projector(L, j, {-2, -1, 1, 2}, bits, oracle::Edge::zero) *
                 oracle::on_site(L, j, sigma_x());
        }
    }
    const auto init = random_state(L, 4);
    const int n = 40;
    const double dt = 0.025;
    auto s = init;
    AnalogPropagator::from_rule(rule, L, dt).advance(s, n);
    CHECK(distance(s, oracle::propagator(H, n * dt) * to_vec(init)) < 1e-3);
}

TEST_CASE("Lie splitting equals the digital counterpart circuit") {
    for (const auto& b : kBoundaries) {
        for (int R : {1, 6, 9, 14}) {
            const int L = 6;
            const double dt = 0.1;
            const auto analog = make_analog_t_rule(R, ActivationSpec::pauli_x(), b);
            auto a = random_state(L, 31);
            auto d = a;
            analog_step(a, analog, dt, Splitting::lie);
            digital_step(d, digital_counterpart(analog, dt));
            CHECK(distance(a, d) < 1e-12);
        }
    }
}

TEST_CASE("fused advance equals repeated single steps") {
    const auto rule = make_analog_f_rule(4);
    const AnalogPropagator prop = AnalogPropagator::from_rule(rule, 9, 0.1);
    auto a = random_state(9, 2);
    auto b = a;
    prop.advance(a, 10);
    for (int i = 0; i < 10; ++i) prop.step(b);
    CHECK(distance(a, b) < 1e-12);
}

TEST_CASE("commuting layers cover every site once with the required spacing") {
    for (const auto& b : kBoundaries) {
        for (int r : {1, 2}) {
            for (int L = 2 * r + 1; L <= 12; ++L) {
                const auto layers = commuting_layers(L, r, b);
                std::vector<int> seen(L, 0);
                for (const auto& layer : layers) {
                    for (int j : layer) ++seen[j];
                    for (std::size_t i = 0; i < layer.size(); ++i) {
                        for (std::size_t k = i + 1; k < layer.size(); ++k) {
                            int d = std::abs(layer[i] - layer[k]);
                            if (b.kind == BoundaryKind::periodic) d = std::min(d, L - d);
                            CHECK(d >= r + 1);
                        }
                    }
                }
                for (int c : seen) CHECK(c == 1);
            }
        }
    }
    CHECK(commuting_layers(7, 1, {}) == std::vector<std::vector<int>>{{0, 2, 4, 6}, {1, 3, 5}});
    CHECK(commuting_layers(7, 2, {}) == std::vector<std::vector<int>>{{0, 3, 6}, {1, 4}, {2, 5}});
}

TEST_CASE("neighborhood terms in one layer commute") {
    const int L = 7;
    for (const auto& b : kBoundaries) {
        for (int r : {1, 2}) {
            auto term = [&](int j) {
                oracle::Mat H = oracle::Mat::Zero(1 << L, 1 << L);
                const std::vector<int> offsets = r == 1 ? std::vector<int>{-1, 1} : std::vector<int>{-2, -1, 1, 2};
                for (int c = 0; c < (1 << offsets.size()); ++c) {
                    std::vector<int> bits;
                    for (int i = static_cast<int>(offsets.size()) - 1; i >= 0; --i) bits.push_back((c >> i) & 1);
                    H += (c % 3 + 1.0) * oracle::neighbor_projector(L, j, offsets, bits, edge_of(b)) *
                         oracle::on_site(L, j, sigma_x());
                }
                return H;
            };
            for (const auto& layer : commuting_layers(L, r, b)) {
                for (std::size_t i = 0; i < layer.size(); ++i) {
                    for (std::size_t k = i + 1; k < layer.size(); ++k) {
                        const oracle::Mat A = term(layer[i]), B = term(layer[k]);
                        CHECK((A * B - B * A).cwiseAbs().maxCoeff() < 1e-12);
                    }
                }
            }
            // Adjacent sites do not commute, so the spacing is necessary.
            const oracle::Mat A = term(2), B = term(3);
            CHECK((A * B - B * A).cwiseAbs().maxCoeff() > 0.1);
        }
    }
}

TEST_CASE("perturbed weights of F4 + eps F26") {
    const double eps = 0.3;
    const auto w = perturbed_weights(make_analog_f_rule(4), {make_analog_f_rule(26), eps});
    REQUIRE(w.size() == 16);
    const double by_count[5] = {0.0, eps, 1.0, eps, eps};
    for (int c = 0; c < 16; ++c) CHECK(w[c] == doctest::Approx(by_count[std::popcount(static_cast<unsigned>(c))]));
    const auto pure = perturbed_weights(make_analog_f_rule(0), {make_analog_f_rule(26), 1.0});
    CHECK(pure == make_analog_f_rule(26).config_weights());
    CHECK_THROWS_AS(perturbed_weights(make_analog_f_rule(4), {make_analog_t_rule(6), 0.1}), std::domain_error);
    CHECK_THROWS_AS(perturbed_weights(make_analog_f_rule(4), {make_analog_f_rule(26), -0.1}), std::domain_error);
}

TEST_CASE("zero perturbation leaves the trajectory unchanged") {
    EvolutionConfig c;
    c.rule = make_analog_f_rule(4);
    c.num_sites = 9;
    c.total_time = 3;
    c.initial_state = InitialState::center_101(9);
    const auto plain = evolve(c, [](double, const StateVector&) {});
    c.perturbation = Perturbation{make_analog_f_rule(26), 0.0};
    const auto perturbed = evolve(c, [](double, const StateVector&) {});
    CHECK(plain == perturbed);
}

TEST_CASE("T6 conserves the boundary-inclusive zz bond sum") {
    for (const auto& b : kBoundaries) {
        const int L = 11;
        const auto rule = make_digital_rule(6, ActivationSpec::hadamard(), b);
        auto s = product_state_bits(std::vector<int>{0, 0, 0, 1, 0, 0, 1, 1, 0, 0, 0});
        const double initial = zz_bond_sum(s, b);
        DigitalPropagator prop(rule, L);
        double worst = 0;
        for (int t = 0; t < 500; ++t) {
            prop.step(s);
            worst = std::max(worst, std::abs(zz_bond_sum(s, b) - initial));
        }
        CHECK(worst < 1e-8);
    }
    auto center = InitialState::single_center(19).build(19);
    CHECK(zz_bond_sum(center, {}) == doctest::Approx(16.0));
}

TEST_CASE("zz bond sum counts pinned and wrap bonds") {
    const auto ones = product_state_bits(std::vector<int>{1, 1, 1, 1});
    CHECK(zz_bond_sum(ones, {BoundaryKind::fixed_zero}) == doctest::Approx(3.0 - 2.0));
    CHECK(zz_bond_sum(ones, {BoundaryKind::fixed_one}) == doctest::Approx(5.0));
    CHECK(zz_bond_sum(ones, {BoundaryKind::periodic}) == doctest::Approx(4.0));
}

TEST_CASE("norm drift stays small over long runs") {
    auto d = random_state(8, 1);
    DigitalPropagator prop(make_digital_rule(13, ActivationSpec::hadamard_phase(0.3)), 8);
    for (int i = 0; i < 1000; ++i) prop.step(d);
    CHECK(std::abs(d.norm() - 1.0) < 1e-10);
    auto a = random_state(8, 2);
    AnalogPropagator::from_rule(make_analog_f_rule(26), 8, 0.1).advance(a, 1000);
    CHECK(std::abs(a.norm() - 1.0) < 1e-10);
}

TEST_CASE("initial states") {
    CHECK(InitialState::single_center(5).build(5) == product_state_bits(std::vector<int>{0, 0, 1, 0, 0}));
    CHECK(InitialState::center_101(7).build(7) == product_state_bits(std::vector<int>{0, 0, 1, 0, 1, 0, 0}));
    CHECK(InitialState::random(3).build(5) == random_state(5, 3));
    CHECK_THROWS_AS(InitialState::bits({1, 0}).build(3), std::invalid_argument);
    CHECK_THROWS_AS(InitialState::center_101(2).build(2), std::invalid_argument);
}

TEST_CASE("config validation") {
    EvolutionConfig c;
    c.rule = make_digital_rule(6);
    c.num_sites = 5;
    c.initial_state = InitialState::single_center(5);
    CHECK_NOTHROW(c.validate());
    auto bad = c;
    bad.total_time = -1;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = c;
    bad.measurement_stride = 0.5;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = c;
    bad.perturbation = Perturbation{make_analog_f_rule(26), 0.1};
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = c;
    bad.rule = make_eca_rule(110);
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = c;
    bad.rule = make_analog_f_rule(4);
    bad.dt = 0.3;  // 1 / dt is not an integer
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("run with zero total time returns the initial state") {
    EvolutionConfig c;
    c.rule = make_digital_rule(6);
    c.num_sites = 5;
    c.initial_state = InitialState::single_center(5);
    const auto tr = run(c);
    REQUIRE(tr.records.size() == 1);
    CHECK(tr.times == std::vector<double>{0.0});
    CHECK(tr.p1_series(2) == std::vector<double>{1.0});
    CHECK(tr.sigma_z_series(0) == std::vector<double>{1.0});
}

TEST_CASE("analog runs take 1/dt substeps per time unit") {
    EvolutionConfig c;
    c.rule = make_analog_f_rule(4);
    c.num_sites = 7;
    c.total_time = 1;
    c.dt = 0.1;
    c.initial_state = InitialState::center_101(7);
    const auto final_state = evolve(c, [](double, const StateVector&) {});
    auto manual = c.initial_state.build(7);
    const auto prop = AnalogPropagator::from_rule(c.rule, 7, 0.1);
    for (int i = 0; i < 10; ++i) prop.step(manual);
    CHECK(distance(final_state, manual) < 1e-12);
}

TEST_CASE("sampling respects stride and start") {
    EvolutionConfig c;
    c.rule = make_digital_rule(6);
    c.num_sites = 7;
    c.total_time = 12;
    c.measurement_stride = 3;
    c.sample_from = 4;
    c.initial_state = InitialState::single_center(7);
    const auto tr = run(c);
    CHECK(tr.times == std::vector<double>{6.0, 9.0, 12.0});
    CHECK(tr.records.size() == 3);

    // Same states as stepping by hand.
    std::vector<StateVector> seen;
    c.sample_from = 0;
    c.measurement_stride = 1;
    evolve(c, [&](double, const StateVector& s) { seen.push_back(s); });
    REQUIRE(seen.size() == 13);
    auto s = c.initial_state.build(7);
    for (int t = 0; t < 12; ++t) digital_step(s, c.rule);
    CHECK(seen.back() == s);
}

TEST_CASE("runs are deterministic") {
    EvolutionConfig c;
    c.rule = make_analog_t_rule(6);
    c.num_sites = 8;
    c.total_time = 4;
    c.initial_state = InitialState::random(77);
    const auto a = run(c, MeasurementSet::all());
    const auto b = run(c, MeasurementSet::all());
    for (std::size_t i = 0; i < a.records.size(); ++i) {
        CHECK(a.records[i].sigma_z == b.records[i].sigma_z);
        CHECK(*a.records[i].clustering == *b.records[i].clustering);
    }
}
