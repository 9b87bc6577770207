#include "qca/rydberg.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <set>
#include <stdexcept>
#include <string>

namespace qca {

GeometrySpec GeometrySpec::build(GeometryKind kind, int num_sites, double a) {
    if (!(a > 0.0)) throw std::invalid_argument("lattice spacing must be positive");
    GeometrySpec g;
    g.kind = kind;
    g.a = a;
    for (int j = 0; j < num_sites; ++j) {
        if (kind == GeometryKind::linear_chain) {
            g.positions.push_back({j * a, 0.0});
        } else {
            g.positions.push_back({0.5 * j * a, (j % 2) * a * std::sqrt(3.0) / 2.0});
        }
    }
    return g;
}

double GeometrySpec::distance(int j, int k) const {
    const auto& p = positions.at(static_cast<std::size_t>(j));
    const auto& q = positions.at(static_cast<std::size_t>(k));
    return std::hypot(p[0] - q[0], p[1] - q[1]);
}

int resonant_magnetization(const RuleSpec& rule) {
    if (rule.family == RuleFamily::classical_eca) throw std::domain_error("classical rules have no Ising mapping");
    const auto w = rule.config_weights();
    const int legs = 2 * rule.radius;
    std::set<int> active_m;
    for (std::size_t c = 0; c < w.size(); ++c) {
        if (w[c] != 0.0) active_m.insert(legs - 2 * std::popcount(c));
    }
    if (active_m.size() != 1) {
        throw std::domain_error("rule " + rule.label() + " activates at " + std::to_string(active_m.size()) +
                                " magnetizations; a single resonance is required");
    }
    const int m = *active_m.begin();
    for (std::size_t c = 0; c < w.size(); ++c) {
        if (legs - 2 * std::popcount(c) == m && w[c] != 1.0) {
            throw std::domain_error("rule " + rule.label() + " activates on part of a magnetization class only");
        }
    }
    return m;
}

IsingParams rule_to_ising(const RuleSpec& rule, double h_x, double J) {
    const int m = resonant_magnetization(rule);
    return IsingParams{h_x, -m * J, J, rule.radius};
}

double rabi_flip_bound(const IsingParams& ising, int m) {
    const double detuning = ising.h_z + ising.J * m;
    return std::abs(ising.h_x) / std::sqrt(ising.h_x * ising.h_x + detuning * detuning);
}

double RydbergParams::v_a() const { return c6 / std::pow(geometry.a, 6); }

double RydbergParams::detuning(int site, int num_sites) const {
    const int depth = std::min(site, num_sites - 1 - site);
    if (depth < static_cast<int>(boundary_deltas.size())) return delta + boundary_deltas[depth];
    return delta;
}

RydbergParams ising_to_rydberg(const IsingParams& ising, GeometryKind kind, int num_sites, double c6) {
    if (!(c6 > 0.0)) throw std::invalid_argument("C6 must be positive");
    if (!(ising.J > 0.0)) throw std::invalid_argument("Ising coupling must be positive for a blockade mapping");
    RydbergParams p;
    p.omega = 2.0 * ising.h_x;
    p.delta = 2.0 * (ising.h_z - 2.0 * ising.radius * ising.J);
    p.c6 = c6;
    p.radius = ising.radius;
    const double v_a = 4.0 * ising.J;
    p.geometry = GeometrySpec::build(kind, num_sites, std::pow(c6 / v_a, 1.0 / 6.0));
    for (int d = 0; d < ising.radius; ++d) p.boundary_deltas.push_back(v_a * (ising.radius - d));
    return p;
}

GeometryKind geometry_for(const RuleSpec& rule) {
    return rule.radius == 1 ? GeometryKind::linear_chain : GeometryKind::zigzag;
}

double RydbergHamiltonian::diagonal_energy(std::size_t basis_index) const {
    // n_j = 1 when site j is |0>, i.e. its bit is clear.
    auto excited = [&](int j) { return ((basis_index >> (num_sites - 1 - j)) & 1U) == 0; };
    double e = 0.0;
    for (int j = 0; j < num_sites; ++j) {
        if (excited(j)) e += detunings[j];
    }
    for (const auto& p : pairs) {
        if (excited(p.j) && excited(p.k)) e += p.v;
    }
    return e;
}

RydbergHamiltonian build_rydberg_hamiltonian(const RydbergParams& params, int num_sites, bool include_higher_order) {
    if (static_cast<int>(params.geometry.positions.size()) < num_sites) {
        throw std::invalid_argument("geometry has fewer atoms than sites");
    }
    RydbergHamiltonian h;
    h.num_sites = num_sites;
    h.half_omega = 0.5 * params.omega;
    for (int j = 0; j < num_sites; ++j) h.detunings.push_back(params.detuning(j, num_sites));
    for (int j = 0; j < num_sites; ++j) {
        for (int k = j + 1; k < num_sites; ++k) {
            const double d = params.geometry.distance(j, k);
            if (!(d > 0.0)) throw std::domain_error("coincident atoms " + std::to_string(j) + " and " + std::to_string(k));
            if (!include_higher_order && k - j > params.radius) continue;
            h.pairs.push_back({j, k, params.c6 / std::pow(d, 6)});
        }
    }
    return h;
}

RydbergPropagator::RydbergPropagator(const RydbergHamiltonian& h, double dt) : num_sites_(h.num_sites), dt_(dt) {
    if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
    const std::size_t dim = std::size_t{1} << h.num_sites;
    half_phases_.resize(dim);
    full_phases_.resize(dim);
    for (std::size_t x = 0; x < dim; ++x) {
        const double e = h.diagonal_energy(x);
        half_phases_[x] = std::polar(1.0, -0.5 * dt * e);
        full_phases_[x] = std::polar(1.0, -dt * e);
    }
    rotation_.blocks = {exp_hermitian2(pauli::x(), h.half_omega * dt)};
    rotation_.active = {1};
}

void RydbergPropagator::apply_phases(StateVector& state, const std::vector<complex>& phases) const {
    auto amps = state.mutable_amplitudes();
    for (std::size_t x = 0; x < amps.size(); ++x) amps[x] *= phases[x];
}

void RydbergPropagator::apply_rotations(StateVector& state) const {
    for (int j = 0; j < num_sites_; ++j) apply_conditioned_site_op(state, j, {}, rotation_);
}

void RydbergPropagator::advance(StateVector& state, long steps) const {
    if (state.num_sites() != num_sites_) throw std::invalid_argument("state size does not match propagator");
    if (steps <= 0) return;
    apply_phases(state, half_phases_);
    for (long s = 0; s < steps; ++s) {
        apply_rotations(state);
        apply_phases(state, s + 1 < steps ? full_phases_ : half_phases_);
    }
}

Trajectory rydberg_run(const RydbergHamiltonian& h, const InitialState& init, double total_time, double dt,
                       double stride) {
    const long per_sample = std::lround(stride / dt);
    const long samples = std::lround(total_time / stride);
    if (per_sample < 1 || std::abs(per_sample * dt - stride) > 1e-9 * stride) {
        throw std::invalid_argument("stride must be an integer multiple of dt");
    }
    if (std::abs(samples * stride - total_time) > 1e-9 * std::max(1.0, total_time)) {
        throw std::invalid_argument("total_time must be an integer multiple of stride");
    }
    const RydbergPropagator prop(h, dt);
    StateVector state = init.build(h.num_sites);
    Trajectory traj;
    const auto what = MeasurementSet::one_point_only();
    for (long k = 0; k <= samples; ++k) {
        if (k > 0) prop.advance(state, per_sample);
        traj.times.push_back(k * stride);
        traj.records.push_back(measure(state, k * stride, what));
    }
    return traj;
}

double compare_traces(const Trajectory& a, const Trajectory& b, double t_max) {
    if (a.times.size() != b.times.size()) throw std::domain_error("trajectories have different sample counts");
    double acc = 0.0;
    long count = 0;
    for (std::size_t i = 0; i < a.times.size(); ++i) {
        if (std::abs(a.times[i] - b.times[i]) > 1e-9) throw std::domain_error("trajectories sample different times");
        if (a.times[i] > t_max + 1e-9) continue;
        const auto& za = a.records[i].sigma_z;
        const auto& zb = b.records[i].sigma_z;
        if (za.size() != zb.size() || za.empty()) throw std::domain_error("trajectories have different site counts");
        for (std::size_t j = 0; j < za.size(); ++j) {
            acc += 0.5 * std::abs(za[j] - zb[j]);
            ++count;
        }
    }
    if (count == 0) throw std::domain_error("no common samples inside [0, t_max]");
    return 100.0 * acc / static_cast<double>(count);
}

InitialState rydberg_initial_state(const RuleSpec& rule, int num_sites) {
    return rule.radius == 1 ? InitialState::single_center(num_sites) : InitialState::center_101(num_sites);
}

namespace {

RuleSpec analog_version(const RuleSpec& rule) {
    if (rule.is_analog()) return rule;
    if (rule.family == RuleFamily::digital_t) {
        return make_analog_t_rule(rule.rule_number, ActivationSpec::pauli_x(), rule.boundary);
    }
    throw std::domain_error("rule " + rule.label() + " has no analog counterpart");
}

double deviation_for(const RuleSpec& rule, const RydbergOptions& options, int num_sites,
                     const std::vector<double>& offsets, const Trajectory& reference) {
    auto params = ising_to_rydberg(rule_to_ising(rule), geometry_for(rule), num_sites);
    params.boundary_deltas = offsets;
    const auto h = build_rydberg_hamiltonian(params, num_sites, options.include_higher_order);
    const auto traj = rydberg_run(h, rydberg_initial_state(rule, num_sites), options.total_time, options.dt,
                                  options.stride);
    return compare_traces(reference, traj, options.total_time);
}

}  // namespace

Trajectory qca_reference(const RuleSpec& rule, const RydbergOptions& options, int num_sites) {
    EvolutionConfig ev;
    ev.rule = analog_version(rule);
    ev.rule.boundary = BoundarySpec{};
    ev.num_sites = num_sites;
    ev.total_time = options.total_time;
    ev.dt = options.qca_dt;
    ev.measurement_stride = options.stride;
    ev.initial_state = rydberg_initial_state(rule, num_sites);
    return run(ev, MeasurementSet::one_point_only());
}

std::vector<double> solve_boundary_detuning(const RuleSpec& rule, const RydbergOptions& options) {
    const auto analog = analog_version(rule);
    const int n = options.solve_sites;
    const auto reference = qca_reference(analog, options, n);
    auto offsets = ising_to_rydberg(rule_to_ising(analog), geometry_for(analog), n).boundary_deltas;
    const double v_a = kBlockadeEnergy;
    auto objective = [&](const std::vector<double>& x) { return deviation_for(analog, options, n, x, reference); };

    constexpr double kGolden = 0.6180339887498949;
    double best = objective(offsets);
    for (int sweep = 0; sweep < 3; ++sweep) {
        for (std::size_t d = 0; d < offsets.size(); ++d) {
            const double width = sweep == 0 ? v_a : v_a / (4.0 * sweep);
            double lo = offsets[d] - width, hi = offsets[d] + width;
            auto at = [&](double v) {
                auto x = offsets;
                x[d] = v;
                return objective(x);
            };
            double x1 = hi - kGolden * (hi - lo), x2 = lo + kGolden * (hi - lo);
            double f1 = at(x1), f2 = at(x2);
            for (int it = 0; it < 24; ++it) {
                if (f1 < f2) {
                    hi = x2;
                    x2 = x1;
                    f2 = f1;
                    x1 = hi - kGolden * (hi - lo);
                    f1 = at(x1);
                } else {
                    lo = x1;
                    x1 = x2;
                    f1 = f2;
                    x2 = lo + kGolden * (hi - lo);
                    f2 = at(x2);
                }
            }
            const double cand = f1 < f2 ? x1 : x2;
            const double fc = std::min(f1, f2);
            if (fc < best) {
                best = fc;
                offsets[d] = cand;
            }
        }
    }
    return offsets;
}

RydbergComparison compare_rule(const RuleSpec& rule, const RydbergOptions& options,
                               const std::optional<std::vector<double>>& boundary_deltas) {
    RydbergComparison out;
    out.rule = analog_version(rule);
    const int n = options.num_sites;
    out.params = ising_to_rydberg(rule_to_ising(out.rule), geometry_for(out.rule), n);
    out.params.boundary_deltas = boundary_deltas ? *boundary_deltas : solve_boundary_detuning(out.rule, options);
    const auto h = build_rydberg_hamiltonian(out.params, n, options.include_higher_order);
    out.qca = qca_reference(out.rule, options, n);
    out.rydberg = rydberg_run(h, rydberg_initial_state(out.rule, n), options.total_time, options.dt, options.stride);
    out.deviation = compare_traces(out.qca, out.rydberg, options.total_time);
    return out;
}

}  // namespace qca
