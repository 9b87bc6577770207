#include "qca/evolve.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace qca {

std::vector<NeighborLeg> neighborhood_legs(int num_sites, int site, int radius, BoundarySpec boundary) {
    if (site < 0 || site >= num_sites) throw std::out_of_range("neighborhood center outside the chain");
    if (boundary.kind == BoundaryKind::periodic && num_sites < 2 * radius + 1) {
        throw std::invalid_argument("periodic chains need at least 2r + 1 sites");
    }
    std::vector<NeighborLeg> legs;
    legs.reserve(2 * radius);
    for (int d = -radius; d <= radius; ++d) {
        if (d == 0) continue;
        const int s = site + d;
        if (s >= 0 && s < num_sites) {
            legs.push_back(NeighborLeg::real(s));
        } else if (boundary.kind == BoundaryKind::periodic) {
            legs.push_back(NeighborLeg::real(((s % num_sites) + num_sites) % num_sites));
        } else {
            legs.push_back(NeighborLeg::virtual_site(boundary.pinned_bit()));
        }
    }
    return legs;
}

Matrix2 exp_hermitian2(const Matrix2& h, double theta) {
    const double a0 = 0.5 * (h(0, 0).real() + h(1, 1).real());
    const double az = 0.5 * (h(0, 0).real() - h(1, 1).real());
    const double ax = h(0, 1).real();
    const double ay = -h(0, 1).imag();
    const double norm = std::sqrt(ax * ax + ay * ay + az * az);
    const complex phase = std::polar(1.0, -theta * a0);
    if (norm == 0.0) return phase * Matrix2::Identity();
    const Matrix2 n_sigma = (ax * pauli::x() + ay * pauli::y() + az * pauli::z()) / norm;
    return phase * (std::cos(theta * norm) * Matrix2::Identity() - complex(0, std::sin(theta * norm)) * n_sigma);
}

namespace {

ConditionedOp analog_table(const std::vector<double>& weights, const Matrix2& h, double tau) {
    ConditionedOp op;
    for (double w : weights) {
        op.blocks.push_back(exp_hermitian2(w * h, tau));
        op.active.push_back(w != 0.0 ? 1 : 0);
    }
    return op;
}

}  // namespace

DigitalPropagator::DigitalPropagator(const RuleSpec& rule, int num_sites) : num_sites_(num_sites) {
    if (rule.family != RuleFamily::digital_t) throw std::invalid_argument("digital propagation needs a T rule");
    if (!rule.activation.is_unitary()) throw std::logic_error("digital activation must be unitary");
    const Matrix2 v = rule.activation.matrix();
    for (double c : rule.config_weights()) {
        op_.blocks.push_back(c != 0.0 ? v : Matrix2::Identity());
        op_.active.push_back(c != 0.0 ? 1 : 0);
    }
    for (int j = 0; j < num_sites; ++j) legs_.push_back(neighborhood_legs(num_sites, j, 1, rule.boundary));
    // Sweeps run left to right. Consecutive targets outside each other's legs
    // commute and are batched; a periodic wrap can break a sweep in two.
    for (int parity = 0; parity < 2; ++parity) {
        for (int j = parity; j < num_sites; j += 2) {
            const auto touches = [&](int a, int b) {
                return std::any_of(legs_[a].begin(), legs_[a].end(), [b](const NeighborLeg& l) { return l.site == b; });
            };
            bool conflict = sweeps_.empty() || (j == parity);
            if (!conflict) {
                for (int k : sweeps_.back().targets) conflict = conflict || touches(j, k) || touches(k, j);
            }
            if (conflict) sweeps_.emplace_back();
            sweeps_.back().targets.push_back(j);
            sweeps_.back().legs.push_back(legs_[j]);
        }
    }
}

void DigitalPropagator::step(StateVector& state) const {
    if (state.num_sites() != num_sites_) throw std::invalid_argument("state size does not match propagator");
    for (const auto& batch : sweeps_) apply_conditioned_layer(state, batch.targets, batch.legs, op_);
}

void digital_step(StateVector& state, const RuleSpec& rule) { DigitalPropagator(rule, state.num_sites()).step(state); }

std::vector<double> perturbed_weights(const RuleSpec& base, const Perturbation& pert) {
    if (pert.epsilon < 0.0) throw std::domain_error("perturbation strength must be non-negative");
    if (base.radius != pert.rule.radius) throw std::domain_error("perturbation rule radius does not match base rule");
    if ((base.activation.matrix() - pert.rule.activation.matrix()).cwiseAbs().maxCoeff() > 0.0) {
        throw std::domain_error("perturbation rule activation does not match base rule");
    }
    auto w = base.config_weights();
    const auto p = pert.rule.config_weights();
    for (std::size_t c = 0; c < w.size(); ++c) w[c] += pert.epsilon * p[c];
    return w;
}

std::vector<std::vector<int>> commuting_layers(int num_sites, int radius, BoundarySpec boundary) {
    const int stride = radius + 1;
    int regular = num_sites;
    if (boundary.kind == BoundaryKind::periodic) regular = num_sites - num_sites % stride;
    std::vector<std::vector<int>> layers(std::min(stride, num_sites));
    for (int j = 0; j < regular; ++j) layers[j % stride].push_back(j);
    for (int j = regular; j < num_sites; ++j) layers.push_back({j});
    std::erase_if(layers, [](const auto& l) { return l.empty(); });
    return layers;
}

AnalogPropagator::AnalogPropagator(std::vector<double> weights, const Matrix2& activation, int radius,
                                   BoundarySpec boundary, int num_sites, double dt, Splitting splitting)
    : num_sites_(num_sites), dt_(dt), splitting_(splitting) {
    if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
    if ((activation - activation.adjoint()).cwiseAbs().maxCoeff() > kSingleApplyTolerance) {
        throw std::logic_error("analog activation must be Hermitian");
    }
    if (weights.size() != (std::size_t{1} << (2 * radius))) {
        throw std::invalid_argument("weight table must have 2^(2r) entries");
    }
    layers_ = commuting_layers(num_sites, radius, boundary);
    for (int j = 0; j < num_sites; ++j) legs_.push_back(neighborhood_legs(num_sites, j, radius, boundary));
    for (const auto& layer : layers_) {
        layer_legs_.emplace_back();
        for (int j : layer) layer_legs_.back().push_back(legs_[j]);
    }
    full_ = analog_table(weights, activation, dt);
    half_ = analog_table(weights, activation, 0.5 * dt);
}

AnalogPropagator AnalogPropagator::from_rule(const RuleSpec& rule, int num_sites, double dt, Splitting splitting,
                                             const std::optional<Perturbation>& perturbation) {
    if (!rule.is_analog()) throw std::invalid_argument("analog propagation needs an analog rule");
    auto weights = perturbation ? perturbed_weights(rule, *perturbation) : rule.config_weights();
    return AnalogPropagator(std::move(weights), rule.activation.matrix(), rule.radius, rule.boundary, num_sites, dt,
                            splitting);
}

void AnalogPropagator::apply_layer(StateVector& state, std::size_t layer, const ConditionedOp& op) const {
    apply_conditioned_layer(state, layers_[layer], layer_legs_[layer], op);
}

void AnalogPropagator::advance(StateVector& state, long steps) const {
    if (state.num_sites() != num_sites_) throw std::invalid_argument("state size does not match propagator");
    if (steps <= 0) return;
    const std::size_t n = layers_.size();
    if (splitting_ == Splitting::lie || n == 1) {
        for (long s = 0; s < steps; ++s) {
            for (std::size_t l = 0; l < n; ++l) apply_layer(state, l, full_);
        }
        return;
    }
    // Strang: [0..n-2](dt/2) (n-1)(dt) [n-2..0](dt/2); the trailing and leading
    // layer-0 halves of consecutive steps fuse into one full layer-0 update.
    apply_layer(state, 0, half_);
    for (long s = 0; s < steps; ++s) {
        for (std::size_t l = 1; l + 1 < n; ++l) apply_layer(state, l, half_);
        apply_layer(state, n - 1, full_);
        for (std::size_t l = n - 2; l >= 1; --l) apply_layer(state, l, half_);
        apply_layer(state, 0, s + 1 < steps ? full_ : half_);
    }
}

void analog_step(StateVector& state, const RuleSpec& rule, double dt, Splitting splitting) {
    AnalogPropagator::from_rule(rule, state.num_sites(), dt, splitting).step(state);
}

StateVector InitialState::build(int num_sites) const {
    if (random_seed) return random_state(num_sites, *random_seed);
    if (static_cast<int>(product.size()) != num_sites) {
        throw std::invalid_argument("initial product state has " + std::to_string(product.size()) +
                                    " sites, expected " + std::to_string(num_sites));
    }
    return product_state(product);
}

InitialState InitialState::bits(const std::vector<int>& b) {
    InitialState s;
    for (int v : b) s.product.push_back(QubitSpec::from_bit(v));
    return s;
}

InitialState InitialState::single_center(int num_sites) {
    std::vector<int> b(num_sites, 0);
    b[num_sites / 2] = 1;
    return bits(b);
}

InitialState InitialState::center_101(int num_sites) {
    if (num_sites < 3) throw std::invalid_argument("|101> initial state needs at least 3 sites");
    std::vector<int> b(num_sites, 0);
    b[num_sites / 2 - 1] = 1;
    b[num_sites / 2 + 1] = 1;
    return bits(b);
}

namespace {

long integral_ratio(double a, double b, const char* what) {
    const double r = a / b;
    const long n = std::lround(r);
    if (std::abs(r - static_cast<double>(n)) > 1e-9 * std::max(1.0, r)) {
        throw std::invalid_argument(std::string(what) + " must be an integer multiple");
    }
    return n;
}

}  // namespace

void EvolutionConfig::validate() const {
    if (num_sites < 1) throw std::invalid_argument("num_sites must be positive");
    if (!(total_time >= 0.0)) throw std::invalid_argument("total_time must be non-negative");
    if (!(measurement_stride > 0.0)) throw std::invalid_argument("measurement_stride must be positive");
    if (rule.family == RuleFamily::classical_eca) throw std::invalid_argument("classical rules are evolved by eca_evolve");
    integral_ratio(total_time, measurement_stride, "total_time / measurement_stride");
    if (rule.is_digital()) {
        integral_ratio(measurement_stride, 1.0, "digital measurement_stride");
        if (perturbation) throw std::invalid_argument("perturbations apply to analog rules only");
    } else {
        if (!(dt > 0.0 && dt <= 1.0)) throw std::invalid_argument("dt must lie in (0, 1]");
        integral_ratio(measurement_stride, dt, "measurement_stride / dt");
        if (perturbation && perturbation->epsilon < 0.0) throw std::invalid_argument("epsilon must be non-negative");
    }
}

StateVector evolve(const EvolutionConfig& config, const SampleCallback& on_sample) {
    config.validate();
    StateVector state = config.initial_state.build(config.num_sites);
    const long samples = integral_ratio(config.total_time, config.measurement_stride, "total_time");
    auto emit = [&](long k) {
        const double t = k * config.measurement_stride;
        if (on_sample && t + 1e-9 >= config.sample_from) on_sample(t, state);
    };
    emit(0);
    if (config.rule.is_digital()) {
        const DigitalPropagator prop(config.rule, config.num_sites);
        const long per_sample = std::lround(config.measurement_stride);
        for (long k = 1; k <= samples; ++k) {
            for (long s = 0; s < per_sample; ++s) prop.step(state);
            emit(k);
        }
    } else {
        const auto prop = AnalogPropagator::from_rule(config.rule, config.num_sites, config.dt, config.splitting,
                                                      config.perturbation);
        const long per_sample = integral_ratio(config.measurement_stride, config.dt, "measurement_stride / dt");
        for (long k = 1; k <= samples; ++k) {
            prop.advance(state, per_sample);
            emit(k);
        }
    }
    return state;
}

Trajectory run(const EvolutionConfig& config, const MeasurementSet& what) {
    Trajectory traj;
    evolve(config, [&](double t, const StateVector& state) {
        traj.times.push_back(t);
        traj.records.push_back(measure(state, t, what));
    });
    return traj;
}

std::vector<double> Trajectory::p1_series(int site) const {
    std::vector<double> out;
    out.reserve(records.size());
    for (const auto& r : records) out.push_back(r.p1.at(site));
    return out;
}

std::vector<double> Trajectory::sigma_z_series(int site) const {
    std::vector<double> out;
    out.reserve(records.size());
    for (const auto& r : records) out.push_back(r.sigma_z.at(site));
    return out;
}

double zz_bond_sum(const StateVector& state, BoundarySpec boundary) {
    const int n = state.num_sites();
    double total = 0.0;
    for (int j = 0; j + 1 < n; ++j) total += zz_correlation(state, j, j + 1);
    if (boundary.kind == BoundaryKind::periodic) {
        if (n > 2) total += zz_correlation(state, n - 1, 0);
    } else {
        const double pinned = boundary.pinned_bit() ? -1.0 : 1.0;
        total += pinned * expectation(state, 0, pauli::z());
        total += pinned * expectation(state, n - 1, pauli::z());
    }
    return total;
}

}  // namespace qca
